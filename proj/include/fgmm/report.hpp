#pragma once

#include "fgmm/inference.hpp"
#include "fgmm/model.hpp"
#include "fgmm/simulation.hpp"
#include "fgmm/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fgmm {

using Json = nlohmann::ordered_json;

// Coordinates in serialized output are 1-based, matching the CSV column names.
Json to_json(const FitResult& fit);
Json to_json(const SandwichEstimate& est);
Json to_json(const EfficientStepResult& step);
Json to_json(const SolverConfig& config);
Json to_json(const SmoothingKernel& kernel);

// %.17g, which round-trips every finite double.
std::string format_double(double v);

// Deterministic: contains no timing, hostnames or worker counts.
Json simulation_report(const sim::DgpSpec& spec, int reps, const sim::ExperimentOptions& options,
                       const std::vector<sim::ReplicationReport>& reports);

// One row per method x penalty, metric means and cross-replication SDs.
std::string simulation_csv(const std::vector<sim::ReplicationReport>& reports);

// Header `y,x1,...,xp[,w1,...,wq]`. Without w columns the regressors double
// as instruments. Throws InputError naming the line and column on bad input.
Dataset read_dataset_csv(const std::filesystem::path& path);
Dataset parse_dataset_csv(const std::string& text);

// Writes with 17 significant digits, so read_dataset_csv reproduces the data
// bit for bit. The w block is written only when `with_instruments` is set.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool with_instruments);
std::string dataset_csv(const Dataset& data, bool with_instruments);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fgmm
