#pragma once

#include "fgmm/inference.hpp"
#include "fgmm/model.hpp"
#include "fgmm/objective.hpp"
#include "fgmm/penalty.hpp"
#include "fgmm/report.hpp"
#include "fgmm/simulation.hpp"
#include "fgmm/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fgmm::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kNonconvergence = 3 };

// One row group of a simulation: a method and the penalty levels it runs at.
struct MethodGrid {
  sim::MethodSpec::Kind kind = sim::MethodSpec::Kind::FGMM;
  PenaltyFamily penalty = PenaltyFamily::SCAD;
  std::optional<double> shape;
  std::vector<double> lambdas;
};

struct RunConfig {
  enum class Mode { Fit, Simulate };

  Mode mode = Mode::Fit;
  std::optional<std::string> data_path;  // fit mode
  std::optional<sim::DgpSpec> design;    // simulate mode
  std::string recipe = "self";           // fit mode: self | fourier
  LinkFamily family = LinkFamily::Linear;

  // Fit mode penalty grid.
  PenaltyFamily penalty = PenaltyFamily::SCAD;
  std::optional<double> shape;
  std::vector<double> lambdas{0.1};

  // Simulate mode method grid.
  std::vector<MethodGrid> methods;

  double kernel_h = SmoothingKernel::kDefaultBandwidth;
  SmoothingKernel::Cdf kernel_cdf = SmoothingKernel::Cdf::Logistic;
  SolverConfig solver;

  bool sandwich = true;
  bool post_fgmm = true;
  OptimalInstrumentVariant variant = OptimalInstrumentVariant::Homoskedastic;

  std::string out_dir = "out";
  std::uint64_t seed = 20240601;
  int workers = 1;
  int reps = 100;

  // Throws InputError with the offending field path.
  void validate() const;
};

// Reads a config object; unknown keys are rejected. Errors name the field path.
RunConfig parse_config(const Json& doc, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

PenaltySpec make_penalty(PenaltyFamily family, double lambda, std::optional<double> shape);

// Both return an ExitCode and print a summary to `out`, diagnostics to `err`.
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

// Full command line: --config, flag overrides, dispatch on mode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fgmm::cli
