#pragma once

#include "fgmm/instruments.hpp"
#include "fgmm/model.hpp"
#include "fgmm/objective.hpp"
#include "fgmm/penalty.hpp"
#include "fgmm/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fgmm::sim {

// Monte Carlo designs. All three share beta_S = (5, -4, 7, -2, 1.5) on the
// first five regressors except WeakSignal, which uses (5, -4, 7, -0.5, 0.1).
//
//   MixedEndogeneity(p, m): W ~ N3(0, I); F, H are the Fourier sieve of W;
//     endogenous X_j = (F_j + H_j + 1)(3 eps + 1) for j in {1,2,3,6..2+m},
//     exogenous X_j = F_j + H_j + u_j otherwise (1-based).
//   UnimportantEndogeneity(p): Z ~ N_p(0, 0.5^|i-j|); X_j = Z_j for j <= 5,
//     X_j = (Z_j + 5)(1 + eps) for j >= 6; instruments are X itself.
//   WeakSignal(p, m): MixedEndogeneity with the weak beta_S above.
struct DgpSpec {
  enum class Variant { MixedEndogeneity, UnimportantEndogeneity, WeakSignal };

  Variant variant = Variant::UnimportantEndogeneity;
  Index p = 50;
  Index m = 10;
  Index n = 200;
  std::uint64_t seed = 1;

  void validate() const;
  InstrumentRecipe recipe() const;
};

std::string to_string(DgpSpec::Variant v);
DgpSpec::Variant parse_dgp_variant(const std::string& name);

struct GeneratedData {
  Dataset data;
  Coefficients true_beta;
  std::vector<Index> endogenous;  // 0-based
};

GeneratedData generate(const DgpSpec& spec);

// Seed of replication r, derived from the master seed alone.
std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication);

struct Metrics {
  double mse_s = 0.0;  // |b_S - b0_S|
  double mse_n = 0.0;  // |b_N|
  int tp = 0;
  int fp = 0;
};

Metrics score(const Coefficients& fitted, const Coefficients& truth);

struct MethodSpec {
  enum class Kind { PLS, FGMM, PostFGMM };
  Kind kind;
  PenaltySpec penalty;
};

std::string to_string(MethodSpec::Kind k);
MethodSpec::Kind parse_method_kind(const std::string& name);

struct ReplicationRecord {
  bool ok = true;
  Metrics metrics;
  int sweeps = 0;
  bool converged = true;
  bool trace_nonincreasing = true;
  std::string error;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation across replications
};

struct ReplicationReport {
  MethodSpec method;
  std::vector<ReplicationRecord> per_rep;
  int failures = 0;
  int nonconverged = 0;
  int trace_violations = 0;
  Summary mse_s, mse_n, tp, fp;
  double elapsed_seconds = 0.0;

  std::string label() const;
};

struct ExperimentOptions {
  SmoothingKernel kernel{};
  SolverConfig solver{};
};

// Replication r runs on generate(spec with seed replication_seed(spec.seed, r));
// PostFGMM rows reuse the support of the same-penalty FGMM fit in that
// replication. Replications run on `workers` OpenMP threads; results do not
// depend on the worker count.
std::vector<ReplicationReport> run_experiment(const DgpSpec& spec, const std::vector<MethodSpec>& methods, int reps,
                                              int workers, const ExperimentOptions& options = {});

// Plain loop over replications; the reference the parallel runner is tested against.
std::vector<ReplicationReport> run_experiment_serial(const DgpSpec& spec, const std::vector<MethodSpec>& methods,
                                                     int reps, const ExperimentOptions& options = {});

bool nonincreasing(const std::vector<double>& trace);

}  // namespace fgmm::sim
