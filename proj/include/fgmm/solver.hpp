#pragma once

#include "fgmm/instruments.hpp"
#include "fgmm/model.hpp"
#include "fgmm/objective.hpp"
#include "fgmm/penalty.hpp"

#include <vector>

namespace fgmm {

struct SolverConfig {
  double epsilon = 1e-8;       // stop once a sweep changes Q_K by less than this
  int max_sweeps = 500;
  double pls_lambda = 0.5;     // SCAD level of the penalized least squares warm start
  double zero_clamp = 1e-8;    // accepted magnitudes below this become exact zeros
  int backtrack_steps = 10;    // step halvings tried after a rejected model step
  // Coordinate visiting order; empty means ascending 0..p-1.
  std::vector<Index> sweep_order;

  void validate(Index p) const;
};

struct SolverDiagnostics {
  long accepted_updates = 0;
  long rejected_updates = 0;
  long backtracked_updates = 0;
  long clamped_to_zero = 0;
  long curvature_fallbacks = 0;   // golden-section searches after g2 <= 0
  long monotonicity_violations = 0;
  int warm_start_sweeps = 0;
};

struct FitResult {
  Coefficients beta;
  // Criterion value at the starting point followed by one entry per sweep.
  std::vector<double> objective_trace;
  int sweeps_used = 0;
  bool converged = false;
  // Exact (unsmoothed) penalized criterion at beta; for PLS fits this is the
  // penalized least squares criterion.
  double final_exact_objective = 0.0;
  SolverDiagnostics diagnostics;
};

// Penalized least squares: min (1/n) sum g(y_i, x_i'b)^2 + sum P(|b_j|) by
// coordinate descent from b = 0.
FitResult fit_pls(LinkFamily family, const Dataset& data, const PenaltySpec& penalty, const SolverConfig& config);

// Smoothed FGMM coordinate descent warm-started from SCAD(pls_lambda) PLS.
FitResult fit_fgmm(const ObjectiveContext& ctx, const SolverConfig& config);

// Same as fit_fgmm but starting from a given point instead of the PLS fit.
FitResult fit_fgmm_from(const ObjectiveContext& ctx, const SolverConfig& config, const Vector& start);

// build_instruments -> ObjectiveContext -> fit_fgmm.
FitResult fit(LinkFamily family, const Dataset& data, const InstrumentRecipe& recipe, const PenaltySpec& penalty,
              const SmoothingKernel& kernel, const SolverConfig& config);

// Penalized least squares criterion at beta.
double pls_objective(LinkFamily family, const Dataset& data, const PenaltySpec& penalty, const Vector& beta);

}  // namespace fgmm
