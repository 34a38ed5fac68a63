#pragma once

#include "fgmm/model.hpp"
#include "fgmm/objective.hpp"
#include "fgmm/solver.hpp"

#include <vector>

namespace fgmm {

// Plug-in sandwich covariance of the first-stage estimator on its support S.
//   A     = (1/n) sum m_i X_iS V_iS'          (s x 2s)
//   Ups   = sample covariance of g_i V_iS     (2s x 2s)
//   Gamma = 4 A J Ups J A',  Sigma = 2 A J A'
//   cov   = Sigma^-1 Gamma Sigma^-1 / n
// with V_iS = (F_iS', H_iS')' and J the diagonal weight matrix.
struct SandwichEstimate {
  std::vector<Index> support;
  Matrix a_hat;
  Matrix upsilon_hat;
  Matrix gamma_hat;
  Matrix sigma_hat;
  Matrix cov_beta;
};

SandwichEstimate sandwich_covariance(const ObjectiveContext& ctx, const FitResult& fit);

enum class OptimalInstrumentVariant { Homoskedastic, LinearProjection };

// Estimated optimal instruments D(w) = Pi w and a constant conditional
// variance sigma^2, both evaluated on the sample rows.
struct OptimalInstruments {
  Matrix pi;        // s x q', rows map a basis row to D(w)
  double sigma2 = 1.0;
  Matrix d_hat;     // n x s, D(W_i) for each observation
  Vector sigma2_hat;  // n, sigma^2(W_i)

  Vector d_at(const Eigen::Ref<const Vector>& basis_row) const { return pi * basis_row; }
};

// Pi = (X_S' Wb)(Wb' Wb)^-1 from regressing the selected regressors on the
// rows of `basis` (n x q'; pass data.w() for the raw instruments).
//   Homoskedastic    : sigma^2 = mean g(y, X_S b_first)^2 at the first stage.
//   LinearProjection : sigma^2 = mean squared residual of the linear IV fit
//                      that uses D as instruments (linear family only).
OptimalInstruments estimate_optimal_instruments(OptimalInstrumentVariant variant, LinkFamily family,
                                                const Dataset& data, const std::vector<Index>& support,
                                                const Matrix& basis, const Vector& first_stage_beta_s);

struct PostFgmmOptions {
  double bound = 1e6;        // |b_j| <= bound
  int max_iterations = 100;
  int max_backtracks = 50;
  double armijo = 1e-4;
  double tolerance = 1e-10;  // on |rho_n|
};

struct EfficientStepResult {
  std::vector<Index> support;
  Vector beta_star;
  Matrix cov_star;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Solves rho_n(b) = (1/n) sum g(y_i, X_iS'b) sigma_i^-2 D_i = 0 by damped
// Newton on 0.5 |rho_n|^2 starting from `start`.
EfficientStepResult post_fgmm(LinkFamily family, const Dataset& data, const std::vector<Index>& support,
                              const Matrix& d_hat, const Vector& sigma2_hat, const Vector& start,
                              const PostFgmmOptions& options = {});

// Columns [1, F_S, H_S] of the working instruments on a support; the basis
// the simulation harness projects on for the post-selection step.
Matrix sieve_projection_basis(const InstrumentSet& inst, const std::vector<Index>& support);

// Embeds coefficients on `support` into a length-p vector.
Vector embed(const Vector& beta_s, const std::vector<Index>& support, Index p);

}  // namespace fgmm
