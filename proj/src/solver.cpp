#include "fgmm/solver.hpp"

#include "fgmm/error.hpp"
#include "fgmm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fgmm {

void SolverConfig::validate(Index p) const {
  if (!(epsilon > 0.0)) throw DomainError("solver epsilon must be positive");
  if (max_sweeps < 1) throw DomainError("solver max_sweeps must be at least 1");
  if (!(pls_lambda > 0.0)) throw DomainError("solver pls_lambda must be positive");
  if (!(zero_clamp >= 0.0)) throw DomainError("solver zero_clamp must be nonnegative");
  if (backtrack_steps < 0) throw DomainError("solver backtrack_steps must be nonnegative");
  if (!sweep_order.empty()) {
    std::vector<Index> sorted = sweep_order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Index> expected(static_cast<std::size_t>(p));
    std::iota(expected.begin(), expected.end(), Index{0});
    if (sorted != expected) throw DomainError("solver sweep_order must be a permutation of 0..p-1");
  }
}

namespace {

std::vector<Index> visiting_order(const SolverConfig& config, Index p) {
  if (!config.sweep_order.empty()) return config.sweep_order;
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  return order;
}

// Golden-section minimization of a unimodal-ish f on [lo, hi].
template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

// Left-to-right sum of squares, matching the trial evaluation in
// LeastSquaresState::value_with term for term.
double sequential_sum_sq(const Vector& r) {
  double ss = 0.0;
  for (Index i = 0; i < r.size(); ++i) ss += r[i] * r[i];
  return ss;
}

// Squared-residual loss state for PLS. The linear family is updated through
// the residual vector; other families carry the linear index.
class LeastSquaresState {
 public:
  LeastSquaresState(LinkFamily family, const Dataset& data, const PenaltySpec& penalty)
      : family_(family), data_(data), penalty_(penalty), beta_(Vector::Zero(data.p())), eta_(Vector::Zero(data.n())) {
    col_sq_ = data.x().colwise().squaredNorm().transpose();
    recompute();
  }

  const Vector& beta() const { return beta_; }
  double value() const { return loss_ + penalty_sum(penalty_, beta_); }

  // Proposed new value for coordinate k (may equal the current one).
  double propose(Index k, SolverDiagnostics& diag) const {
    const double nn = static_cast<double>(data_.n());
    if (col_sq_[k] == 0.0) return beta_[k];
    const auto xk = data_.x().col(k);
    if (family_ == LinkFamily::Linear) {
      // Exact coordinate minimizer: curvature 2|x_k|^2/n around z.
      const double z = beta_[k] + xk.dot(r_) / col_sq_[k];
      return scalar_prox(penalty_, z, 2.0 * col_sq_[k] / nn);
    }
    double g1 = 0.0, g2 = 0.0, gn = 0.0;
    for (Index i = 0; i < data_.n(); ++i) {
      const double y = data_.y()[i];
      const double m = m_value(family_, y, eta_[i]);
      const double q = q_value(family_, y, eta_[i]);
      const double x = xk[i];
      g1 += r_[i] * m * x;
      g2 += (m * m + r_[i] * q) * x * x;
      gn += m * m * x * x;
    }
    g1 *= 2.0 / nn;
    g2 *= 2.0 / nn;
    gn *= 2.0 / nn;
    if (!(g2 > 0.0)) {
      ++diag.curvature_fallbacks;
      g2 = gn;  // Gauss-Newton curvature is never negative
    }
    if (!(g2 > 0.0) || !std::isfinite(g1)) return beta_[k];
    return scalar_prox(penalty_, beta_[k] - g1 / g2, g2);
  }

  // Criterion with coordinate k set to t.
  double value_with(Index k, double t) const {
    const double delta = t - beta_[k];
    const auto xk = data_.x().col(k);
    double ss = 0.0;
    if (family_ == LinkFamily::Linear) {
      for (Index i = 0; i < data_.n(); ++i) {
        const double ri = r_[i] - delta * xk[i];
        ss += ri * ri;
      }
    } else {
      for (Index i = 0; i < data_.n(); ++i) {
        const double ri = g_value(family_, data_.y()[i], eta_[i] + delta * xk[i]);
        ss += ri * ri;
      }
    }
    double pen = 0.0;
    for (Index j = 0; j < beta_.size(); ++j) pen += penalty_value(penalty_, std::abs(j == k ? t : beta_[j]));
    return ss / static_cast<double>(data_.n()) + pen;
  }

  void set(Index k, double t) {
    const double delta = t - beta_[k];
    const auto xk = data_.x().col(k);
    for (Index i = 0; i < data_.n(); ++i) eta_[i] += delta * xk[i];
    beta_[k] = t;
    if (family_ == LinkFamily::Linear) {
      for (Index i = 0; i < data_.n(); ++i) r_[i] -= delta * xk[i];
    } else {
      for (Index i = 0; i < data_.n(); ++i) r_[i] = g_value(family_, data_.y()[i], eta_[i]);
    }
    loss_ = sequential_sum_sq(r_) / static_cast<double>(data_.n());
  }

 private:
  void recompute() {
    r_.resize(data_.n());
    for (Index i = 0; i < data_.n(); ++i) r_[i] = g_value(family_, data_.y()[i], eta_[i]);
    loss_ = sequential_sum_sq(r_) / static_cast<double>(data_.n());
  }

  LinkFamily family_;
  const Dataset& data_;
  PenaltySpec penalty_;
  Vector beta_;
  Vector eta_;
  Vector r_;
  Vector col_sq_;
  double loss_ = 0.0;
};

// Accept `target` for coordinate k if it strictly lowers the criterion, else
// try points halfway back towards the current value. Returns true on update.
template <class State>
bool try_update(State& state, Index k, double target, const SolverConfig& config, SolverDiagnostics& diag) {
  const double current = state.beta()[k];
  if (target == current) return false;
  const double base = state.value();
  double t = target;
  for (int step = 0; step <= config.backtrack_steps; ++step) {
    double v = state.value_with(k, t);
    if (v < base) {
      if (t != 0.0 && std::abs(t) < config.zero_clamp) {
        const double v0 = state.value_with(k, 0.0);
        if (v0 <= v) {
          t = 0.0;
          v = v0;
          ++diag.clamped_to_zero;
        }
      }
      state.set(k, t);
      ++diag.accepted_updates;
      if (step > 0) ++diag.backtracked_updates;
      if (!(state.value() < base)) ++diag.monotonicity_violations;
      return true;
    }
    t = current + 0.5 * (t - current);
    if (t == current) break;
  }
  ++diag.rejected_updates;
  return false;
}

template <class State, class Step>
void run_sweeps(State& state, const std::vector<Index>& order, const SolverConfig& config, Step&& step,
                FitResult& out) {
  out.objective_trace.push_back(state.value());
  for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
    for (const Index k : order) step(k);
    const double q = state.value();
    if (!std::isfinite(q)) throw NumericError("non-finite objective after sweep " + std::to_string(sweep));
    const double prev = out.objective_trace.back();
    out.objective_trace.push_back(q);
    out.sweeps_used = sweep;
    if (std::abs(prev - q) < config.epsilon) {
      out.converged = true;
      break;
    }
  }
}

}  // namespace

double pls_objective(LinkFamily family, const Dataset& data, const PenaltySpec& penalty, const Vector& beta) {
  const Vector r = residuals(family, data, Coefficients(beta));
  return r.squaredNorm() / static_cast<double>(data.n()) + penalty_sum(penalty, beta);
}

FitResult fit_pls(LinkFamily family, const Dataset& data, const PenaltySpec& penalty, const SolverConfig& config) {
  config.validate(data.p());
  LeastSquaresState state(family, data, penalty);
  FitResult out;
  const auto order = visiting_order(config, data.p());
  run_sweeps(
      state, order, config,
      [&](Index k) { try_update(state, k, state.propose(k, out.diagnostics), config, out.diagnostics); }, out);
  out.beta = Coefficients(state.beta());
  out.final_exact_objective = pls_objective(family, data, penalty, state.beta());
  return out;
}

FitResult fit_fgmm_from(const ObjectiveContext& ctx, const SolverConfig& config, const Vector& start) {
  config.validate(ctx.data().p());
  SmoothedObjective state(ctx, start);
  const PenaltySpec& pen = ctx.penalty();
  const bool exact_prox = pen.family() == PenaltyFamily::SCAD;
  FitResult out;

  const auto step = [&](Index k) {
    const double bk = state.beta()[k];
    const CoordinateModel cm = state.coordinate_model(k);
    double target = bk;
    if (cm.g2 > 0.0) {
      const double z = bk - cm.g1 / cm.g2;
      if (exact_prox) {
        target = scalar_prox(pen, z, cm.g2);
      } else {
        // Local linear approximation of the penalty at the current value.
        const double slope = penalty_derivative(pen, std::abs(bk));
        target = slope > 0.0 ? scalar_prox(PenaltySpec::l1(slope), z, cm.g2) : z;
      }
    } else {
      ++out.diagnostics.curvature_fallbacks;
      const double half_width = std::max(1.0, 2.0 * std::abs(bk));
      const auto along = [&](double t) { return state.value_with(k, t); };
      target = golden_section(along, bk - half_width, bk + half_width, 1e-10 * (1.0 + std::abs(bk)));
      if (state.value_with(k, 0.0) <= state.value_with(k, target)) target = 0.0;
    }
    try_update(state, k, target, config, out.diagnostics);
  };

  run_sweeps(state, visiting_order(config, ctx.data().p()), config, step, out);
  out.beta = Coefficients(state.beta());
  out.final_exact_objective = penalized_fgmm(ctx, out.beta);
  return out;
}

FitResult fit_fgmm(const ObjectiveContext& ctx, const SolverConfig& config) {
  config.validate(ctx.data().p());
  const FitResult warm = fit_pls(ctx.family(), ctx.data(), PenaltySpec::scad(config.pls_lambda), config);
  FitResult out = fit_fgmm_from(ctx, config, warm.beta.values());
  out.diagnostics.warm_start_sweeps = warm.sweeps_used;
  return out;
}

FitResult fit(LinkFamily family, const Dataset& data, const InstrumentRecipe& recipe, const PenaltySpec& penalty,
              const SmoothingKernel& kernel, const SolverConfig& config) {
  auto data_ptr = std::make_shared<const Dataset>(data);
  auto inst = std::make_shared<const InstrumentSet>(build_instruments(recipe, *data_ptr));
  const ObjectiveContext ctx(family, std::move(data_ptr), std::move(inst), penalty, kernel);
  return fit_fgmm(ctx, config);
}

}  // namespace fgmm
