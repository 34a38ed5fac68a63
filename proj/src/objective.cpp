#include "fgmm/objective.hpp"

#include "fgmm/error.hpp"
#include "fgmm/kernels.hpp"

#include <cmath>
#include <string>

namespace fgmm {

// ---------------------------------------------------------------- kernel --

SmoothingKernel::SmoothingKernel(double h, Cdf cdf) : h_(h), cdf_(cdf) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("kernel bandwidth h must be positive");
}

double SmoothingKernel::value(double t) const {
  switch (cdf_) {
    case Cdf::Logistic:
      return std::tanh(0.5 * t);  // 2F(t) - 1
    case Cdf::Normal:
      return std::erf(t / std::sqrt(2.0));  // 2 Phi(t) - 1
  }
  return 0.0;
}

double SmoothingKernel::first(double t) const {
  switch (cdf_) {
    case Cdf::Logistic: {
      const double th = std::tanh(0.5 * t);
      return 0.5 * (1.0 - th * th);
    }
    case Cdf::Normal:
      return 2.0 * normal_pdf(t);
  }
  return 0.0;
}

double SmoothingKernel::second(double t) const {
  switch (cdf_) {
    case Cdf::Logistic: {
      const double th = std::tanh(0.5 * t);
      return -0.5 * th * (1.0 - th * th);
    }
    case Cdf::Normal:
      return -2.0 * t * normal_pdf(t);
  }
  return 0.0;
}

SmoothingKernel::Weight SmoothingKernel::weight(double b) const {
  const double u = b * b / h_;
  const double du = 2.0 * b / h_;
  const double k1 = first(u);
  return {value(u), k1 * du, second(u) * du * du + k1 * (2.0 / h_)};
}

std::string_view to_string(SmoothingKernel::Cdf cdf) {
  return cdf == SmoothingKernel::Cdf::Logistic ? "logistic" : "normal";
}

SmoothingKernel::Cdf parse_kernel_cdf(std::string_view name) {
  if (name == "logistic") return SmoothingKernel::Cdf::Logistic;
  if (name == "normal") return SmoothingKernel::Cdf::Normal;
  throw DomainError("unknown kernel CDF '" + std::string(name) + "'");
}

// --------------------------------------------------------------- context --

ObjectiveContext::ObjectiveContext(LinkFamily family, std::shared_ptr<const Dataset> data,
                                   std::shared_ptr<const InstrumentSet> inst, PenaltySpec penalty,
                                   SmoothingKernel kernel)
    : family_(family),
      data_(std::move(data)),
      inst_(std::move(inst)),
      penalty_(penalty),
      kernel_(kernel) {
  if (!data_ || !inst_) throw DimensionError("objective context needs data and instruments");
  if (inst_->n() != data_->n() || inst_->p() != data_->p()) {
    throw DimensionError("instrument set is " + std::to_string(inst_->n()) + "x" + std::to_string(inst_->p()) +
                         " but data is " + std::to_string(data_->n()) + "x" + std::to_string(data_->p()));
  }
}

ObjectiveContext ObjectiveContext::with_penalty(PenaltySpec penalty) const {
  return {family_, data_, inst_, penalty, kernel_};
}

// ------------------------------------------------------------ reference --

namespace {

void check_length(const ObjectiveContext& ctx, const Coefficients& beta) {
  if (beta.size() != ctx.data().p()) {
    throw DimensionError("coefficient length " + std::to_string(beta.size()) + " != p = " +
                         std::to_string(ctx.data().p()));
  }
}

// sum_j weight_j * (w1_j a_j^2 + w2_j b_j^2) with moments taken at beta.
template <class WeightFn>
double weighted_moment_loss(const ObjectiveContext& ctx, const Coefficients& beta, WeightFn weight) {
  check_length(ctx, beta);
  const InstrumentSet& inst = ctx.instruments();
  const Vector r = residuals(ctx.family(), ctx.data(), beta);
  const double n = static_cast<double>(r.size());
  double loss = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double wt = weight(beta[j]);
    if (wt == 0.0) continue;
    const double a = inst.f.col(j).dot(r) / n;
    const double b = inst.h.col(j).dot(r) / n;
    loss += wt * (inst.w1[j] * a * a + inst.w2[j] * b * b);
  }
  return loss;
}

}  // namespace

double penalty_sum(const PenaltySpec& spec, const Vector& beta) {
  double s = 0.0;
  for (Index j = 0; j < beta.size(); ++j) s += penalty_value(spec, std::abs(beta[j]));
  return s;
}

double fgmm_loss(const ObjectiveContext& ctx, const Coefficients& beta) {
  return weighted_moment_loss(ctx, beta, [](double b) { return b != 0.0 ? 1.0 : 0.0; });
}

double smoothed_loss(const ObjectiveContext& ctx, const Coefficients& beta) {
  const SmoothingKernel& kernel = ctx.kernel();
  return weighted_moment_loss(ctx, beta, [&](double b) { return kernel.weight_value(b); });
}

double smoothed_penalized(const ObjectiveContext& ctx, const Coefficients& beta) {
  return smoothed_loss(ctx, beta) + penalty_sum(ctx.penalty(), beta.values());
}

double penalized_fgmm(const ObjectiveContext& ctx, const Coefficients& beta) {
  return fgmm_loss(ctx, beta) + penalty_sum(ctx.penalty(), beta.values());
}

CoordinateModel coordinate_model(const ObjectiveContext& ctx, const Coefficients& beta, Index k) {
  check_length(ctx, beta);
  if (k < 0 || k >= beta.size()) throw DimensionError("coordinate index out of range");
  const Dataset& data = ctx.data();
  const InstrumentSet& inst = ctx.instruments();
  const Index n = data.n();
  const double nn = static_cast<double>(n);

  const Vector eta = data.x() * beta.values();
  Vector r(n), mx(n), qxx(n);
  for (Index i = 0; i < n; ++i) {
    const double y = data.y()[i];
    const double xk = data.x()(i, k);
    r[i] = g_value(ctx.family(), y, eta[i]);
    mx[i] = m_value(ctx.family(), y, eta[i]) * xk;
    qxx[i] = q_value(ctx.family(), y, eta[i]) * xk * xk;
  }

  double g1 = 0.0;
  double g2 = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const bool own = j == k;
    const SmoothingKernel::Weight kw = own ? ctx.kernel().weight(beta[j])
                                           : SmoothingKernel::Weight{ctx.kernel().weight_value(beta[j]), 0.0, 0.0};
    if (kw.k == 0.0 && !own) continue;
    const auto f = inst.f.col(j);
    const auto h = inst.h.col(j);
    const double a = f.dot(r) / nn, da = f.dot(mx) / nn, dda = f.dot(qxx) / nn;
    const double b = h.dot(r) / nn, db = h.dot(mx) / nn, ddb = h.dot(qxx) / nn;
    const double t = inst.w1[j] * a * a + inst.w2[j] * b * b;
    const double dt = 2.0 * (inst.w1[j] * a * da + inst.w2[j] * b * db);
    const double d2t = 2.0 * (inst.w1[j] * (da * da + a * dda) + inst.w2[j] * (db * db + b * ddb));
    g1 += kw.k * dt + kw.dk * t;
    g2 += kw.k * d2t + 2.0 * kw.dk * dt + kw.d2k * t;
  }
  if (!std::isfinite(g1) || !std::isfinite(g2)) {
    throw NumericError("non-finite coordinate model at coordinate " + std::to_string(k));
  }
  return {g1, g2};
}

// ----------------------------------------------------------- incremental --

namespace {

// out_j = v_j - delta * g(k, j); the single expression both the trial and the
// commit paths use, so an accepted trial value is reproduced exactly.
void shifted(const Vector& v, const Matrix& g, Index k, double delta, Vector& out) {
  out.resize(v.size());
  for (Index j = 0; j < v.size(); ++j) out[j] = v[j] - delta * g(k, j);
}

}  // namespace

SmoothedObjective::SmoothedObjective(const ObjectiveContext& ctx, Vector beta)
    : ctx_(&ctx), linear_(ctx.family() == LinkFamily::Linear), beta_(std::move(beta)) {
  if (beta_.size() != ctx.data().p()) throw DimensionError("initial coefficient length mismatch");
  if (linear_) {
    gf_ = kernels::scaled_cross_product(ctx.data().x(), ctx.instruments().f);
    gh_ = kernels::scaled_cross_product(ctx.data().x(), ctx.instruments().h);
  }
  refresh();
}

void SmoothedObjective::refresh() {
  const Dataset& data = ctx_->data();
  const InstrumentSet& inst = ctx_->instruments();
  kweight_.resize(beta_.size());
  for (Index j = 0; j < beta_.size(); ++j) kweight_[j] = ctx_->kernel().weight_value(beta_[j]);
  eta_ = kernels::linear_index(data.x(), beta_);
  Vector r(data.n());
  for (Index i = 0; i < data.n(); ++i) r[i] = g_value(ctx_->family(), data.y()[i], eta_[i]);
  a_ = kernels::column_moments(inst.f, r);
  b_ = kernels::column_moments(inst.h, r);
  loss_ = loss_from(a_, b_, -1, 0.0);
  value_ = loss_ + penalty_with(-1, 0.0);
  if (!std::isfinite(value_)) throw NumericError("non-finite smoothed objective");
}

double SmoothedObjective::loss_from(const Vector& a, const Vector& b, Index k, double kk) const {
  const InstrumentSet& inst = ctx_->instruments();
  double loss = 0.0;
  for (Index j = 0; j < beta_.size(); ++j) {
    const double wt = j == k ? kk : kweight_[j];
    if (wt == 0.0) continue;
    loss += wt * (inst.w1[j] * a[j] * a[j] + inst.w2[j] * b[j] * b[j]);
  }
  return loss;
}

double SmoothedObjective::penalty_with(Index k, double t) const {
  const PenaltySpec& pen = ctx_->penalty();
  double s = 0.0;
  for (Index j = 0; j < beta_.size(); ++j) s += penalty_value(pen, std::abs(j == k ? t : beta_[j]));
  return s;
}

CoordinateModel SmoothedObjective::coordinate_model(Index k) const {
  const InstrumentSet& inst = ctx_->instruments();
  const SmoothingKernel::Weight own = ctx_->kernel().weight(beta_[k]);
  double g1 = 0.0;
  double g2 = 0.0;

  if (linear_) {
    // da_j / db_k = -(X'F/n)(k, j); second derivatives vanish.
    for (Index j = 0; j < beta_.size(); ++j) {
      const double wt = j == k ? own.k : kweight_[j];
      if (wt == 0.0 && j != k) continue;
      const double da = -gf_(k, j);
      const double db = -gh_(k, j);
      const double dt = 2.0 * (inst.w1[j] * a_[j] * da + inst.w2[j] * b_[j] * db);
      const double d2t = 2.0 * (inst.w1[j] * da * da + inst.w2[j] * db * db);
      g1 += wt * dt;
      g2 += wt * d2t;
      if (j == k) {
        const double t = inst.w1[j] * a_[j] * a_[j] + inst.w2[j] * b_[j] * b_[j];
        g1 += own.dk * t;
        g2 += 2.0 * own.dk * dt + own.d2k * t;
      }
    }
  } else {
    const Dataset& data = ctx_->data();
    const Index n = data.n();
    const double nn = static_cast<double>(n);
    Vector mx(n), qxx(n);
    for (Index i = 0; i < n; ++i) {
      const double xk = data.x()(i, k);
      mx[i] = m_value(ctx_->family(), data.y()[i], eta_[i]) * xk;
      qxx[i] = q_value(ctx_->family(), data.y()[i], eta_[i]) * xk * xk;
    }
    for (Index j = 0; j < beta_.size(); ++j) {
      const double wt = j == k ? own.k : kweight_[j];
      if (wt == 0.0 && j != k) continue;
      const auto f = inst.f.col(j);
      const auto h = inst.h.col(j);
      const double da = f.dot(mx) / nn, dda = f.dot(qxx) / nn;
      const double db = h.dot(mx) / nn, ddb = h.dot(qxx) / nn;
      const double a = a_[j], b = b_[j];
      const double dt = 2.0 * (inst.w1[j] * a * da + inst.w2[j] * b * db);
      const double d2t = 2.0 * (inst.w1[j] * (da * da + a * dda) + inst.w2[j] * (db * db + b * ddb));
      g1 += wt * dt;
      g2 += wt * d2t;
      if (j == k) {
        const double t = inst.w1[j] * a * a + inst.w2[j] * b * b;
        g1 += own.dk * t;
        g2 += 2.0 * own.dk * dt + own.d2k * t;
      }
    }
  }
  if (!std::isfinite(g1) || !std::isfinite(g2)) {
    throw NumericError("non-finite coordinate model at coordinate " + std::to_string(k));
  }
  return {g1, g2};
}

double SmoothedObjective::value_with(Index k, double t) const {
  const double delta = t - beta_[k];
  const double kk = ctx_->kernel().weight_value(t);
  Vector a, b;
  if (linear_) {
    shifted(a_, gf_, k, delta, a);
    shifted(b_, gh_, k, delta, b);
  } else {
    const Dataset& data = ctx_->data();
    const InstrumentSet& inst = ctx_->instruments();
    Vector r(data.n());
    for (Index i = 0; i < data.n(); ++i) {
      r[i] = g_value(ctx_->family(), data.y()[i], eta_[i] + delta * data.x()(i, k));
    }
    const double inv_n = 1.0 / static_cast<double>(data.n());
    a = a_;
    b = b_;
    for (Index j = 0; j < beta_.size(); ++j) {
      if (j != k && kweight_[j] == 0.0) continue;
      a[j] = inst.f.col(j).dot(r) * inv_n;
      b[j] = inst.h.col(j).dot(r) * inv_n;
    }
  }
  const double v = loss_from(a, b, k, kk) + penalty_with(k, t);
  if (!std::isfinite(v)) throw NumericError("non-finite trial objective at coordinate " + std::to_string(k));
  return v;
}

void SmoothedObjective::set(Index k, double t) {
  const double delta = t - beta_[k];
  if (delta == 0.0) return;
  if (linear_) {
    Vector a, b;
    shifted(a_, gf_, k, delta, a);
    shifted(b_, gh_, k, delta, b);
    a_.swap(a);
    b_.swap(b);
    beta_[k] = t;
    kweight_[k] = ctx_->kernel().weight_value(t);
  } else {
    const Dataset& data = ctx_->data();
    const InstrumentSet& inst = ctx_->instruments();
    for (Index i = 0; i < data.n(); ++i) eta_[i] += delta * data.x()(i, k);
    beta_[k] = t;
    kweight_[k] = ctx_->kernel().weight_value(t);
    Vector r(data.n());
    for (Index i = 0; i < data.n(); ++i) r[i] = g_value(ctx_->family(), data.y()[i], eta_[i]);
    a_ = kernels::column_moments(inst.f, r);
    b_ = kernels::column_moments(inst.h, r);
  }
  loss_ = loss_from(a_, b_, -1, 0.0);
  value_ = loss_ + penalty_with(-1, 0.0);
}

}  // namespace fgmm
