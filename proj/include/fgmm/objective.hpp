#pragma once

#include "fgmm/instruments.hpp"
#include "fgmm/model.hpp"
#include "fgmm/penalty.hpp"

#include <memory>
#include <string_view>

namespace fgmm {

// Smooth surrogate K(b^2 / h) for the indicator I(b != 0), built from a
// twice-differentiable CDF as K(t) = (F(t) - F(0)) / (1 - F(0)).
class SmoothingKernel {
 public:
  enum class Cdf { Logistic, Normal };
  static constexpr double kDefaultBandwidth = 0.1;

  explicit SmoothingKernel(double h = kDefaultBandwidth, Cdf cdf = Cdf::Logistic);

  double h() const noexcept { return h_; }
  Cdf cdf() const noexcept { return cdf_; }

  // K and its first two derivatives at t >= 0.
  double value(double t) const;
  double first(double t) const;
  double second(double t) const;

  // Indicator weight K(b^2/h) and its derivatives with respect to b.
  struct Weight {
    double k;
    double dk;
    double d2k;
  };
  Weight weight(double b) const;
  double weight_value(double b) const { return value(b * b / h_); }

 private:
  double h_;
  Cdf cdf_;
};

std::string_view to_string(SmoothingKernel::Cdf cdf);
SmoothingKernel::Cdf parse_kernel_cdf(std::string_view name);

// Everything needed to evaluate the FGMM criteria for one sample and penalty.
// Data and instruments are shared so several penalty levels can reuse them.
class ObjectiveContext {
 public:
  ObjectiveContext(LinkFamily family, std::shared_ptr<const Dataset> data,
                   std::shared_ptr<const InstrumentSet> inst, PenaltySpec penalty, SmoothingKernel kernel);

  LinkFamily family() const noexcept { return family_; }
  const Dataset& data() const noexcept { return *data_; }
  const InstrumentSet& instruments() const noexcept { return *inst_; }
  const std::shared_ptr<const Dataset>& data_ptr() const noexcept { return data_; }
  const std::shared_ptr<const InstrumentSet>& instruments_ptr() const noexcept { return inst_; }
  const PenaltySpec& penalty() const noexcept { return penalty_; }
  const SmoothingKernel& kernel() const noexcept { return kernel_; }

  ObjectiveContext with_penalty(PenaltySpec penalty) const;

 private:
  LinkFamily family_;
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<const InstrumentSet> inst_;
  PenaltySpec penalty_;
  SmoothingKernel kernel_;
};

// Slope and curvature of the smoothed loss along one coordinate.
struct CoordinateModel {
  double g1;
  double g2;
};

double penalty_sum(const PenaltySpec& spec, const Vector& beta);

// Reference evaluators: each call recomputes residuals and moments from
// scratch. The solver uses SmoothedObjective below instead.
double fgmm_loss(const ObjectiveContext& ctx, const Coefficients& beta);
double smoothed_loss(const ObjectiveContext& ctx, const Coefficients& beta);
double smoothed_penalized(const ObjectiveContext& ctx, const Coefficients& beta);
double penalized_fgmm(const ObjectiveContext& ctx, const Coefficients& beta);
CoordinateModel coordinate_model(const ObjectiveContext& ctx, const Coefficients& beta, Index k);

// Incremental evaluator of Q_K = L_K + sum P(|b_j|) under single-coordinate
// changes. The linear family keeps the moment vectors current through
// rank-one updates with precomputed X'F/n and X'H/n; other families carry the
// linear index and recompute residuals.
class SmoothedObjective {
 public:
  SmoothedObjective(const ObjectiveContext& ctx, Vector beta);

  const Vector& beta() const noexcept { return beta_; }
  double value() const noexcept { return value_; }
  double loss() const noexcept { return loss_; }

  CoordinateModel coordinate_model(Index k) const;
  // Q_K with coordinate k replaced by t; does not modify the state.
  double value_with(Index k, double t) const;
  void set(Index k, double t);

 private:
  void refresh();
  double loss_from(const Vector& a, const Vector& b, Index k, double kk) const;
  double penalty_with(Index k, double t) const;

  const ObjectiveContext* ctx_;
  bool linear_;
  Vector beta_;
  Vector kweight_;  // K(beta_j^2 / h)
  Vector a_;        // F' r / n
  Vector b_;        // H' r / n
  Vector eta_;      // X beta (non-linear families)
  Matrix gf_;       // X' F / n (linear family)
  Matrix gh_;       // X' H / n (linear family)
  double loss_ = 0.0;
  double value_ = 0.0;
};

}  // namespace fgmm
