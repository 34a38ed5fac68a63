#include "fgmm/model.hpp"

#include "fgmm/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fgmm {

namespace {

void require_finite(double t1, double t2) {
  if (!std::isfinite(t1) || !std::isfinite(t2)) {
    throw DomainError("link function argument is not finite");
  }
}

// Numerically stable logistic function.
double logistic(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(LinkFamily family) {
  switch (family) {
    case LinkFamily::Linear:
      return "linear";
    case LinkFamily::Logit:
      return "logit";
    case LinkFamily::Probit:
      return "probit";
  }
  return "?";
}

LinkFamily parse_link_family(std::string_view name) {
  if (name == "linear") return LinkFamily::Linear;
  if (name == "logit") return LinkFamily::Logit;
  if (name == "probit") return LinkFamily::Probit;
  throw DomainError("unknown link family '" + std::string(name) + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

double g_value(LinkFamily family, double t1, double t2) {
  require_finite(t1, t2);
  switch (family) {
    case LinkFamily::Linear:
      return t1 - t2;
    case LinkFamily::Logit:
      return t1 - logistic(t2);
    case LinkFamily::Probit:
      return t1 - normal_cdf(t2);
  }
  return 0.0;
}

double m_value(LinkFamily family, double t1, double t2) {
  require_finite(t1, t2);
  switch (family) {
    case LinkFamily::Linear:
      return -1.0;
    case LinkFamily::Logit: {
      const double f = logistic(t2);
      return -f * (1.0 - f);
    }
    case LinkFamily::Probit:
      return -normal_pdf(t2);
  }
  return 0.0;
}

double q_value(LinkFamily family, double t1, double t2) {
  require_finite(t1, t2);
  switch (family) {
    case LinkFamily::Linear:
      return 0.0;
    case LinkFamily::Logit: {
      // d/dt [-f(1-f)] = -f(1-f)(1-2f)
      const double f = logistic(t2);
      return -f * (1.0 - f) * (1.0 - 2.0 * f);
    }
    case LinkFamily::Probit:
      return t2 * normal_pdf(t2);
  }
  return 0.0;
}

Dataset::Dataset(Vector y, Matrix x, Matrix w) : y_(std::move(y)), x_(std::move(x)), w_(std::move(w)) {
  if (y_.size() < 2) {
    throw DimensionError("dataset needs at least 2 observations, got " + std::to_string(y_.size()));
  }
  if (x_.rows() != y_.size() || w_.rows() != y_.size()) {
    throw DimensionError("dataset row counts disagree: y=" + std::to_string(y_.size()) +
                         " x=" + std::to_string(x_.rows()) + " w=" + std::to_string(w_.rows()));
  }
  if (x_.cols() < 1 || w_.cols() < 1) {
    throw DimensionError("dataset needs p >= 1 regressors and q >= 1 instruments");
  }
  if (!y_.allFinite() || !x_.allFinite() || !w_.allFinite()) {
    throw DomainError("dataset contains non-finite entries");
  }
}

Dataset::Dataset(Vector y, Matrix x) : Dataset(y, x, x) {}

std::vector<Index> Coefficients::support() const {
  std::vector<Index> s;
  for (Index j = 0; j < beta_.size(); ++j) {
    if (beta_[j] != 0.0) s.push_back(j);
  }
  return s;
}

Index Coefficients::support_size() const {
  Index count = 0;
  for (Index j = 0; j < beta_.size(); ++j) count += beta_[j] != 0.0;
  return count;
}

Vector residuals(LinkFamily family, const Dataset& data, const Coefficients& beta) {
  if (beta.size() != data.p()) {
    throw DimensionError("coefficient length " + std::to_string(beta.size()) + " != p = " +
                         std::to_string(data.p()));
  }
  const Vector eta = data.x() * beta.values();
  Vector r(data.n());
  for (Index i = 0; i < data.n(); ++i) r[i] = g_value(family, data.y()[i], eta[i]);
  return r;
}

}  // namespace fgmm
