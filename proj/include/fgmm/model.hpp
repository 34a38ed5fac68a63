#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace fgmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Residual family for the conditional moment model E[g(Y, X'b) | W] = 0.
enum class LinkFamily { Linear, Logit, Probit };

std::string_view to_string(LinkFamily family);
LinkFamily parse_link_family(std::string_view name);

// g(t1, t2): residual of response t1 at linear index t2.
double g_value(LinkFamily family, double t1, double t2);
// dg/dt2
double m_value(LinkFamily family, double t1, double t2);
// d^2 g / dt2^2
double q_value(LinkFamily family, double t1, double t2);

double normal_cdf(double x);
double normal_pdf(double x);

// Observed sample. Rows of y, x and w refer to the same observation; w may
// alias the columns of x (self-instrumented designs).
class Dataset {
 public:
  Dataset(Vector y, Matrix x, Matrix w);
  // Self-instrumented sample: w is a copy of x.
  Dataset(Vector y, Matrix x);

  Index n() const noexcept { return y_.size(); }
  Index p() const noexcept { return x_.cols(); }
  Index q() const noexcept { return w_.cols(); }

  const Vector& y() const noexcept { return y_; }
  const Matrix& x() const noexcept { return x_; }
  const Matrix& w() const noexcept { return w_; }

 private:
  Vector y_;
  Matrix x_;
  Matrix w_;
};

// Coefficient vector. The support is the set of bitwise nonzero entries.
class Coefficients {
 public:
  Coefficients() = default;
  explicit Coefficients(Vector beta) : beta_(std::move(beta)) {}
  static Coefficients zeros(Index p) { return Coefficients(Vector::Zero(p)); }

  Index size() const noexcept { return beta_.size(); }
  const Vector& values() const noexcept { return beta_; }
  double operator[](Index j) const { return beta_[j]; }

  std::vector<Index> support() const;
  Index support_size() const;

 private:
  Vector beta_;
};

// Component i is g(y_i, x_i' beta).
Vector residuals(LinkFamily family, const Dataset& data, const Coefficients& beta);

}  // namespace fgmm
