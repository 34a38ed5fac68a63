#include "fgmm/error.hpp"
#include "fgmm/inference.hpp"

#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace fgmm;

namespace {

FitResult fit_at(const Vector& beta) {
  FitResult f;
  f.beta = Coefficients(beta);
  return f;
}

std::shared_ptr<const InstrumentSet> unit_weights(const Matrix& f, const Matrix& h) {
  InstrumentSet s;
  s.f = f;
  s.h = h;
  s.w1 = Vector::Ones(f.cols());
  s.w2 = Vector::Ones(f.cols());
  return std::make_shared<const InstrumentSet>(s);
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("linear family sandwich pieces") {
  const auto toy = test::toy_linear(1, 80, 4);
  const ObjectiveContext ctx(LinkFamily::Linear, toy.data, toy.inst, PenaltySpec::scad(0.1), SmoothingKernel());
  Vector b = Vector::Zero(4);
  b[0] = 2.0;
  b[1] = -1.5;
  const SandwichEstimate est = sandwich_covariance(ctx, fit_at(b));
  Matrix xs(80, 2), v(80, 4);
  xs << toy.data->x().col(0), toy.data->x().col(1);
  v << toy.inst->f.col(0), toy.inst->f.col(1), toy.inst->h.col(0), toy.inst->h.col(1);
  CHECK((est.a_hat + xs.transpose() * v / 80.0).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((est.cov_beta - est.cov_beta.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(est.cov_beta.diagonal().minCoeff() >= 0.0);
}

TEST_CASE("hand-built scalar sandwich") {
  Vector y(4);
  y << 1.0, 0.5, 2.5, 1.0;
  Matrix x(4, 1);
  x << 1.0, -1.0, 2.0, 0.5;
  auto data = std::make_shared<const Dataset>(y, x);
  const auto inst = unit_weights(x, x.array().square().matrix());
  const ObjectiveContext ctx(LinkFamily::Linear, data, inst, PenaltySpec::l1(1.0), SmoothingKernel());
  const SandwichEstimate est = sandwich_covariance(ctx, fit_at(Vector::Constant(1, 1.0)));

  // r = y - x = (0, 1.5, 0.5, 0.5); A = -(mean x^2, mean x^3).
  double a1 = 0, a2 = 0;
  for (Index i = 0; i < 4; ++i) {
    a1 -= x(i, 0) * x(i, 0) / 4.0;
    a2 -= x(i, 0) * x(i, 0) * x(i, 0) / 4.0;
  }
  Matrix gv(4, 2);
  for (Index i = 0; i < 4; ++i) {
    const double r = y[i] - x(i, 0);
    gv(i, 0) = r * x(i, 0);
    gv(i, 1) = r * x(i, 0) * x(i, 0);
  }
  const Matrix c = gv.rowwise() - gv.colwise().mean();
  const Matrix ups = c.transpose() * c / 4.0;
  Eigen::RowVector2d a(a1, a2);
  const double gamma = 4.0 * (a * ups * a.transpose())(0, 0);
  const double sigma = 2.0 * a.squaredNorm();
  CHECK(est.gamma_hat(0, 0) == doctest::Approx(gamma).epsilon(1e-12));
  CHECK(est.sigma_hat(0, 0) == doctest::Approx(sigma).epsilon(1e-12));
  CHECK(est.cov_beta(0, 0) == doctest::Approx(gamma / (sigma * sigma) / 4.0).epsilon(1e-12));
}

TEST_CASE("upsilon is positive semidefinite") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const auto toy = test::toy_linear(100 + t, 30, 4, t % 2 == 0);
    const ObjectiveContext ctx(LinkFamily::Linear, toy.data, toy.inst, PenaltySpec::l1(1.0), SmoothingKernel());
    Vector b(4);
    b << 1.0, -1.0, 0.0, 0.3;
    const SandwichEstimate est = sandwich_covariance(ctx, fit_at(b));
    Eigen::SelfAdjointEigenSolver<Matrix> es(est.upsilon_hat);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()));
  }
}

TEST_CASE("sandwich preconditions") {
  const auto toy = test::toy_linear(3, 6, 4);
  const ObjectiveContext ctx(LinkFamily::Linear, toy.data, toy.inst, PenaltySpec::l1(1.0), SmoothingKernel());
  CHECK_THROWS_AS(sandwich_covariance(ctx, fit_at(Vector::Zero(4))), DimensionError);
  CHECK_THROWS_AS(sandwich_covariance(ctx, fit_at(Vector::Ones(4))), DimensionError);  // n = 6 <= 2s
}

TEST_CASE("projection onto the regressors themselves") {
  const auto toy = test::toy_linear(4, 100, 3);
  const std::vector<Index> s{0, 2};
  Matrix basis(100, 2);
  basis << toy.data->x().col(0), toy.data->x().col(2);
  const auto opt = estimate_optimal_instruments(OptimalInstrumentVariant::Homoskedastic, LinkFamily::Linear,
                                                *toy.data, s, basis, Vector::Ones(2));
  CHECK((opt.pi - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(opt.sigma2 > 0.0);
  CHECK((opt.sigma2_hat.array() == opt.sigma2).all());
  CHECK((opt.d_at(basis.row(7).transpose()) - basis.row(7).transpose()).norm() <= 1e-10);
}

TEST_CASE("first-stage slope estimate") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0, 1);
  const Index n = 500;
  Matrix w(n, 1), x(n, 1);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    w(i, 0) = N(rng);
    x(i, 0) = 2.0 * w(i, 0) + N(rng);
    y[i] = x(i, 0) + N(rng);
  }
  const Dataset d(y, x, w);
  const auto opt = estimate_optimal_instruments(OptimalInstrumentVariant::LinearProjection, LinkFamily::Linear, d,
                                                {0}, w, Vector::Ones(1));
  const double se = 1.0 / std::sqrt(w.squaredNorm());
  CHECK(std::abs(opt.pi(0, 0) - 2.0) <= 3.0 * se);
  CHECK_THROWS_AS(estimate_optimal_instruments(OptimalInstrumentVariant::LinearProjection, LinkFamily::Logit, d, {0}, w,
                                               Vector::Ones(1)),
                  DomainError);
}

TEST_CASE("post-selection step with D = X_S is OLS") {
  const auto toy = test::toy_linear(6, 200, 5);
  const std::vector<Index> s{0, 1, 3};
  Matrix xs(200, 3);
  xs << toy.data->x().col(0), toy.data->x().col(1), toy.data->x().col(3);
  const Vector ols = xs.colPivHouseholderQr().solve(toy.data->y());
  const auto step = post_fgmm(LinkFamily::Linear, *toy.data, s, xs, Vector::Constant(200, 1.7), Vector::Zero(3));
  CHECK(step.converged);
  CHECK(step.residual_norm < 1e-8);
  for (Index k = 0; k < 3; ++k) CHECK(std::abs(step.beta_star[k] - ols[k]) <= 1e-8);
  CHECK((step.cov_star - step.cov_star.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(step.cov_star.diagonal().minCoeff() >= 0.0);
}

TEST_CASE("exact-fit data is interpolated") {
  const auto toy = test::toy_linear(7, 40, 3);
  Vector b(3);
  b << 0.5, -2.0, 1.0;
  const Dataset d(toy.data->x() * b, toy.data->x());
  const auto step = post_fgmm(LinkFamily::Linear, d, {0, 1, 2}, d.x(), Vector::Ones(40), Vector::Zero(3));
  CHECK(step.converged);
  CHECK(step.residual_norm <= 1e-12);
  for (Index k = 0; k < 3; ++k) CHECK(step.beta_star[k] == doctest::Approx(b[k]).epsilon(1e-12));
}

TEST_CASE("interval coverage on a homoskedastic design") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> N(0, 1);
  const Index n = 500;
  const int reps = 500;
  int cover[2] = {0, 0};
  const double truth[2] = {1.0, -0.5};
  for (int r = 0; r < reps; ++r) {
    Matrix x(n, 2);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      x(i, 0) = N(rng);
      x(i, 1) = N(rng);
      y[i] = truth[0] * x(i, 0) + truth[1] * x(i, 1) + N(rng);
    }
    const Dataset d(y, x);
    const auto opt = estimate_optimal_instruments(OptimalInstrumentVariant::LinearProjection, LinkFamily::Linear, d,
                                                  {0, 1}, x, Vector::Zero(2));
    const auto step = post_fgmm(LinkFamily::Linear, d, {0, 1}, opt.d_hat, opt.sigma2_hat, Vector::Zero(2));
    for (Index k = 0; k < 2; ++k) {
      const double se = std::sqrt(step.cov_star(k, k));
      cover[k] += std::abs(step.beta_star[k] - truth[k]) <= 1.959963984540054 * se;
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double rate = static_cast<double>(cover[k]) / reps;
    CHECK(rate >= 0.92);
    CHECK(rate <= 0.98);
  }
}

TEST_CASE("post-selection preconditions") {
  const auto toy = test::toy_linear(9, 30, 3);
  CHECK_THROWS_AS(post_fgmm(LinkFamily::Linear, *toy.data, {}, Matrix(30, 0), Vector::Ones(30), Vector(0)),
                  DimensionError);
  CHECK_THROWS_AS(post_fgmm(LinkFamily::Linear, *toy.data, {0}, Matrix::Ones(29, 1), Vector::Ones(30), Vector::Zero(1)),
                  DimensionError);
  CHECK_THROWS_AS(post_fgmm(LinkFamily::Linear, *toy.data, {0}, toy.data->x().col(0), Vector::Zero(30), Vector::Zero(1)),
                  DomainError);
  CHECK_THROWS_AS(post_fgmm(LinkFamily::Linear, *toy.data, {5}, toy.data->x().col(0), Vector::Ones(30), Vector::Zero(1)),
                  DimensionError);
}

TEST_CASE("embed and sieve basis") {
  const Vector e = embed(Vector::Constant(2, 3.0), {1, 4}, 5);
  CHECK(e == (Vector(5) << 0, 3, 0, 0, 3).finished());
  const auto toy = test::toy_linear(10, 20, 4, true);
  const Matrix basis = sieve_projection_basis(*toy.inst, {1, 3});
  CHECK(basis.cols() == 5);
  CHECK((basis.col(0).array() == 1.0).all());
  CHECK(basis.col(2) == toy.inst->f.col(3));
  CHECK(basis.col(3) == toy.inst->h.col(1));
}

}
