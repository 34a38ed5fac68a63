#include "fgmm/error.hpp"
#include "fgmm/model.hpp"

#include <doctest.h>

#include <random>

using namespace fgmm;

TEST_SUITE("model") {

TEST_CASE("g_value per family") {
  CHECK(g_value(LinkFamily::Linear, 2.0, 0.5) == doctest::Approx(1.5));
  CHECK(g_value(LinkFamily::Logit, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(g_value(LinkFamily::Probit, 0.0, 0.0) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(g_value(LinkFamily::Linear, std::nan(""), 0.0), DomainError);
  CHECK_THROWS_AS(m_value(LinkFamily::Logit, 0.0, INFINITY), DomainError);
}

TEST_CASE("m and q at reference points") {
  for (double t1 : {-3.0, 0.0, 7.5}) {
    CHECK(m_value(LinkFamily::Linear, t1, 0.3) == -1.0);
    CHECK(q_value(LinkFamily::Linear, t1, 0.3) == 0.0);
    CHECK(m_value(LinkFamily::Logit, t1, 0.0) == doctest::Approx(-0.25));
    CHECK(m_value(LinkFamily::Probit, t1, 0.0) == doctest::Approx(-0.3989422804).epsilon(1e-9));
  }
}

TEST_CASE("m and q match central differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = 1e-6;
  for (auto fam : {LinkFamily::Linear, LinkFamily::Logit, LinkFamily::Probit}) {
    for (int k = 0; k < 100; ++k) {
      const double t1 = u(rng), t2 = u(rng);
      const double fd_m = (g_value(fam, t1, t2 + h) - g_value(fam, t1, t2 - h)) / (2 * h);
      const double fd_q = (m_value(fam, t1, t2 + h) - m_value(fam, t1, t2 - h)) / (2 * h);
      CHECK(std::abs(m_value(fam, t1, t2) - fd_m) <= 1e-5 * std::max(1.0, std::abs(fd_m)));
      CHECK(std::abs(q_value(fam, t1, t2) - fd_q) <= 1e-5 * std::max(1.0, std::abs(fd_q)));
    }
  }
}

TEST_CASE("bounded derivatives for binary links") {
  for (double t2 = -8.0; t2 <= 8.0; t2 += 0.01) {
    CHECK(std::abs(m_value(LinkFamily::Logit, 1.0, t2)) <= 0.25 + 1e-15);
    CHECK(std::abs(q_value(LinkFamily::Logit, 1.0, t2)) <= 0.1);
    CHECK(std::abs(m_value(LinkFamily::Probit, 1.0, t2)) <= 1.0);
    CHECK(std::abs(q_value(LinkFamily::Probit, 1.0, t2)) <= 1.0);
  }
}

TEST_CASE("residuals") {
  Vector y(2);
  y << 1, 2;
  Matrix x(2, 1);
  x << 1, 1;
  const Dataset d(y, x);
  const Vector r = residuals(LinkFamily::Linear, d, Coefficients(Vector::Ones(1)));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);

  // A one-row dataset is rejected, so the logit example runs on two identical rows.
  Vector y1 = Vector::Ones(2);
  Matrix x1 = Matrix::Zero(2, 1);
  const Dataset d1(y1, x1);
  CHECK(residuals(LinkFamily::Logit, d1, Coefficients(Vector::Constant(1, 5.0)))[0] == doctest::Approx(0.5));
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset(Vector(0), Matrix(0, 1)), DimensionError);
  CHECK_THROWS_AS(Dataset(Vector::Ones(3), Matrix::Ones(2, 1)), DimensionError);
  Matrix bad = Matrix::Ones(3, 2);
  bad(1, 1) = std::nan("");
  CHECK_THROWS(Dataset(Vector::Ones(3), bad));
  const Dataset self(Vector::Ones(3), Matrix::Ones(3, 2));
  CHECK(self.w() == self.x());
}

TEST_CASE("support is the bitwise nonzero set") {
  Vector b(4);
  b << 0.0, -0.0, 1e-300, -2.0;
  const Coefficients c(b);
  CHECK(c.support() == std::vector<Index>{2, 3});
  CHECK(c.support_size() == 2);
  CHECK(Coefficients::zeros(3).support().empty());
}

TEST_CASE("family names round trip") {
  for (auto fam : {LinkFamily::Linear, LinkFamily::Logit, LinkFamily::Probit}) {
    CHECK(parse_link_family(to_string(fam)) == fam);
  }
  CHECK_THROWS(parse_link_family("poisson"));
}

}
