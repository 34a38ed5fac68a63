#include "fgmm/inference.hpp"

#include "fgmm/error.hpp"
#include "fgmm/instruments.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace fgmm {

namespace {

constexpr double kMaxCondition = 1e12;

Matrix select_columns(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = m.col(cols[k]);
  return out;
}

// Condition number of a symmetric PSD matrix.
double condition_number(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void check_support(const std::vector<Index>& support, Index p) {
  if (support.empty()) throw DimensionError("empty support");
  for (const Index j : support) {
    if (j < 0 || j >= p) throw DimensionError("support index " + std::to_string(j) + " out of range");
  }
}

}  // namespace

Vector embed(const Vector& beta_s, const std::vector<Index>& support, Index p) {
  Vector out = Vector::Zero(p);
  for (std::size_t k = 0; k < support.size(); ++k) out[support[k]] = beta_s[static_cast<Index>(k)];
  return out;
}

Matrix sieve_projection_basis(const InstrumentSet& inst, const std::vector<Index>& support) {
  const Index s = static_cast<Index>(support.size());
  Matrix basis(inst.n(), 1 + 2 * s);
  basis.col(0).setOnes();
  for (Index k = 0; k < s; ++k) {
    basis.col(1 + k) = inst.f.col(support[static_cast<std::size_t>(k)]);
    basis.col(1 + s + k) = inst.h.col(support[static_cast<std::size_t>(k)]);
  }
  return basis;
}

SandwichEstimate sandwich_covariance(const ObjectiveContext& ctx, const FitResult& fit) {
  const Dataset& data = ctx.data();
  const InstrumentSet& inst = ctx.instruments();
  SandwichEstimate est;
  est.support = fit.beta.support();
  const Index s = static_cast<Index>(est.support.size());
  const Index n = data.n();
  if (s == 0) throw DimensionError("sandwich covariance needs a nonempty support");
  if (n <= 2 * s) throw DimensionError("sandwich covariance needs n > 2s");

  const double nn = static_cast<double>(n);
  const Vector eta = data.x() * fit.beta.values();
  const Matrix xs = select_columns(data.x(), est.support);
  Matrix v(n, 2 * s);
  v.leftCols(s) = select_columns(inst.f, est.support);
  v.rightCols(s) = select_columns(inst.h, est.support);

  Vector g(n), m(n);
  for (Index i = 0; i < n; ++i) {
    g[i] = g_value(ctx.family(), data.y()[i], eta[i]);
    m[i] = m_value(ctx.family(), data.y()[i], eta[i]);
  }

  est.a_hat = xs.transpose() * m.asDiagonal() * v / nn;
  const Matrix gv = g.asDiagonal() * v;
  const Eigen::RowVectorXd mean = gv.colwise().mean();
  const Matrix centered = gv.rowwise() - mean;
  est.upsilon_hat = symmetrize(centered.transpose() * centered / nn);

  const Matrix j = weight_matrix(inst, est.support);
  est.gamma_hat = symmetrize(4.0 * est.a_hat * j * est.upsilon_hat * j * est.a_hat.transpose());
  est.sigma_hat = symmetrize(2.0 * est.a_hat * j * est.a_hat.transpose());
  if (condition_number(est.sigma_hat) > kMaxCondition) {
    throw SingularDesignError("sandwich: Sigma is numerically singular");
  }
  const Eigen::LDLT<Matrix> ldlt(est.sigma_hat);
  const Matrix left = ldlt.solve(est.gamma_hat);                   // Sigma^-1 Gamma
  const Matrix cov = ldlt.solve(left.transpose()).transpose() / nn;  // (Sigma^-1 Gamma) Sigma^-1
  est.cov_beta = symmetrize(cov);
  return est;
}

OptimalInstruments estimate_optimal_instruments(OptimalInstrumentVariant variant, LinkFamily family,
                                                const Dataset& data, const std::vector<Index>& support,
                                                const Matrix& basis, const Vector& first_stage_beta_s) {
  check_support(support, data.p());
  if (basis.rows() != data.n()) throw DimensionError("instrument basis row count mismatch");
  const Index s = static_cast<Index>(support.size());
  if (first_stage_beta_s.size() != s) throw DimensionError("first-stage coefficients do not match support");

  const Matrix xs = select_columns(data.x(), support);
  const Matrix gram = basis.transpose() * basis;
  if (condition_number(gram) > kMaxCondition) {
    throw SingularDesignError("optimal instruments: basis Gram matrix is numerically singular");
  }
  OptimalInstruments out;
  // Pi' = (Wb' Wb)^-1 Wb' X_S
  out.pi = gram.ldlt().solve(basis.transpose() * xs).transpose();
  out.d_hat = basis * out.pi.transpose();

  const double nn = static_cast<double>(data.n());
  switch (variant) {
    case OptimalInstrumentVariant::Homoskedastic: {
      const Vector eta = xs * first_stage_beta_s;
      double ss = 0.0;
      for (Index i = 0; i < data.n(); ++i) {
        const double r = g_value(family, data.y()[i], eta[i]);
        ss += r * r;
      }
      out.sigma2 = ss / nn;
      break;
    }
    case OptimalInstrumentVariant::LinearProjection: {
      if (family != LinkFamily::Linear) {
        throw DomainError("linear-projection instruments require the linear family");
      }
      const Matrix dx = out.d_hat.transpose() * xs;
      const Vector b_iv = dx.colPivHouseholderQr().solve(out.d_hat.transpose() * data.y());
      out.sigma2 = (data.y() - xs * b_iv).squaredNorm() / nn;
      break;
    }
  }
  if (!(out.sigma2 > 0.0)) out.sigma2 = std::numeric_limits<double>::min();
  out.sigma2_hat = Vector::Constant(data.n(), out.sigma2);
  return out;
}

EfficientStepResult post_fgmm(LinkFamily family, const Dataset& data, const std::vector<Index>& support,
                              const Matrix& d_hat, const Vector& sigma2_hat, const Vector& start,
                              const PostFgmmOptions& options) {
  check_support(support, data.p());
  const Index s = static_cast<Index>(support.size());
  const Index n = data.n();
  if (d_hat.rows() != n || d_hat.cols() != s) throw DimensionError("d_hat must be n x s");
  if (sigma2_hat.size() != n) throw DimensionError("sigma2_hat must have n entries");
  if (start.size() != s) throw DimensionError("start must have s entries");
  if (!(sigma2_hat.array() > 0.0).all()) throw DomainError("sigma2_hat must be positive");

  const double nn = static_cast<double>(n);
  const Matrix xs = select_columns(data.x(), support);
  const Vector inv_s2 = sigma2_hat.cwiseInverse();
  const Matrix wd = inv_s2.asDiagonal() * d_hat;  // sigma_i^-2 D_i as rows

  const auto rho = [&](const Vector& b) -> Vector {
    const Vector eta = xs * b;
    Vector g(n);
    for (Index i = 0; i < n; ++i) g[i] = g_value(family, data.y()[i], eta[i]);
    return wd.transpose() * g / nn;
  };
  const auto jacobian = [&](const Vector& b) -> Matrix {
    const Vector eta = xs * b;
    Vector m(n);
    for (Index i = 0; i < n; ++i) m[i] = m_value(family, data.y()[i], eta[i]);
    return wd.transpose() * m.asDiagonal() * xs / nn;
  };
  const auto clip = [&](Vector b) {
    return b.cwiseMax(-options.bound).cwiseMin(options.bound).eval();
  };

  EfficientStepResult out;
  out.support = support;
  Vector beta = clip(start);
  Vector r = rho(beta);
  double phi = 0.5 * r.squaredNorm();

  for (int it = 0; it < options.max_iterations; ++it) {
    if (std::sqrt(2.0 * phi) < options.tolerance) {
      out.converged = true;
      break;
    }
    const Matrix jac = jacobian(beta);
    const Eigen::ColPivHouseholderQR<Matrix> qr(jac);
    if (qr.rank() < s) break;
    const Vector step = qr.solve(-r);
    if (!step.allFinite()) break;

    double alpha = 1.0;
    bool moved = false;
    for (int bt = 0; bt <= options.max_backtracks; ++bt) {
      const Vector trial = clip(beta + alpha * step);
      const Vector rt = rho(trial);
      const double phi_t = 0.5 * rt.squaredNorm();
      // Armijo with directional derivative -|rho|^2 of 0.5|rho|^2 along the Newton step.
      if (phi_t <= (1.0 - 2.0 * options.armijo * alpha) * phi) {
        beta = trial;
        r = rt;
        phi = phi_t;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    out.iterations = it + 1;
    if (!moved) break;
  }
  if (!out.converged && std::sqrt(2.0 * phi) < options.tolerance) out.converged = true;

  out.beta_star = beta;
  out.residual_norm = std::sqrt(2.0 * phi);
  const Matrix info = symmetrize(d_hat.transpose() * inv_s2.asDiagonal() * d_hat / nn);
  if (condition_number(info) > kMaxCondition) {
    out.cov_star = Matrix::Constant(s, s, std::numeric_limits<double>::quiet_NaN());
    out.converged = false;
  } else {
    out.cov_star = symmetrize(info.ldlt().solve(Matrix::Identity(s, s)) / nn);
  }
  return out;
}

}  // namespace fgmm
