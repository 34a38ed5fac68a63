#include "fgmm/kernels.hpp"

#include "fgmm/error.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fgmm::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr Index kParallelWork = 1 << 15;

void require_rows(const Matrix& a, Index rows) {
  if (a.rows() != rows) throw DimensionError("kernel operands have different row counts");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Matrix scaled_cross_product(const Matrix& a, const Matrix& b) {
  require_rows(b, a.rows());
  const Index n = a.rows();
  const Index p = a.cols();
  const Index k = b.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix out(p, k);
#pragma omp parallel for schedule(static) if (n * p * k > kParallelWork)
  for (Index j = 0; j < k; ++j) {
    for (Index l = 0; l < p; ++l) out(l, j) = a.col(l).dot(b.col(j)) * inv_n;
  }
  return out;
}

Matrix scaled_cross_product_serial(const Matrix& a, const Matrix& b) {
  require_rows(b, a.rows());
  const Index n = a.rows();
  Matrix out(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index l = 0; l < a.cols(); ++l) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) s += a(i, l) * b(i, j);
      out(l, j) = s / static_cast<double>(n);
    }
  }
  return out;
}

Vector column_moments(const Matrix& v, const Vector& r) {
  if (v.rows() != r.size()) throw DimensionError("column_moments: row count mismatch");
  const Index n = v.rows();
  const Index p = v.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector out(p);
#pragma omp parallel for schedule(static) if (n * p > kParallelWork)
  for (Index j = 0; j < p; ++j) out[j] = v.col(j).dot(r) * inv_n;
  return out;
}

Vector column_moments_serial(const Matrix& v, const Vector& r) {
  if (v.rows() != r.size()) throw DimensionError("column_moments: row count mismatch");
  Vector out(v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    double s = 0.0;
    for (Index i = 0; i < v.rows(); ++i) s += v(i, j) * r[i];
    out[j] = s / static_cast<double>(v.rows());
  }
  return out;
}

Vector weighted_column_moments(const Matrix& b, const Eigen::Ref<const Vector>& a_col, const Vector& weight) {
  if (b.rows() != a_col.size() || b.rows() != weight.size()) {
    throw DimensionError("weighted_column_moments: row count mismatch");
  }
  const Vector aw = a_col.cwiseProduct(weight);
  return column_moments(b, aw);
}

Vector linear_index(const Matrix& x, const Vector& beta) {
  if (x.cols() != beta.size()) throw DimensionError("linear_index: coefficient length mismatch");
  const Index n = x.rows();
  Vector eta = Vector::Zero(n);
  // Row blocks own disjoint slices of eta; columns are accumulated in order.
  constexpr Index kBlock = 256;
  const Index blocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static) if (n * x.cols() > kParallelWork)
  for (Index blk = 0; blk < blocks; ++blk) {
    const Index lo = blk * kBlock;
    const Index len = std::min(kBlock, n - lo);
    for (Index j = 0; j < x.cols(); ++j) {
      const double bj = beta[j];
      if (bj == 0.0) continue;
      eta.segment(lo, len) += bj * x.col(j).segment(lo, len);
    }
  }
  return eta;
}

Vector linear_index_serial(const Matrix& x, const Vector& beta) {
  if (x.cols() != beta.size()) throw DimensionError("linear_index: coefficient length mismatch");
  Vector eta = Vector::Zero(x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < x.cols(); ++j) {
      if (beta[j] != 0.0) s += x(i, j) * beta[j];
    }
    eta[i] = s;
  }
  return eta;
}

}  // namespace fgmm::kernels
