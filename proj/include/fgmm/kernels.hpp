#pragma once

#include "fgmm/model.hpp"

// Dense inner loops shared by the objective and the solvers.
//
// Each parallel kernel splits work over output entries only, so every output
// is reduced in a fixed order and results do not depend on the thread count.
// The *_serial variants are plain-loop reference implementations used by the
// tests and the benchmark; they agree with the parallel kernels to rounding.
namespace fgmm::kernels {

// Number of OpenMP threads the kernels may use (1 when built without OpenMP).
int max_threads();

// (1/n) a' b for n x p and n x k inputs -> p x k.
Matrix scaled_cross_product(const Matrix& a, const Matrix& b);
Matrix scaled_cross_product_serial(const Matrix& a, const Matrix& b);

// (1/n) v' r -> one average per column of v.
Vector column_moments(const Matrix& v, const Vector& r);
Vector column_moments_serial(const Matrix& v, const Vector& r);

// (1/n) sum_i weight_i * a_ik * b_ij for every column j of b.
Vector weighted_column_moments(const Matrix& b, const Eigen::Ref<const Vector>& a_col, const Vector& weight);

// x * beta, skipping zero coefficients.
Vector linear_index(const Matrix& x, const Vector& beta);
Vector linear_index_serial(const Matrix& x, const Vector& beta);

}  // namespace fgmm::kernels
