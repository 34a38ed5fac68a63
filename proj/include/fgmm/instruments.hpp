#pragma once

#include "fgmm/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace fgmm {

// Transformations (F, H) of the instruments, one column pair per regressor,
// together with the scale weights 1 / var(F_j) and 1 / var(H_j).
struct InstrumentSet {
  Matrix f;
  Matrix h;
  Vector w1;
  Vector w2;

  Index n() const noexcept { return f.rows(); }
  Index p() const noexcept { return f.cols(); }

  // Validates shapes and weights; computes w1, w2 from the columns.
  static InstrumentSet from_columns(Matrix f, Matrix h);
};

// Named basis function applied to a single column of W or X:
//   identity, square, sin(freq * pi * v), cos(freq * pi * v), cos(v) + 1.
struct BasisFunction {
  enum class Kind { Identity, Square, SinPi, CosPi, CosPlusOne };
  enum class Source { W, X };

  Kind kind = Kind::Identity;
  Source source = Source::X;
  Index column = 0;
  double freq = 1.0;
  double scale = 1.0;

  double operator()(double v) const;
  static Kind parse_kind(const std::string& name);
};

class InstrumentRecipe {
 public:
  enum class Variant { FourierSieve, SelfInstrument, Custom };

  // F_j = sqrt(2) * sum_c sin(j pi W_c), H_j = sqrt(2) * sum_c cos(j pi W_c).
  static InstrumentRecipe fourier_sieve() { return InstrumentRecipe(Variant::FourierSieve); }
  // F = X, H = X^2 elementwise.
  static InstrumentRecipe self_instrument() { return InstrumentRecipe(Variant::SelfInstrument); }
  // One basis function per column of F and H, each exactly p long.
  static InstrumentRecipe custom(std::vector<BasisFunction> f_columns, std::vector<BasisFunction> h_columns);

  Variant variant() const noexcept { return variant_; }
  const std::vector<BasisFunction>& f_columns() const noexcept { return f_; }
  const std::vector<BasisFunction>& h_columns() const noexcept { return h_; }

 private:
  explicit InstrumentRecipe(Variant v) : variant_(v) {}

  Variant variant_;
  std::vector<BasisFunction> f_;
  std::vector<BasisFunction> h_;
};

std::string to_string(InstrumentRecipe::Variant v);

InstrumentSet build_instruments(const InstrumentRecipe& recipe, const Dataset& data);

// Fourier sieve evaluated on an arbitrary n x q matrix, p columns each.
void fourier_basis(const Matrix& w, Index p, Matrix& f, Matrix& h);

// Column variance with denominator n.
double population_variance(const Eigen::Ref<const Vector>& column);

// diag(w1[l_1..l_r], w2[l_1..l_r]) for the ascending support l.
Matrix weight_matrix(const InstrumentSet& inst, const std::vector<Index>& support);

}  // namespace fgmm
