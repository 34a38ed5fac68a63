#include "fgmm/instruments.hpp"

#include "fgmm/error.hpp"

#include <cmath>
#include <numbers>

namespace fgmm {

namespace {

constexpr double kMinVariance = 1e-12;

Vector reciprocal_variances(const Matrix& m, const char* which) {
  Vector w(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double v = population_variance(m.col(j));
    if (!(v >= kMinVariance) || !std::isfinite(v)) {
      throw DegenerateInstrumentError(which, static_cast<int>(j));
    }
    w[j] = 1.0 / v;
  }
  return w;
}

}  // namespace

double population_variance(const Eigen::Ref<const Vector>& column) {
  const double n = static_cast<double>(column.size());
  const double mean = column.sum() / n;
  return (column.array() - mean).square().sum() / n;
}

InstrumentSet InstrumentSet::from_columns(Matrix f, Matrix h) {
  if (f.rows() != h.rows() || f.cols() != h.cols()) {
    throw DimensionError("instrument matrices F and H must have the same shape");
  }
  if (!f.allFinite() || !h.allFinite()) throw DomainError("instrument matrix has non-finite entries");
  InstrumentSet out;
  out.w1 = reciprocal_variances(f, "F");
  out.w2 = reciprocal_variances(h, "H");
  out.f = std::move(f);
  out.h = std::move(h);
  return out;
}

double BasisFunction::operator()(double v) const {
  switch (kind) {
    case Kind::Identity:
      return scale * v;
    case Kind::Square:
      return scale * v * v;
    case Kind::SinPi:
      return scale * std::sin(freq * std::numbers::pi * v);
    case Kind::CosPi:
      return scale * std::cos(freq * std::numbers::pi * v);
    case Kind::CosPlusOne:
      return scale * (std::cos(v) + 1.0);
  }
  return 0.0;
}

BasisFunction::Kind BasisFunction::parse_kind(const std::string& name) {
  if (name == "identity") return Kind::Identity;
  if (name == "square") return Kind::Square;
  if (name == "sin_pi") return Kind::SinPi;
  if (name == "cos_pi") return Kind::CosPi;
  if (name == "cos_plus_one") return Kind::CosPlusOne;
  throw DomainError("unknown basis function '" + name + "'");
}

InstrumentRecipe InstrumentRecipe::custom(std::vector<BasisFunction> f_columns,
                                          std::vector<BasisFunction> h_columns) {
  if (f_columns.size() != h_columns.size()) {
    throw DimensionError("custom recipe needs as many H columns as F columns");
  }
  InstrumentRecipe r(Variant::Custom);
  r.f_ = std::move(f_columns);
  r.h_ = std::move(h_columns);
  return r;
}

std::string to_string(InstrumentRecipe::Variant v) {
  switch (v) {
    case InstrumentRecipe::Variant::FourierSieve:
      return "fourier";
    case InstrumentRecipe::Variant::SelfInstrument:
      return "self";
    case InstrumentRecipe::Variant::Custom:
      return "custom";
  }
  return "?";
}

void fourier_basis(const Matrix& w, Index p, Matrix& f, Matrix& h) {
  const Index n = w.rows();
  f.resize(n, p);
  h.resize(n, p);
  for (Index j = 0; j < p; ++j) {
    const double freq = static_cast<double>(j + 1) * std::numbers::pi;
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      double c = 0.0;
      for (Index k = 0; k < w.cols(); ++k) {
        s += std::sin(freq * w(i, k));
        c += std::cos(freq * w(i, k));
      }
      f(i, j) = std::numbers::sqrt2 * s;
      h(i, j) = std::numbers::sqrt2 * c;
    }
  }
}

InstrumentSet build_instruments(const InstrumentRecipe& recipe, const Dataset& data) {
  const Index n = data.n();
  const Index p = data.p();
  Matrix f;
  Matrix h;
  switch (recipe.variant()) {
    case InstrumentRecipe::Variant::FourierSieve:
      fourier_basis(data.w(), p, f, h);
      break;
    case InstrumentRecipe::Variant::SelfInstrument:
      f = data.x();
      h = data.x().array().square().matrix();
      break;
    case InstrumentRecipe::Variant::Custom: {
      if (static_cast<Index>(recipe.f_columns().size()) != p) {
        throw DimensionError("custom recipe defines " + std::to_string(recipe.f_columns().size()) +
                             " columns but p = " + std::to_string(p));
      }
      f.resize(n, p);
      h.resize(n, p);
      const auto fill = [&](const BasisFunction& fn, Matrix& out, Index j) {
        const Matrix& src = fn.source == BasisFunction::Source::W ? data.w() : data.x();
        if (fn.column < 0 || fn.column >= src.cols()) {
          throw DimensionError("custom basis column " + std::to_string(fn.column) + " out of range");
        }
        for (Index i = 0; i < n; ++i) out(i, j) = fn(src(i, fn.column));
      };
      for (Index j = 0; j < p; ++j) {
        fill(recipe.f_columns()[static_cast<std::size_t>(j)], f, j);
        fill(recipe.h_columns()[static_cast<std::size_t>(j)], h, j);
      }
      break;
    }
  }
  return InstrumentSet::from_columns(std::move(f), std::move(h));
}

Matrix weight_matrix(const InstrumentSet& inst, const std::vector<Index>& support) {
  if (support.empty()) throw DimensionError("weight matrix needs a nonempty support");
  const Index r = static_cast<Index>(support.size());
  Matrix j = Matrix::Zero(2 * r, 2 * r);
  for (Index k = 0; k < r; ++k) {
    const Index l = support[static_cast<std::size_t>(k)];
    if (l < 0 || l >= inst.p()) throw DimensionError("support index out of range");
    j(k, k) = inst.w1[l];
    j(r + k, r + k) = inst.w2[l];
  }
  return j;
}

}  // namespace fgmm
