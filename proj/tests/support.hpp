#pragma once

#include "fgmm/instruments.hpp"
#include "fgmm/model.hpp"
#include "fgmm/objective.hpp"

#include <cmath>
#include <memory>
#include <random>

namespace fgmm::test {

inline double rel_err(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

// Linear sample with a few endogenous columns and an external 3-column W.
struct Toy {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const InstrumentSet> inst;
};

inline Toy toy_linear(std::uint64_t seed, Index n, Index p, bool fourier = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix w(n, 3);
  Matrix x(n, p);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 3; ++c) w(i, c) = N(rng);
    const double e = N(rng);
    for (Index j = 0; j < p; ++j) x(i, j) = 0.7 * w(i, j % 3) + N(rng) + (j % 4 == 3 ? 0.5 * e : 0.0);
    y[i] = 2.0 * x(i, 0) - 1.5 * x(i, std::min<Index>(1, p - 1)) + e;
  }
  auto data = std::make_shared<const Dataset>(y, x, w);
  const auto recipe = fourier ? InstrumentRecipe::fourier_sieve() : InstrumentRecipe::self_instrument();
  return {data, std::make_shared<const InstrumentSet>(build_instruments(recipe, *data))};
}

}  // namespace fgmm::test
