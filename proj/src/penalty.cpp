#include "fgmm/penalty.hpp"

#include "fgmm/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace fgmm {

namespace {

// On [lo, hi] the penalty is c0 + c1 t + 0.5 c2 t^2.
struct Piece {
  double lo;
  double hi;
  double c0;
  double c1;
  double c2;
};

struct Pieces {
  std::array<Piece, 3> items{};
  int count = 0;
  void add(Piece p) { items[static_cast<std::size_t>(count++)] = p; }
};

constexpr double kInf = std::numeric_limits<double>::infinity();

Pieces pieces_of(const PenaltySpec& spec) {
  const double lam = spec.lambda();
  Pieces out;
  switch (spec.family()) {
    case PenaltyFamily::L1:
      out.add({0.0, kInf, 0.0, lam, 0.0});
      break;
    case PenaltyFamily::SCAD: {
      const double a = spec.shape();
      out.add({0.0, lam, 0.0, lam, 0.0});
      out.add({lam, a * lam, -lam * lam / (2.0 * (a - 1.0)), a * lam / (a - 1.0), -1.0 / (a - 1.0)});
      out.add({a * lam, kInf, 0.5 * (a + 1.0) * lam * lam, 0.0, 0.0});
      break;
    }
    case PenaltyFamily::MCP: {
      const double gam = spec.shape();
      out.add({0.0, gam * lam, 0.0, lam, -1.0 / gam});
      out.add({gam * lam, kInf, 0.5 * gam * lam * lam, 0.0, 0.0});
      break;
    }
    case PenaltyFamily::HardThreshold:
      out.add({0.0, lam, 0.0, 2.0 * lam, -2.0});
      out.add({lam, kInf, lam * lam, 0.0, 0.0});
      break;
  }
  return out;
}

void require_nonnegative(double t) {
  if (!(t >= 0.0)) {
    throw DomainError("penalty argument must be a nonnegative number, got " + std::to_string(t));
  }
}

}  // namespace

std::string_view to_string(PenaltyFamily family) {
  switch (family) {
    case PenaltyFamily::SCAD:
      return "scad";
    case PenaltyFamily::MCP:
      return "mcp";
    case PenaltyFamily::L1:
      return "l1";
    case PenaltyFamily::HardThreshold:
      return "hard";
  }
  return "?";
}

PenaltyFamily parse_penalty_family(std::string_view name) {
  if (name == "scad") return PenaltyFamily::SCAD;
  if (name == "mcp") return PenaltyFamily::MCP;
  if (name == "l1") return PenaltyFamily::L1;
  if (name == "hard") return PenaltyFamily::HardThreshold;
  throw DomainError("unknown penalty family '" + std::string(name) + "'");
}

PenaltySpec::PenaltySpec(PenaltyFamily family, double lambda)
    : PenaltySpec(family, lambda,
                  family == PenaltyFamily::SCAD  ? kDefaultScadA
                  : family == PenaltyFamily::MCP ? kDefaultMcpGamma
                                                 : 0.0) {}

PenaltySpec::PenaltySpec(PenaltyFamily family, double lambda, double shape)
    : family_(family), lambda_(lambda), shape_(shape) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("penalty lambda must be positive and finite");
  }
  if (family == PenaltyFamily::SCAD && !(shape > 2.0)) {
    throw DomainError("SCAD requires a > 2");
  }
  if (family == PenaltyFamily::MCP && !(shape > 1.0)) {
    throw DomainError("MCP requires gamma > 1");
  }
}

double penalty_value(const PenaltySpec& spec, double t) {
  require_nonnegative(t);
  const double lam = spec.lambda();
  switch (spec.family()) {
    case PenaltyFamily::L1:
      return lam * t;
    case PenaltyFamily::SCAD: {
      const double a = spec.shape();
      if (t <= lam) return lam * t;
      if (t < a * lam) return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0));
      return 0.5 * (a + 1.0) * lam * lam;
    }
    case PenaltyFamily::MCP: {
      const double gam = spec.shape();
      if (t < gam * lam) return lam * t - t * t / (2.0 * gam);
      return 0.5 * gam * lam * lam;
    }
    case PenaltyFamily::HardThreshold:
      if (t < lam) return lam * lam - (lam - t) * (lam - t);
      return lam * lam;
  }
  return 0.0;
}

double penalty_derivative(const PenaltySpec& spec, double t) {
  require_nonnegative(t);
  const double lam = spec.lambda();
  switch (spec.family()) {
    case PenaltyFamily::L1:
      return lam;
    case PenaltyFamily::SCAD: {
      const double a = spec.shape();
      if (t <= lam) return lam;
      if (t < a * lam) return (a * lam - t) / (a - 1.0);
      return 0.0;
    }
    case PenaltyFamily::MCP: {
      const double gam = spec.shape();
      if (t < gam * lam) return lam - t / gam;
      return 0.0;
    }
    case PenaltyFamily::HardThreshold:
      if (t < lam) return 2.0 * (lam - t);
      return 0.0;
  }
  return 0.0;
}

double scalar_prox(const PenaltySpec& spec, double z, double curvature) {
  if (!(curvature > 0.0) || !std::isfinite(curvature)) {
    throw DomainError("prox curvature must be positive and finite");
  }
  if (!std::isfinite(z)) throw DomainError("prox argument is not finite");

  // The minimizer shares the sign of z, so solve on b >= 0 against |z|.
  const double az = std::abs(z);
  const auto objective = [&](double b) {
    const double d = az - b;
    return 0.5 * curvature * d * d + penalty_value(spec, b);
  };

  // Candidates: 0, every finite breakpoint, and each piece's clipped vertex.
  std::array<double, 10> cand{};
  std::size_t nc = 0;
  cand[nc++] = 0.0;
  const Pieces pieces = pieces_of(spec);
  for (int i = 0; i < pieces.count; ++i) {
    const Piece& pc = pieces.items[static_cast<std::size_t>(i)];
    if (std::isfinite(pc.hi)) cand[nc++] = pc.hi;
    const double denom = curvature + pc.c2;
    if (denom > 0.0) {
      const double vertex = (curvature * az - pc.c1) / denom;
      cand[nc++] = std::clamp(vertex, pc.lo, std::isfinite(pc.hi) ? pc.hi : std::max(pc.lo, vertex));
    }
  }
  std::sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(nc));

  double best = 0.0;
  double best_obj = objective(0.0);
  for (std::size_t i = 1; i < nc; ++i) {
    // P is nondecreasing, so nothing beyond |z| can win. Clamping rather than
    // skipping keeps a vertex that rounded to just above |z|.
    const double b = std::min(cand[i], az);
    const double v = objective(b);
    if (v < best_obj) {
      best_obj = v;
      best = b;
    }
  }
  if (best == 0.0) return 0.0;
  return z < 0.0 ? -best : best;
}

}  // namespace fgmm
