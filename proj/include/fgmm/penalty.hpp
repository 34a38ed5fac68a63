#pragma once

#include <string_view>

namespace fgmm {

enum class PenaltyFamily { SCAD, MCP, L1, HardThreshold };

std::string_view to_string(PenaltyFamily family);
PenaltyFamily parse_penalty_family(std::string_view name);

// Folded-concave penalty P(t), t >= 0. `shape` is a for SCAD (a > 2) and
// gamma for MCP (gamma > 1); it is ignored by L1 and HardThreshold.
class PenaltySpec {
 public:
  static constexpr double kDefaultScadA = 3.7;
  static constexpr double kDefaultMcpGamma = 3.0;

  PenaltySpec(PenaltyFamily family, double lambda);
  PenaltySpec(PenaltyFamily family, double lambda, double shape);

  static PenaltySpec scad(double lambda, double a = kDefaultScadA) {
    return {PenaltyFamily::SCAD, lambda, a};
  }
  static PenaltySpec mcp(double lambda, double gamma = kDefaultMcpGamma) {
    return {PenaltyFamily::MCP, lambda, gamma};
  }
  static PenaltySpec l1(double lambda) { return {PenaltyFamily::L1, lambda}; }
  static PenaltySpec hard(double lambda) { return {PenaltyFamily::HardThreshold, lambda}; }

  PenaltyFamily family() const noexcept { return family_; }
  double lambda() const noexcept { return lambda_; }
  double shape() const noexcept { return shape_; }

  friend bool operator==(const PenaltySpec&, const PenaltySpec&) = default;

 private:
  PenaltyFamily family_;
  double lambda_;
  double shape_;
};

double penalty_value(const PenaltySpec& spec, double t);

// P'(t) for t > 0; at t = 0 returns the right limit P'(0+).
double penalty_derivative(const PenaltySpec& spec, double t);

// Global minimizer of 0.5 * curvature * (z - b)^2 + P(|b|) over real b.
// Equal-objective ties go to the smaller magnitude.
double scalar_prox(const PenaltySpec& spec, double z, double curvature);

}  // namespace fgmm
