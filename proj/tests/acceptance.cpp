// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Monte Carlo criteria use 100 replications from a fixed master seed.

#include "fgmm/inference.hpp"
#include "fgmm/kernels.hpp"
#include "fgmm/objective.hpp"
#include "fgmm/penalty.hpp"
#include "fgmm/report.hpp"
#include "fgmm/simulation.hpp"
#include "fgmm/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fgmm;
using namespace fgmm::sim;

namespace {

constexpr std::uint64_t kMasterSeed = 20240601;
constexpr int kReps = 100;

int failures = 0;
int trace_violations = 0;  // accumulated over criteria 1-5

void report(int id, bool pass, const std::string& what, const std::string& detail, double seconds) {
  std::printf("[%s] C%-2d %s | %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

int workers() { return kernels::max_threads(); }

std::vector<ReplicationReport> experiment(const DgpSpec& spec, const std::vector<MethodSpec>& methods, int reps = kReps) {
  auto out = run_experiment(spec, methods, reps, workers());
  for (const auto& r : out) trace_violations += r.trace_violations;
  return out;
}

std::string row(const ReplicationReport& r) {
  std::ostringstream os;
  os << r.label() << ": TP " << fmt("%.2f", r.tp.mean) << " FP " << fmt("%.2f", r.fp.mean) << " MSE_S "
     << fmt("%.3f", r.mse_s.mean);
  if (r.failures) os << " failures " << r.failures;
  return os.str();
}

// Unimportant-endogeneity design at dimension p.
void criterion_selection(int id, Index p, double pls_lo, double pls_hi) {
  Timer t;
  const DgpSpec spec{DgpSpec::Variant::UnimportantEndogeneity, p, 0, 200, kMasterSeed};
  const auto r = experiment(spec, {{MethodSpec::Kind::FGMM, PenaltySpec::scad(0.1)},
                                   {MethodSpec::Kind::PLS, PenaltySpec::scad(0.1)}});
  const auto& fg = r[0];
  const auto& pls = r[1];
  const bool ok = fg.failures == 0 && fg.tp.mean == 5.0 && fg.fp.mean <= 0.5 && pls.failures == 0 &&
                  pls.fp.mean >= pls_lo && pls.fp.mean <= pls_hi;
  report(id, ok,
         "unimportant endogeneity n=200 p=" + std::to_string(p) + ": FGMM TP=5, FP<=0.5; PLS FP in [" +
             fmt("%.2f", pls_lo) + ", " + fmt("%.2f", pls_hi) + "]",
         row(fg) + "; " + row(pls), t.seconds());
}

void criterion_mixed() {
  Timer t;
  const DgpSpec spec{DgpSpec::Variant::MixedEndogeneity, 50, 10, 100, kMasterSeed};
  const auto r = experiment(spec, {{MethodSpec::Kind::FGMM, PenaltySpec::scad(0.1)},
                                   {MethodSpec::Kind::PLS, PenaltySpec::scad(1.0)}});
  const auto& fg = r[0];
  const auto& pls = r[1];
  const bool ok = fg.failures == 0 && pls.failures == 0 && fg.tp.mean == 5.0 && fg.fp.mean >= 1.5 &&
                  fg.fp.mean <= 6.0 && fg.mse_s.mean >= 0.05 && fg.mse_s.mean <= 0.20 &&
                  pls.mse_s.mean >= 1.5 * fg.mse_s.mean;
  report(3, ok,
         "mixed endogeneity n=100 p=50: FGMM TP=5, FP in [1.5, 6], MSE_S in [0.05, 0.20]; PLS(1) MSE_S >= 1.5x FGMM",
         row(fg) + "; " + row(pls) + "; ratio " + fmt("%.2f", pls.mse_s.mean / fg.mse_s.mean), t.seconds());
}

void criterion_post_fgmm() {
  Timer t;
  const int batches = 10;
  int wins = 0;
  std::ostringstream detail;
  for (int b = 0; b < batches; ++b) {
    const DgpSpec spec{DgpSpec::Variant::MixedEndogeneity, 50, 10, 100, replication_seed(kMasterSeed ^ 0x5eedULL, b)};
    const auto r = experiment(spec, {{MethodSpec::Kind::FGMM, PenaltySpec::scad(0.1)},
                                     {MethodSpec::Kind::PostFGMM, PenaltySpec::scad(0.1)}});
    const bool win = r[1].failures == 0 && r[1].mse_s.mean < r[0].mse_s.mean;
    wins += win;
    detail << (b ? " " : "") << fmt("%.4f", r[1].mse_s.mean) << (win ? "<" : ">=") << fmt("%.4f", r[0].mse_s.mean);
  }
  report(4, wins * 10 >= batches * 8,
         "post-FGMM MSE_S below first-stage FGMM in >= 80% of paired 100-rep batches",
         std::to_string(wins) + "/" + std::to_string(batches) + " batches: " + detail.str(), t.seconds());
}

void criterion_weak() {
  Timer t;
  const DgpSpec spec{DgpSpec::Variant::WeakSignal, 50, 10, 100, kMasterSeed};
  const auto r = experiment(spec, {{MethodSpec::Kind::FGMM, PenaltySpec::scad(0.1)}});
  report(5, r[0].failures == 0 && r[0].tp.mean >= 3.7 && r[0].tp.mean <= 4.3,
         "weak signal p=50 m=10: FGMM TP in [3.7, 4.3]", row(r[0]), t.seconds());
}

// Independent finite-difference oracle for the coordinate model.
void criterion_gradient() {
  Timer t;
  std::mt19937_64 rng(kMasterSeed + 6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::bernoulli_distribution zero(0.25);
  const LinkFamily families[] = {LinkFamily::Linear, LinkFamily::Logit, LinkFamily::Probit};
  double worst1 = 0.0, worst2 = 0.0;
  int points = 0;
  for (int design = 0; design < 10; ++design) {
    const LinkFamily fam = families[design % 3];
    DgpSpec spec{design % 2 ? DgpSpec::Variant::MixedEndogeneity : DgpSpec::Variant::UnimportantEndogeneity, 12, 5,
                 80, replication_seed(kMasterSeed, 1000 + design)};
    const auto gen = generate(spec);
    Vector y = gen.data.y();
    if (fam != LinkFamily::Linear) {
      for (Index i = 0; i < y.size(); ++i) y[i] = y[i] > 0.0 ? 1.0 : 0.0;
    }
    // Scale regressors so nonlinear links stay away from saturation.
    const Matrix x = fam == LinkFamily::Linear ? gen.data.x() : Matrix(gen.data.x() / 6.0);
    auto data = std::make_shared<const Dataset>(y, x, gen.data.w());
    auto inst = std::make_shared<const InstrumentSet>(build_instruments(spec.recipe(), *data));
    const ObjectiveContext ctx(fam, data, inst, PenaltySpec::scad(0.1), SmoothingKernel());
    for (int k = 0; k < 20; ++k, ++points) {
      Vector b(12);
      for (Index j = 0; j < 12; ++j) b[j] = zero(rng) ? 0.0 : u(rng);
      const Index c = static_cast<Index>(rng() % 12);
      const CoordinateModel cm = coordinate_model(ctx, Coefficients(b), c);
      const auto at = [&](double v) {
        Vector bb = b;
        bb[c] = v;
        return smoothed_loss(ctx, Coefficients(bb));
      };
      const double h1 = 1e-6, h2 = 1e-4;
      const double fd1 = (at(b[c] + h1) - at(b[c] - h1)) / (2.0 * h1);
      const double fd2 = (at(b[c] + h2) - 2.0 * at(b[c]) + at(b[c] - h2)) / (h2 * h2);
      worst1 = std::max(worst1, std::abs(cm.g1 - fd1) / std::max(1.0, std::abs(fd1)));
      worst2 = std::max(worst2, std::abs(cm.g2 - fd2) / std::max(1.0, std::abs(fd2)));
    }
  }
  report(6, worst1 < 1e-5 && worst2 < 1e-4, "coordinate slope/curvature vs central differences",
         std::to_string(points) + " points, max rel err g1 " + fmt("%.2e", worst1) + ", g2 " + fmt("%.2e", worst2),
         t.seconds());
}

double prox_objective(const PenaltySpec& s, double z, double c, double b) {
  return 0.5 * c * (z - b) * (z - b) + penalty_value(s, std::abs(b));
}

void criterion_prox() {
  Timer t;
  std::mt19937_64 rng(kMasterSeed + 7);
  std::uniform_real_distribution<double> uz(-3.0, 3.0), uc(0.2, 5.0), ul(0.05, 1.0);
  const double step = 1e-4;
  int bad = 0, ties = 0;
  double worst_obj = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double lam = ul(rng), z = uz(rng), c = uc(rng);
    const PenaltySpec specs[] = {PenaltySpec::scad(lam), PenaltySpec::mcp(lam), PenaltySpec::l1(lam),
                                 PenaltySpec::hard(lam)};
    const PenaltySpec& s = specs[k % 4];
    const double shape = s.family() == PenaltyFamily::SCAD || s.family() == PenaltyFamily::MCP ? s.shape() : 1.0;
    const double span = std::abs(z) + 2.0 * shape * lam;
    const long m = static_cast<long>(std::ceil(span / step));
    double best = 0.0, best_v = prox_objective(s, z, c, 0.0);
    for (long i = -m; i <= m; ++i) {
      const double b = static_cast<double>(i) * step;
      const double v = prox_objective(s, z, c, b);
      if (v < best_v) {
        best_v = v;
        best = b;
      }
    }
    const double got = scalar_prox(s, z, c);
    const double gap = std::abs(prox_objective(s, z, c, got) - best_v);
    worst_obj = std::max(worst_obj, gap);
    if (gap > 1e-6) {
      ++bad;
    } else if (std::abs(got - best) > step) {
      // Two separated global minimizers with equal value (to 1e-6): the
      // argument check is ambiguous, the objective check decides.
      ++ties;
    }
  }
  report(7, bad == 0, "scalar_prox vs grid oracle (10^4 instances, step 1e-4)",
         "objective mismatches " + std::to_string(bad) + ", max gap " + fmt("%.2e", worst_obj) +
             ", separated near-ties " + std::to_string(ties),
         t.seconds());
}

void criterion_trace() {
  report(8, trace_violations == 0, "objective traces nonincreasing in every run of criteria 1-5",
         std::to_string(trace_violations) + " violating replications", 0.0);
}

void criterion_smoothing() {
  Timer t;
  std::mt19937_64 rng(kMasterSeed + 9);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::bernoulli_distribution zero(0.4), neg(0.5);
  int bad = 0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    DgpSpec spec{k % 2 ? DgpSpec::Variant::MixedEndogeneity : DgpSpec::Variant::UnimportantEndogeneity, 10, 4, 60,
                 replication_seed(kMasterSeed, 2000 + k)};
    const auto gen = generate(spec);
    auto data = std::make_shared<const Dataset>(gen.data);
    auto inst = std::make_shared<const InstrumentSet>(build_instruments(spec.recipe(), *data));
    Vector b(10);
    for (Index j = 0; j < 10; ++j) b[j] = zero(rng) ? 0.0 : (neg(rng) ? -1.0 : 1.0) * u(rng);
    double prev = INFINITY, exact = 0.0;
    bool monotone = true;
    for (double h : {1e-2, 1e-4, 1e-6}) {
      const ObjectiveContext ctx(LinkFamily::Linear, data, inst, PenaltySpec::scad(0.1), SmoothingKernel(h));
      exact = fgmm_loss(ctx, Coefficients(b));
      const double gap = std::abs(smoothed_loss(ctx, Coefficients(b)) - exact);
      monotone = monotone && gap <= prev;
      prev = gap;
    }
    const double rel = prev / (1.0 + exact);
    worst = std::max(worst, rel);
    if (!monotone || rel >= 1e-6) ++bad;
  }
  report(9, bad == 0, "smoothed loss -> exact loss as h -> 0 (50 instances)",
         std::to_string(bad) + " failing, max |L_K - L|/(1+L) at h=1e-6: " + fmt("%.2e", worst), t.seconds());
}

void criterion_determinism() {
  Timer t;
  const DgpSpec spec{DgpSpec::Variant::MixedEndogeneity, 50, 10, 100, kMasterSeed};
  const std::vector<MethodSpec> methods{{MethodSpec::Kind::PLS, PenaltySpec::scad(1.0)},
                                        {MethodSpec::Kind::FGMM, PenaltySpec::scad(0.1)},
                                        {MethodSpec::Kind::PostFGMM, PenaltySpec::scad(0.1)}};
  const auto files = [&](int w) {
    const auto r = run_experiment(spec, methods, kReps, w);
    return simulation_report(spec, kReps, {}, r).dump(2) + "\n" + simulation_csv(r);
  };
  const std::string a = files(1), b = files(1), c = files(8);
  report(10, a == b && a == c, "byte-identical report files on rerun and for workers 1 vs 8",
         std::string("rerun ") + (a == b ? "identical" : "DIFFERENT") + ", workers 8 " + (a == c ? "identical" : "DIFFERENT") +
             " (" + std::to_string(a.size()) + " bytes)",
         t.seconds());
}

void criterion_post_ols() {
  Timer t;
  std::mt19937_64 rng(kMasterSeed + 11);
  std::normal_distribution<double> N(0, 1);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index n = 100 + 20 * k, p = 6;
    Matrix x(n, p);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) x(i, j) = N(rng);
      y[i] = 1.0 * x(i, 0) - 2.0 * x(i, 2) + 0.5 * x(i, 5) + N(rng);
    }
    const Dataset d(y, x);
    const std::vector<Index> s{0, 2, 5};
    Matrix xs(n, 3);
    xs << x.col(0), x.col(2), x.col(5);
    const Vector ols = xs.colPivHouseholderQr().solve(y);
    const auto opt =
        estimate_optimal_instruments(OptimalInstrumentVariant::Homoskedastic, LinkFamily::Linear, d, s, xs, ols);
    const auto step = post_fgmm(LinkFamily::Linear, d, s, opt.d_hat, opt.sigma2_hat, Vector::Zero(3));
    worst = std::max(worst, (step.beta_star - ols).cwiseAbs().maxCoeff());
  }
  report(11, worst <= 1e-8, "post-FGMM with D = X_S equals OLS on the support",
         "max |beta* - OLS| " + fmt("%.2e", worst), t.seconds());
}

}  // namespace

int main() {
  std::printf("acceptance: master seed %llu, %d replications, %d worker(s)\n",
              static_cast<unsigned long long>(kMasterSeed), kReps, workers());
  criterion_selection(1, 50, 20.0, 1.5 * 35.36);
  criterion_selection(2, 300, 0.5 * 210.47, 1.5 * 210.47);
  criterion_mixed();
  criterion_post_fgmm();
  criterion_weak();
  criterion_gradient();
  criterion_prox();
  criterion_trace();
  criterion_smoothing();
  criterion_determinism();
  criterion_post_ols();
  std::printf("acceptance: %d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
