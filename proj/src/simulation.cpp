#include "fgmm/simulation.hpp"

#include "fgmm/error.hpp"
#include "fgmm/inference.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fgmm::sim {

namespace {

constexpr double kStrongSignal[5] = {5.0, -4.0, 7.0, -2.0, 1.5};
constexpr double kWeakSignal[5] = {5.0, -4.0, 7.0, -0.5, 0.1};

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GeneratedData generate_mixed(const DgpSpec& spec, const double (&signal)[5]) {
  const Index n = spec.n;
  const Index p = spec.p;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix w(n, 3);
  Vector eps(n);
  Matrix u(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 3; ++c) w(i, c) = normal(rng);
    eps[i] = normal(rng);
    for (Index j = 0; j < p; ++j) u(i, j) = normal(rng);
  }
  Matrix f, h;
  fourier_basis(w, p, f, h);

  std::vector<Index> endogenous = {0, 1, 2};
  for (Index j = 5; j < 2 + spec.m; ++j) endogenous.push_back(j);
  std::vector<bool> is_endo(static_cast<std::size_t>(p), false);
  for (const Index j : endogenous) is_endo[static_cast<std::size_t>(j)] = true;

  Matrix x(n, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double base = f(i, j) + h(i, j);
      x(i, j) = is_endo[static_cast<std::size_t>(j)] ? (base + 1.0) * (3.0 * eps[i] + 1.0) : base + u(i, j);
    }
  }
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < 5; ++j) beta[j] = signal[j];
  Vector y = x * beta + eps;
  return {Dataset(std::move(y), std::move(x), std::move(w)), Coefficients(beta), std::move(endogenous)};
}

GeneratedData generate_unimportant(const DgpSpec& spec) {
  const Index n = spec.n;
  const Index p = spec.p;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation_sd = std::sqrt(1.0 - 0.25);

  Matrix x(n, p);
  Vector eps(n);
  for (Index i = 0; i < n; ++i) {
    // AR(1) with coefficient 0.5 has exactly corr(Z_i, Z_j) = 0.5^|i-j|.
    double z = normal(rng);
    eps[i] = normal(rng);
    for (Index j = 0; j < p; ++j) {
      if (j > 0) z = 0.5 * z + innovation_sd * normal(rng);
      x(i, j) = j < 5 ? z : (z + 5.0) * (1.0 + eps[i]);
    }
  }
  Vector beta = Vector::Zero(p);
  for (Index j = 0; j < 5; ++j) beta[j] = kStrongSignal[j];
  Vector y = x * beta + eps;
  std::vector<Index> endogenous;
  for (Index j = 5; j < p; ++j) endogenous.push_back(j);
  Matrix w = x;
  return {Dataset(std::move(y), std::move(x), std::move(w)), Coefficients(beta), std::move(endogenous)};
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (const double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (const double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct RepOutcome {
  std::vector<ReplicationRecord> records;
  std::vector<double> seconds;
};

RepOutcome run_replication(const DgpSpec& spec, const std::vector<MethodSpec>& methods, int r,
                           const ExperimentOptions& options) {
  using Clock = std::chrono::steady_clock;
  RepOutcome out;
  out.records.resize(methods.size());
  out.seconds.assign(methods.size(), 0.0);

  DgpSpec rep_spec = spec;
  rep_spec.seed = replication_seed(spec.seed, static_cast<std::uint64_t>(r));
  std::shared_ptr<const Dataset> data;
  Coefficients truth;
  std::shared_ptr<const InstrumentSet> inst;
  std::string setup_error;
  try {
    GeneratedData gen = generate(rep_spec);
    truth = gen.true_beta;
    data = std::make_shared<const Dataset>(std::move(gen.data));
    inst = std::make_shared<const InstrumentSet>(build_instruments(spec.recipe(), *data));
  } catch (const std::exception& e) {
    setup_error = e.what();
  }

  struct FgmmFit {
    std::optional<ObjectiveContext> ctx;
    FitResult fit;
    std::string error;
  };
  std::map<std::pair<int, std::pair<double, double>>, FgmmFit> fgmm_cache;
  const auto fgmm_for = [&](const PenaltySpec& pen) -> FgmmFit& {
    const auto key = std::make_pair(static_cast<int>(pen.family()), std::make_pair(pen.lambda(), pen.shape()));
    auto it = fgmm_cache.find(key);
    if (it != fgmm_cache.end()) return it->second;
    FgmmFit entry;
    try {
      entry.ctx.emplace(LinkFamily::Linear, data, inst, pen, options.kernel);
      entry.fit = fit_fgmm(*entry.ctx, options.solver);
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    return fgmm_cache.emplace(key, std::move(entry)).first->second;
  };

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const MethodSpec& method = methods[mi];
    ReplicationRecord& rec = out.records[mi];
    const auto start = Clock::now();
    if (!setup_error.empty()) {
      rec.ok = false;
      rec.error = setup_error;
      continue;
    }
    try {
      switch (method.kind) {
        case MethodSpec::Kind::PLS: {
          const FitResult fit = fit_pls(LinkFamily::Linear, *data, method.penalty, options.solver);
          rec.metrics = score(fit.beta, truth);
          rec.sweeps = fit.sweeps_used;
          rec.converged = fit.converged;
          rec.trace_nonincreasing = nonincreasing(fit.objective_trace);
          break;
        }
        case MethodSpec::Kind::FGMM: {
          const FgmmFit& f = fgmm_for(method.penalty);
          if (!f.error.empty()) throw Error(f.error);
          rec.metrics = score(f.fit.beta, truth);
          rec.sweeps = f.fit.sweeps_used;
          rec.converged = f.fit.converged;
          rec.trace_nonincreasing = nonincreasing(f.fit.objective_trace);
          break;
        }
        case MethodSpec::Kind::PostFGMM: {
          const FgmmFit& f = fgmm_for(method.penalty);
          if (!f.error.empty()) throw Error(f.error);
          const std::vector<Index> support = f.fit.beta.support();
          if (support.empty()) throw Error("post-FGMM: first stage selected no regressors");
          Vector first(static_cast<Index>(support.size()));
          for (std::size_t k = 0; k < support.size(); ++k) first[static_cast<Index>(k)] = f.fit.beta[support[k]];
          const Matrix basis = sieve_projection_basis(*inst, support);
          if (basis.cols() >= data->n()) throw Error("post-FGMM: projection basis wider than the sample");
          const OptimalInstruments opt = estimate_optimal_instruments(
              OptimalInstrumentVariant::Homoskedastic, LinkFamily::Linear, *data, support, basis, first);
          const EfficientStepResult step =
              post_fgmm(LinkFamily::Linear, *data, support, opt.d_hat, opt.sigma2_hat, first);
          rec.metrics = score(Coefficients(embed(step.beta_star, support, data->p())), truth);
          rec.sweeps = step.iterations;
          rec.converged = step.converged;
          rec.trace_nonincreasing = nonincreasing(f.fit.objective_trace);
          break;
        }
      }
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    out.seconds[mi] = std::chrono::duration<double>(Clock::now() - start).count();
  }
  return out;
}

std::vector<ReplicationReport> aggregate(const std::vector<MethodSpec>& methods, std::vector<RepOutcome> reps) {
  std::vector<ReplicationReport> reports;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    ReplicationReport rep{methods[mi], {}, 0, 0, 0, {}, {}, {}, {}, 0.0};
    std::vector<double> ms, mn, tp, fp;
    for (auto& outcome : reps) {
      ReplicationRecord& rec = outcome.records[mi];
      rep.elapsed_seconds += outcome.seconds[mi];
      if (!rec.ok) {
        ++rep.failures;
      } else {
        ms.push_back(rec.metrics.mse_s);
        mn.push_back(rec.metrics.mse_n);
        tp.push_back(rec.metrics.tp);
        fp.push_back(rec.metrics.fp);
        if (!rec.converged) ++rep.nonconverged;
        if (!rec.trace_nonincreasing) ++rep.trace_violations;
      }
      rep.per_rep.push_back(std::move(rec));
    }
    rep.mse_s = summarize(ms);
    rep.mse_n = summarize(mn);
    rep.tp = summarize(tp);
    rep.fp = summarize(fp);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void check_request(const DgpSpec& spec, int reps) {
  spec.validate();
  if (reps < 1) throw DomainError("reps must be at least 1");
}

}  // namespace

void DgpSpec::validate() const {
  if (p < 5) throw DomainError("design needs p >= 5 for the five nonzero coefficients");
  if (n < 2) throw DomainError("design needs n >= 2");
  if (variant != Variant::UnimportantEndogeneity && (m < 3 || m + 2 > p)) {
    throw DomainError("design needs 3 <= m <= p - 2 endogenous regressors");
  }
}

InstrumentRecipe DgpSpec::recipe() const {
  return variant == Variant::UnimportantEndogeneity ? InstrumentRecipe::self_instrument()
                                                    : InstrumentRecipe::fourier_sieve();
}

std::string to_string(DgpSpec::Variant v) {
  switch (v) {
    case DgpSpec::Variant::MixedEndogeneity:
      return "mixed";
    case DgpSpec::Variant::UnimportantEndogeneity:
      return "unimportant";
    case DgpSpec::Variant::WeakSignal:
      return "weak";
  }
  return "?";
}

DgpSpec::Variant parse_dgp_variant(const std::string& name) {
  if (name == "mixed") return DgpSpec::Variant::MixedEndogeneity;
  if (name == "unimportant") return DgpSpec::Variant::UnimportantEndogeneity;
  if (name == "weak") return DgpSpec::Variant::WeakSignal;
  throw DomainError("unknown design '" + name + "'");
}

GeneratedData generate(const DgpSpec& spec) {
  spec.validate();
  switch (spec.variant) {
    case DgpSpec::Variant::MixedEndogeneity:
      return generate_mixed(spec, kStrongSignal);
    case DgpSpec::Variant::WeakSignal:
      return generate_mixed(spec, kWeakSignal);
    case DgpSpec::Variant::UnimportantEndogeneity:
      return generate_unimportant(spec);
  }
  throw DomainError("unknown design");
}

std::uint64_t replication_seed(std::uint64_t master, std::uint64_t replication) {
  return splitmix64(splitmix64(master) ^ splitmix64(replication + 0x632be59bd9b4e019ULL));
}

Metrics score(const Coefficients& fitted, const Coefficients& truth) {
  if (fitted.size() != truth.size()) throw DimensionError("score: coefficient lengths differ");
  Metrics m;
  double ss = 0.0, sn = 0.0;
  for (Index j = 0; j < truth.size(); ++j) {
    const bool important = truth[j] != 0.0;
    const bool selected = fitted[j] != 0.0;
    if (important) {
      const double d = fitted[j] - truth[j];
      ss += d * d;
      m.tp += selected;
    } else {
      sn += fitted[j] * fitted[j];
      m.fp += selected;
    }
  }
  m.mse_s = std::sqrt(ss);
  m.mse_n = std::sqrt(sn);
  return m;
}

std::string to_string(MethodSpec::Kind k) {
  switch (k) {
    case MethodSpec::Kind::PLS:
      return "PLS";
    case MethodSpec::Kind::FGMM:
      return "FGMM";
    case MethodSpec::Kind::PostFGMM:
      return "post-FGMM";
  }
  return "?";
}

MethodSpec::Kind parse_method_kind(const std::string& name) {
  if (name == "PLS" || name == "pls") return MethodSpec::Kind::PLS;
  if (name == "FGMM" || name == "fgmm") return MethodSpec::Kind::FGMM;
  if (name == "post-FGMM" || name == "post_fgmm" || name == "postfgmm") return MethodSpec::Kind::PostFGMM;
  throw DomainError("unknown method '" + name + "'");
}

std::string ReplicationReport::label() const {
  std::ostringstream os;
  os << to_string(method.kind) << " " << to_string(method.penalty.family()) << "(lambda=" << method.penalty.lambda()
     << ")";
  return os.str();
}

bool nonincreasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) return false;
  }
  return true;
}

std::vector<ReplicationReport> run_experiment_serial(const DgpSpec& spec, const std::vector<MethodSpec>& methods,
                                                     int reps, const ExperimentOptions& options) {
  check_request(spec, reps);
  std::vector<RepOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) outcomes.push_back(run_replication(spec, methods, r, options));
  return aggregate(methods, std::move(outcomes));
}

std::vector<ReplicationReport> run_experiment(const DgpSpec& spec, const std::vector<MethodSpec>& methods, int reps,
                                              int workers, const ExperimentOptions& options) {
  check_request(spec, reps);
  if (workers < 1) throw DomainError("workers must be at least 1");
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int r = 0; r < reps; ++r) {
    outcomes[static_cast<std::size_t>(r)] = run_replication(spec, methods, r, options);
  }
  return aggregate(methods, std::move(outcomes));
}

}  // namespace fgmm::sim
