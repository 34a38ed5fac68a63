#include "fgmm/cli.hpp"

#include "fgmm/error.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace fgmm::cli {

namespace {

// Typed access to a JSON object that remembers where it is in the document.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const { throw InputError(path_or_root() + ": " + what); }

  void expect_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j_.items()) {
      if (!ok.count(key)) Node(j_[key], child_path(key)).fail("unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  Node operator[](const char* key) const { return Node(j_.at(key), child_path(key)); }
  Node at(std::size_t i) const { return Node(j_.at(i), path_ + "[" + std::to_string(i) + "]"); }
  std::size_t size() const { return j_.size(); }
  bool is_array() const { return j_.is_array(); }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  long long integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<long long>();
  }
  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<long long>() >= 0)) {
      fail("expected a nonnegative integer");
    }
    return j_.get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  // A number or an array of numbers.
  std::vector<double> numbers() const {
    if (j_.is_number()) return {number()};
    if (!j_.is_array() || j_.empty()) fail("expected a number or a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j_.size(); ++i) out.push_back(at(i).number());
    return out;
  }

  template <class F>
  auto parse_with(F&& f) const {
    const std::string s = string();
    try {
      return f(s);
    } catch (const Error& e) {
      fail(e.what());
    }
  }

 private:
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string path_or_root() const { return path_.empty() ? "<root>" : path_; }

  const Json& j_;
  std::string path_;
};

int to_int(const Node& node) {
  const long long v = node.integer();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) node.fail("out of range");
  return static_cast<int>(v);
}

RunConfig::Mode parse_mode(const std::string& s) {
  if (s == "fit") return RunConfig::Mode::Fit;
  if (s == "simulate") return RunConfig::Mode::Simulate;
  throw InputError("unknown mode '" + s + "' (expected fit or simulate)");
}

OptimalInstrumentVariant parse_variant(const std::string& s) {
  if (s == "homoskedastic") return OptimalInstrumentVariant::Homoskedastic;
  if (s == "linear_projection") return OptimalInstrumentVariant::LinearProjection;
  throw InputError("unknown optimal-instrument variant '" + s + "' (expected homoskedastic or linear_projection)");
}

std::string variant_name(OptimalInstrumentVariant v) {
  return v == OptimalInstrumentVariant::Homoskedastic ? "homoskedastic" : "linear_projection";
}

InstrumentRecipe recipe_from_name(const std::string& s) {
  if (s == "self") return InstrumentRecipe::self_instrument();
  if (s == "fourier") return InstrumentRecipe::fourier_sieve();
  throw InputError("unknown recipe '" + s + "' (expected self or fourier)");
}

void check_penalties(PenaltyFamily family, std::optional<double> shape, const std::vector<double>& lambdas,
                     const std::string& path) {
  const std::string field = path.empty() ? "lambda" : path + ".lambda";
  if (lambdas.empty()) throw InputError(field + ": at least one value required");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    try {
      (void)make_penalty(family, lambdas[i], shape);
    } catch (const Error& e) {
      throw InputError(field + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
}

std::vector<sim::MethodSpec> expand(const std::vector<MethodGrid>& grids) {
  std::vector<sim::MethodSpec> out;
  for (const auto& g : grids) {
    for (const double lam : g.lambdas) out.push_back({g.kind, make_penalty(g.penalty, lam, g.shape)});
  }
  return out;
}

void print_fit_summary(std::ostream& out, const PenaltySpec& pen, const FitResult& fit,
                       const std::optional<SandwichEstimate>& sw, const std::optional<EfficientStepResult>& step) {
  out << to_string(pen.family()) << " lambda=" << pen.lambda() << ": " << (fit.converged ? "converged" : "NOT converged")
      << " after " << fit.sweeps_used << " sweeps, objective " << fit.final_exact_objective << "\n";
  const auto support = fit.beta.support();
  out << "  support (" << support.size() << "):";
  for (const Index j : support) out << " x" << j + 1;
  out << "\n";
  for (std::size_t k = 0; k < support.size(); ++k) {
    out << "  x" << std::left << std::setw(5) << support[k] + 1 << std::right << std::setw(14)
        << fit.beta[support[k]];
    if (sw) out << "  se " << std::setw(12) << std::sqrt(std::max(sw->cov_beta(Index(k), Index(k)), 0.0));
    if (step) {
      out << "  post " << std::setw(14) << step->beta_star[Index(k)] << "  se " << std::setw(12)
          << std::sqrt(std::max(step->cov_star(Index(k), Index(k)), 0.0));
    }
    out << "\n";
  }
}

}  // namespace

PenaltySpec make_penalty(PenaltyFamily family, double lambda, std::optional<double> shape) {
  if (!shape) return PenaltySpec(family, lambda);
  return PenaltySpec(family, lambda, *shape);
}

void RunConfig::validate() const {
  if (mode == Mode::Fit) {
    if (!data_path) throw InputError("data: required in fit mode");
    if (design) throw InputError("design: not allowed in fit mode");
    (void)recipe_from_name(recipe);
    check_penalties(penalty, shape, lambdas, "");
  } else {
    if (!design) throw InputError("design: required in simulate mode");
    if (data_path) throw InputError("data: not allowed in simulate mode");
    try {
      design->validate();
    } catch (const Error& e) {
      throw InputError(std::string("design: ") + e.what());
    }
    if (reps < 1) throw InputError("reps: must be at least 1");
    if (methods.empty()) throw InputError("methods: at least one method required");
    for (std::size_t i = 0; i < methods.size(); ++i) {
      check_penalties(methods[i].penalty, methods[i].shape, methods[i].lambdas, "methods[" + std::to_string(i) + "]");
    }
  }
  if (workers < 1) throw InputError("workers: must be at least 1");
  if (!(kernel_h > 0.0)) throw InputError("kernel.h: must be positive");
  try {
    solver.validate(1);
  } catch (const Error& e) {
    throw InputError(std::string("solver: ") + e.what());
  }
}

RunConfig parse_config(const Json& doc, RunConfig cfg) {
  const Node root(doc, "");
  root.expect_object({"mode", "data", "design", "recipe", "family", "penalty", "shape", "lambda", "methods", "kernel",
                      "solver", "inference", "out", "seed", "workers", "reps"});
  if (root.has("mode")) cfg.mode = root["mode"].parse_with(parse_mode);
  if (root.has("data")) cfg.data_path = root["data"].string();
  if (root.has("design")) {
    const Node d = root["design"];
    d.expect_object({"variant", "n", "p", "m"});
    sim::DgpSpec spec;
    if (!d.has("variant")) d.fail("variant is required");
    spec.variant = d["variant"].parse_with([](const std::string& s) { return sim::parse_dgp_variant(s); });
    if (d.has("n")) spec.n = to_int(d["n"]);
    if (d.has("p")) spec.p = to_int(d["p"]);
    if (d.has("m")) spec.m = to_int(d["m"]);
    cfg.design = spec;
  }
  if (root.has("recipe")) cfg.recipe = root["recipe"].string();
  if (root.has("family")) cfg.family = root["family"].parse_with([](const std::string& s) { return parse_link_family(s); });
  if (root.has("penalty")) {
    cfg.penalty = root["penalty"].parse_with([](const std::string& s) { return parse_penalty_family(s); });
  }
  if (root.has("shape")) cfg.shape = root["shape"].number();
  if (root.has("lambda")) cfg.lambdas = root["lambda"].numbers();
  if (root.has("methods")) {
    const Node ms = root["methods"];
    if (!ms.is_array()) ms.fail("expected an array");
    cfg.methods.clear();
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const Node m = ms.at(i);
      m.expect_object({"method", "penalty", "shape", "lambda"});
      MethodGrid g;
      if (!m.has("method")) m.fail("method is required");
      g.kind = m["method"].parse_with([](const std::string& s) { return sim::parse_method_kind(s); });
      if (m.has("penalty")) {
        g.penalty = m["penalty"].parse_with([](const std::string& s) { return parse_penalty_family(s); });
      }
      if (m.has("shape")) g.shape = m["shape"].number();
      if (!m.has("lambda")) m.fail("lambda is required");
      g.lambdas = m["lambda"].numbers();
      cfg.methods.push_back(std::move(g));
    }
  }
  if (root.has("kernel")) {
    const Node k = root["kernel"];
    k.expect_object({"h", "cdf"});
    if (k.has("h")) cfg.kernel_h = k["h"].number();
    if (k.has("cdf")) cfg.kernel_cdf = k["cdf"].parse_with([](const std::string& s) { return parse_kernel_cdf(s); });
  }
  if (root.has("solver")) {
    const Node s = root["solver"];
    s.expect_object({"epsilon", "max_sweeps", "pls_lambda", "zero_clamp", "backtrack_steps"});
    if (s.has("epsilon")) cfg.solver.epsilon = s["epsilon"].number();
    if (s.has("max_sweeps")) cfg.solver.max_sweeps = to_int(s["max_sweeps"]);
    if (s.has("pls_lambda")) cfg.solver.pls_lambda = s["pls_lambda"].number();
    if (s.has("zero_clamp")) cfg.solver.zero_clamp = s["zero_clamp"].number();
    if (s.has("backtrack_steps")) cfg.solver.backtrack_steps = to_int(s["backtrack_steps"]);
  }
  if (root.has("inference")) {
    const Node inf = root["inference"];
    inf.expect_object({"sandwich", "post_fgmm", "variant"});
    if (inf.has("sandwich")) cfg.sandwich = inf["sandwich"].boolean();
    if (inf.has("post_fgmm")) cfg.post_fgmm = inf["post_fgmm"].boolean();
    if (inf.has("variant")) cfg.variant = inf["variant"].parse_with(parse_variant);
  }
  if (root.has("out")) cfg.out_dir = root["out"].string();
  if (root.has("seed")) cfg.seed = root["seed"].unsigned_integer();
  if (root.has("workers")) cfg.workers = to_int(root["workers"]);
  if (root.has("reps")) cfg.reps = to_int(root["reps"]);
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("config '" + path + "': " + e.what());
  }
  return parse_config(doc, std::move(base));
}

int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const Dataset data = read_dataset_csv(*config.data_path);
  auto data_ptr = std::make_shared<const Dataset>(data);
  std::shared_ptr<const InstrumentSet> inst;
  try {
    inst = std::make_shared<const InstrumentSet>(build_instruments(recipe_from_name(config.recipe), *data_ptr));
  } catch (const DegenerateInstrumentError& e) {
    throw InputError(std::string("data: ") + e.what());
  }
  const SmoothingKernel kernel(config.kernel_h, config.kernel_cdf);

  Json fits = Json::array();
  bool all_converged = true;
  for (const double lam : config.lambdas) {
    const PenaltySpec pen = make_penalty(config.penalty, lam, config.shape);
    const ObjectiveContext ctx(config.family, data_ptr, inst, pen, kernel);
    const FitResult fit = fit_fgmm(ctx, config.solver);
    all_converged = all_converged && fit.converged;

    Json entry{{"penalty", std::string(to_string(pen.family()))}, {"lambda", lam}, {"fit", to_json(fit)}};
    const auto support = fit.beta.support();
    std::optional<SandwichEstimate> sw;
    std::optional<EfficientStepResult> step;
    if (config.sandwich) {
      try {
        sw = sandwich_covariance(ctx, fit);
        entry["sandwich"] = to_json(*sw);
      } catch (const Error& e) {
        entry["sandwich"] = Json{{"error", e.what()}};
      }
    }
    if (config.post_fgmm) {
      try {
        if (support.empty()) throw DimensionError("first stage selected no regressors");
        Vector first(static_cast<Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k) first[Index(k)] = fit.beta[support[k]];
        const Matrix basis = sieve_projection_basis(*inst, support);
        if (basis.cols() >= data.n()) throw DimensionError("projection basis wider than the sample");
        const OptimalInstruments opt =
            estimate_optimal_instruments(config.variant, config.family, data, support, basis, first);
        step = post_fgmm(config.family, data, support, opt.d_hat, opt.sigma2_hat, first);
        entry["post_fgmm"] = to_json(*step);
        entry["post_fgmm"]["variant"] = variant_name(config.variant);
        entry["post_fgmm"]["sigma2"] = opt.sigma2;
      } catch (const Error& e) {
        entry["post_fgmm"] = Json{{"error", e.what()}};
      }
    }
    print_fit_summary(out, pen, fit, sw, step);
    fits.push_back(std::move(entry));
  }

  const Json doc{{"family", std::string(to_string(config.family))},
                 {"recipe", config.recipe},
                 {"n", data.n()},
                 {"p", data.p()},
                 {"kernel", to_json(kernel)},
                 {"solver", to_json(config.solver)},
                 {"fits", std::move(fits)}};
  const auto path = std::filesystem::path(config.out_dir) / "fit.json";
  write_text(path, doc.dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  if (!all_converged) {
    err << "warning: solver did not converge within " << config.solver.max_sweeps << " sweeps\n";
    return kNonconvergence;
  }
  return kOk;
}

int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream&) {
  sim::DgpSpec spec = *config.design;
  spec.seed = config.seed;
  sim::ExperimentOptions options{SmoothingKernel(config.kernel_h, config.kernel_cdf), config.solver};
  const auto methods = expand(config.methods);
  const auto reports = sim::run_experiment(spec, methods, config.reps, config.workers, options);

  const std::filesystem::path dir(config.out_dir);
  write_text(dir / "report.json", simulation_report(spec, config.reps, options, reports).dump(2) + "\n");
  write_text(dir / "report.csv", simulation_csv(reports));

  out << sim::to_string(spec.variant) << " design, n=" << spec.n << " p=" << spec.p << ", " << config.reps
      << " replications (mean, sd)\n";
  for (const auto& r : reports) {
    out << "  " << std::left << std::setw(28) << r.label() << std::right << std::fixed << std::setprecision(3)
        << " MSE_S " << r.mse_s.mean << " (" << r.mse_s.sd << ")"
        << " MSE_N " << r.mse_n.mean << " (" << r.mse_n.sd << ")"
        << " TP " << r.tp.mean << " (" << r.tp.sd << ")"
        << " FP " << r.fp.mean << " (" << r.fp.sd << ")";
    out.unsetf(std::ios::fixed);
    out << std::setprecision(6);
    if (r.failures) out << "  failures " << r.failures;
    if (r.nonconverged) out << "  nonconverged " << r.nonconverged;
    out << "\n";
  }
  out << "wrote " << (dir / "report.json").string() << " and " << (dir / "report.csv").string() << "\n";
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Penalized focused GMM: fit sparse models with endogenous regressors, or run Monte Carlo designs."};
  std::string config_path, mode, data, out_dir, penalty, recipe, family;
  std::uint64_t seed = 0;
  int workers = 0, reps = 0;
  std::vector<double> lambdas;
  double kernel_h = 0.0, epsilon = 0.0;

  app.add_option("--config", config_path, "JSON run configuration; flags override its values");
  auto* o_mode = app.add_option("--mode", mode, "fit | simulate")->check(CLI::IsMember({"fit", "simulate"}));
  auto* o_data = app.add_option("--data", data, "CSV with header y,x1..xp[,w1..wq] (fit mode)");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_seed = app.add_option("--seed", seed, "master seed (simulate mode)");
  auto* o_workers = app.add_option("--workers", workers, "worker threads (default $FGMM_WORKERS or 1)");
  auto* o_lambda = app.add_option("--lambda", lambdas, "penalty level; repeatable")->allow_extra_args(false);
  auto* o_penalty =
      app.add_option("--penalty", penalty, "scad | mcp | l1 | hard")->check(CLI::IsMember({"scad", "mcp", "l1", "hard"}));
  auto* o_recipe = app.add_option("--recipe", recipe, "fourier | self (fit mode)")->check(CLI::IsMember({"fourier", "self"}));
  auto* o_family = app.add_option("--family", family, "linear | logit | probit")
                       ->check(CLI::IsMember({"linear", "logit", "probit"}));
  auto* o_reps = app.add_option("--reps", reps, "replications (simulate mode)");
  auto* o_h = app.add_option("--kernel-h", kernel_h, "smoothing bandwidth h");
  auto* o_eps = app.add_option("--epsilon", epsilon, "stopping tolerance on the sweep-to-sweep objective change");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    RunConfig cfg;
    if (const char* env = std::getenv("FGMM_WORKERS"); env && *env) {
      try {
        std::size_t used = 0;
        cfg.workers = std::stoi(env, &used);
        if (used != std::strlen(env)) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw InputError(std::string("FGMM_WORKERS: not an integer: '") + env + "'");
      }
    }
    if (!config_path.empty()) cfg = load_config(config_path, cfg);

    if (o_mode->count()) cfg.mode = parse_mode(mode);
    if (o_data->count()) cfg.data_path = data;
    if (o_out->count()) cfg.out_dir = out_dir;
    if (o_seed->count()) cfg.seed = seed;
    if (o_workers->count()) cfg.workers = workers;
    if (o_reps->count()) cfg.reps = reps;
    if (o_h->count()) cfg.kernel_h = kernel_h;
    if (o_eps->count()) cfg.solver.epsilon = epsilon;
    if (o_family->count()) cfg.family = parse_link_family(family);
    if (o_recipe->count()) cfg.recipe = recipe;
    // In simulate mode --penalty / --lambda replace the grid of every method.
    if (o_penalty->count()) {
      cfg.penalty = parse_penalty_family(penalty);
      for (auto& g : cfg.methods) g.penalty = cfg.penalty;
    }
    if (o_lambda->count()) {
      cfg.lambdas = lambdas;
      for (auto& g : cfg.methods) g.lambdas = lambdas;
    }
    cfg.validate();
    return cfg.mode == RunConfig::Mode::Fit ? cmd_fit(cfg, out, err) : cmd_simulate(cfg, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace fgmm::cli
