#include "fgmm/report.hpp"

#include "fgmm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fgmm {

namespace {

Json indices_1based(const std::vector<Index>& idx) {
  Json out = Json::array();
  for (const Index j : idx) out.push_back(j + 1);
  return out;
}

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

Json standard_errors(const Matrix& cov) {
  Json out = Json::array();
  for (Index i = 0; i < cov.rows(); ++i) out.push_back(std::sqrt(std::max(cov(i, i), 0.0)));
  return out;
}

Json summary_json(const sim::Summary& s) { return Json{{"mean", s.mean}, {"sd", s.sd}}; }

Json penalty_json(const PenaltySpec& pen) {
  Json out{{"family", std::string(to_string(pen.family()))}, {"lambda", pen.lambda()}};
  if (pen.family() == PenaltyFamily::SCAD || pen.family() == PenaltyFamily::MCP) out["shape"] = pen.shape();
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                          : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

[[noreturn]] void bad_cell(std::size_t line, std::size_t col, const std::string& name, const std::string& what) {
  throw InputError("line " + std::to_string(line) + ", column " + std::to_string(col) + " (" + name + "): " + what);
}

// Expects `prefix1, prefix2, ...` starting at cells[first]; returns how many.
std::size_t count_block(const std::vector<std::string>& cells, std::size_t first, char prefix) {
  std::size_t k = 0;
  while (first + k < cells.size() && cells[first + k] == std::string(1, prefix) + std::to_string(k + 1)) ++k;
  return k;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json to_json(const FitResult& fit) {
  Json d{{"accepted_updates", fit.diagnostics.accepted_updates},
         {"rejected_updates", fit.diagnostics.rejected_updates},
         {"backtracked_updates", fit.diagnostics.backtracked_updates},
         {"clamped_to_zero", fit.diagnostics.clamped_to_zero},
         {"curvature_fallbacks", fit.diagnostics.curvature_fallbacks},
         {"monotonicity_violations", fit.diagnostics.monotonicity_violations},
         {"warm_start_sweeps", fit.diagnostics.warm_start_sweeps}};
  return Json{{"beta", vector_json(fit.beta.values())},
              {"support", indices_1based(fit.beta.support())},
              {"sweeps_used", fit.sweeps_used},
              {"converged", fit.converged},
              {"final_exact_objective", fit.final_exact_objective},
              {"objective_trace", fit.objective_trace},
              {"diagnostics", d}};
}

Json to_json(const SandwichEstimate& est) {
  return Json{{"support", indices_1based(est.support)},
              {"standard_errors", standard_errors(est.cov_beta)},
              {"cov_beta", matrix_json(est.cov_beta)},
              {"a_hat", matrix_json(est.a_hat)},
              {"upsilon_hat", matrix_json(est.upsilon_hat)},
              {"gamma_hat", matrix_json(est.gamma_hat)},
              {"sigma_hat", matrix_json(est.sigma_hat)}};
}

Json to_json(const EfficientStepResult& step) {
  return Json{{"support", indices_1based(step.support)},
              {"beta_star", vector_json(step.beta_star)},
              {"standard_errors", standard_errors(step.cov_star)},
              {"cov_star", matrix_json(step.cov_star)},
              {"residual_norm", step.residual_norm},
              {"iterations", step.iterations},
              {"converged", step.converged}};
}

Json to_json(const SolverConfig& config) {
  Json out{{"epsilon", config.epsilon},
           {"max_sweeps", config.max_sweeps},
           {"pls_lambda", config.pls_lambda},
           {"zero_clamp", config.zero_clamp},
           {"backtrack_steps", config.backtrack_steps}};
  if (!config.sweep_order.empty()) out["sweep_order"] = indices_1based(config.sweep_order);
  return out;
}

Json to_json(const SmoothingKernel& kernel) {
  return Json{{"h", kernel.h()}, {"cdf", std::string(to_string(kernel.cdf()))}};
}

Json simulation_report(const sim::DgpSpec& spec, int reps, const sim::ExperimentOptions& options,
                       const std::vector<sim::ReplicationReport>& reports) {
  sim::DgpSpec probe = spec;
  probe.n = 2;  // the endogenous set depends only on (variant, p, m)
  Json design{{"variant", sim::to_string(spec.variant)}, {"n", spec.n}, {"p", spec.p}};
  if (spec.variant != sim::DgpSpec::Variant::UnimportantEndogeneity) design["m"] = spec.m;
  design["seed"] = spec.seed;
  design["endogenous"] = indices_1based(sim::generate(probe).endogenous);

  Json rows = Json::array();
  for (const auto& r : reports) {
    Json per = Json::array();
    for (const auto& rec : r.per_rep) {
      Json e{{"ok", rec.ok}};
      if (rec.ok) {
        e["mse_s"] = rec.metrics.mse_s;
        e["mse_n"] = rec.metrics.mse_n;
        e["tp"] = rec.metrics.tp;
        e["fp"] = rec.metrics.fp;
        e["iterations"] = rec.sweeps;
        e["converged"] = rec.converged;
        e["trace_nonincreasing"] = rec.trace_nonincreasing;
      } else {
        e["error"] = rec.error;
      }
      per.push_back(std::move(e));
    }
    rows.push_back(Json{{"method", sim::to_string(r.method.kind)},
                        {"penalty", penalty_json(r.method.penalty)},
                        {"mse_s", summary_json(r.mse_s)},
                        {"mse_n", summary_json(r.mse_n)},
                        {"tp", summary_json(r.tp)},
                        {"fp", summary_json(r.fp)},
                        {"failures", r.failures},
                        {"nonconverged", r.nonconverged},
                        {"trace_violations", r.trace_violations},
                        {"replications", std::move(per)}});
  }
  return Json{{"design", std::move(design)},
              {"reps", reps},
              {"dispersion", "sd = sample standard deviation across successful replications (n-1 denominator)"},
              {"kernel", to_json(options.kernel)},
              {"solver", to_json(options.solver)},
              {"rows", std::move(rows)}};
}

std::string simulation_csv(const std::vector<sim::ReplicationReport>& reports) {
  std::ostringstream os;
  os << "method,penalty,lambda,mse_s_mean,mse_s_sd,mse_n_mean,mse_n_sd,tp_mean,tp_sd,fp_mean,fp_sd,"
        "failures,nonconverged,trace_violations\n";
  for (const auto& r : reports) {
    os << sim::to_string(r.method.kind) << ',' << to_string(r.method.penalty.family()) << ','
       << format_double(r.method.penalty.lambda());
    for (const sim::Summary* s : {&r.mse_s, &r.mse_n, &r.tp, &r.fp}) {
      os << ',' << format_double(s->mean) << ',' << format_double(s->sd);
    }
    os << ',' << r.failures << ',' << r.nonconverged << ',' << r.trace_violations << '\n';
  }
  return os.str();
}

Dataset parse_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_row(line);
      break;
    }
  }
  if (header.empty()) throw InputError("empty CSV: expected a header row y,x1,...,xp[,w1,...,wq]");
  if (header[0] != "y") bad_cell(lineno, 1, header[0], "first header cell must be 'y'");
  const std::size_t p = count_block(header, 1, 'x');
  if (p == 0) bad_cell(lineno, 2, header.size() > 1 ? header[1] : "", "expected x1");
  const std::size_t q = count_block(header, 1 + p, 'w');
  if (1 + p + q != header.size()) {
    const std::size_t col = 1 + p + q;
    bad_cell(lineno, col + 1, header[col], "unexpected header cell; expected x" + std::to_string(p + 1) +
                                               (q ? ", w" + std::to_string(q + 1) : ", w1") + " or end of row");
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty()) bad_cell(lineno, c + 1, header[c], "empty cell");
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[c]);
      if (ec != std::errc() || ptr != last) bad_cell(lineno, c + 1, header[c], "not a number: '" + cell + "'");
      if (!std::isfinite(row[c])) bad_cell(lineno, c + 1, header[c], "non-finite value");
    }
    rows.push_back(std::move(row));
  }
  const Index n = static_cast<Index>(rows.size());
  if (n < 2) throw InputError("CSV needs at least two data rows, found " + std::to_string(n));

  Vector y(n);
  Matrix x(n, static_cast<Index>(p));
  Matrix w(n, static_cast<Index>(q));
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    y[i] = r[0];
    for (std::size_t j = 0; j < p; ++j) x(i, static_cast<Index>(j)) = r[1 + j];
    for (std::size_t j = 0; j < q; ++j) w(i, static_cast<Index>(j)) = r[1 + p + j];
  }
  return q == 0 ? Dataset(std::move(y), std::move(x)) : Dataset(std::move(y), std::move(x), std::move(w));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open data file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset_csv(ss.str());
}

std::string dataset_csv(const Dataset& data, bool with_instruments) {
  std::ostringstream os;
  os << 'y';
  for (Index j = 0; j < data.p(); ++j) os << ",x" << j + 1;
  if (with_instruments) {
    for (Index j = 0; j < data.q(); ++j) os << ",w" << j + 1;
  }
  os << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    os << format_double(data.y()[i]);
    for (Index j = 0; j < data.p(); ++j) os << ',' << format_double(data.x()(i, j));
    if (with_instruments) {
      for (Index j = 0; j < data.q(); ++j) os << ',' << format_double(data.w()(i, j));
    }
    os << '\n';
  }
  return os.str();
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, bool with_instruments) {
  write_text(path, dataset_csv(data, with_instruments));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

}  // namespace fgmm
