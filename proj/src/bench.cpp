#include "nnlr/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nnlr/lowrank.hpp"

namespace nnlr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool is_grid(const OperatorSpec& spec) {
  return std::holds_alternative<BlockGridSpec>(spec) ||
         std::holds_alternative<RandomGridSpec>(spec);
}

TrialMetrics approximant_metrics(std::string method, const OperatorHandle& op, Matrix x,
                                 const EigenReport& ref, double seconds) {
  TrialMetrics m;
  m.method = std::move(method);
  m.time_s = seconds;
  const double nrm = x.norm();
  if (!(nrm > 0.0)) throw ConvergenceError(m.method + ": approximant is zero");
  x /= nrm;
  const Matrix ax = op.apply(x);
  const double lambda = (ax.array() * x.array()).sum();
  m.residual = (ax - lambda * x).norm();
  m.lambda_err = std::abs(lambda - ref.lambda);
  m.neg_count = kernels::count_negative(x);
  m.relerr = best_scaled_error(DenseMatrix(std::move(x)), ref.x);
  m.converged = true;
  return m;
}

TrialMetrics report_metrics(const EigenReport& r, const EigenReport& ref, double extra_seconds) {
  TrialMetrics m;
  m.method = r.method;
  m.time_s = r.wall_seconds + extra_seconds;
  m.relerr = best_scaled_error(r.x, ref.x);
  m.residual = r.residual;
  m.lambda_err = std::abs(r.lambda - ref.lambda);
  m.neg_count = r.negative_entries;
  m.converged = r.converged;
  return m;
}

TrialMetrics failed_metrics(std::string method) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {std::move(method), nan, nan, nan, nan, 0, false};
}

std::string method_label(const MethodConfig& m, const std::string& ref_name) {
  return std::visit(
      [&](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SvdMethod>) {
          return ref_name + "+SVD";
        } else if constexpr (std::is_same_v<T, NmfMethod>) {
          return ref_name + "+NMF";
        } else if constexpr (std::is_same_v<T, PSIConfig>) {
          return "PSI";
        } else {
          return "RNeg";
        }
      },
      m);
}

TrialResult run_trial(const ExperimentConfig& cfg, int trial) {
  TrialResult out;
  out.trial = trial;
  out.seed = cfg.base_seed + static_cast<std::uint64_t>(trial);
  const OperatorHandle op = build_operator(with_seed(cfg.op, out.seed));

  EigenReport ref;
  try {
    if (is_grid(cfg.op)) {
      PowerConfig pc;
      pc.tol = cfg.reference_tol;
      pc.max_iters = cfg.reference_max_iters;
      ref = power_reference(op, pc);
    } else {
      ShiftInvertConfig sc;
      sc.tol = cfg.reference_tol;
      ref = shift_invert_reference(op, sc);
    }
    if (!ref.converged) {
      throw ConvergenceError(ref.method + " reference did not reach residual " +
                             std::to_string(cfg.reference_tol));
    }
  } catch (const ConvergenceError& e) {
    out.failed = true;
    out.error = e.what();
    out.rows.push_back(failed_metrics(is_grid(cfg.op) ? "Power" : "ShiftInvert"));
    return out;
  }
  out.lambda_ref = ref.lambda;
  out.rows.push_back(report_metrics(ref, ref, 0.0));

  for (const MethodConfig& method : cfg.methods) {
    const std::string label = method_label(method, ref.method);
    try {
      std::visit(
          [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            const auto start = Clock::now();
            if constexpr (std::is_same_v<T, SvdMethod>) {
              Matrix x = truncated_svd(ref.x, cfg.rank).reconstruct().values();
              out.rows.push_back(approximant_metrics(label, op, std::move(x), ref,
                                                     ref.wall_seconds + seconds_since(start)));
            } else if constexpr (std::is_same_v<T, NmfMethod>) {
              const NMFResult f = nmf(ref.x, cfg.rank, c.iters, out.seed);
              Matrix x = f.w.values() * f.h.values();
              out.rows.push_back(approximant_metrics(label, op, std::move(x), ref,
                                                     ref.wall_seconds + seconds_since(start)));
            } else {
              T solver = c;
              solver.rank = cfg.rank;
              solver.seed = out.seed;
              solver.record_history = false;
              EigenReport r;
              if constexpr (std::is_same_v<T, PSIConfig>) {
                r = psi_solve(op, solver);
              } else {
                r = rneg_solve(op, solver);
              }
              out.rows.push_back(report_metrics(r, ref, 0.0));
            }
          },
          method);
    } catch (const ConvergenceError&) {
      out.rows.push_back(failed_metrics(label));
    }
  }
  return out;
}

std::string format_number(double x, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

MethodConfig method_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("method") || !j.at("method").is_string()) {
    throw ConfigError("experiment method: expected an object with a string 'method'");
  }
  const auto name = j.at("method").get<std::string>();
  if (name == "svd") {
    if (j.size() != 1) throw ConfigError("experiment method 'svd' takes no parameters");
    return SvdMethod{};
  }
  if (name == "nmf") {
    NmfMethod m;
    for (const auto& item : j.items()) {
      if (item.key() == "method") continue;
      if (item.key() != "iters" || !item.value().is_number_integer()) {
        throw ConfigError("experiment method 'nmf': only an integer 'iters' is accepted");
      }
      m.iters = item.value().get<int>();
    }
    return m;
  }
  if (name == "psi") return psi_config_from_json(j);
  if (name == "rneg") return rneg_config_from_json(j);
  throw ConfigError("experiment method: unknown method '" + name + "'");
}

Json method_to_json(const MethodConfig& m) {
  return std::visit(
      [](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SvdMethod>) {
          return {{"method", "svd"}};
        } else if constexpr (std::is_same_v<T, NmfMethod>) {
          return {{"method", "nmf"}, {"iters", c.iters}};
        } else {
          return solver_config_to_json(c);
        }
      },
      m);
}

Json metrics_to_json(const TrialMetrics& m, bool timing) {
  auto num = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
  return {{"method", m.method},
          {"time_s", timing ? num(m.time_s) : Json(0.0)},
          {"relerr", num(m.relerr)},
          {"residual", num(m.residual)},
          {"lambda_err", num(m.lambda_err)},
          {"neg_count", m.neg_count},
          {"converged", m.converged}};
}

}  // namespace

ExperimentConfig experiment_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment: expected a JSON object");
  ExperimentConfig cfg;
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    const Json& v = item.value();
    try {
      if (key == "name") {
        cfg.name = v.get<std::string>();
      } else if (key == "operator") {
        cfg.op = operator_spec_from_json(v);
      } else if (key == "rank") {
        cfg.rank = v.get<Index>();
      } else if (key == "trials") {
        cfg.trials = v.get<int>();
      } else if (key == "base_seed") {
        cfg.base_seed = v.get<std::uint64_t>();
      } else if (key == "reference") {
        for (const auto& r : v.items()) {
          if (r.key() == "tol") {
            cfg.reference_tol = r.value().get<double>();
          } else if (r.key() == "max_iters") {
            cfg.reference_max_iters = r.value().get<long>();
          } else {
            throw ConfigError("experiment reference: unknown field '" + r.key() + "'");
          }
        }
      } else if (key == "methods") {
        if (!v.is_array()) throw ConfigError("experiment: 'methods' must be an array");
        for (const Json& m : v) cfg.methods.push_back(method_from_json(m));
      } else {
        throw ConfigError("experiment: unknown field '" + key + "'");
      }
    } catch (const Json::exception&) {
      throw ConfigError("experiment: field '" + key + "' has the wrong type");
    }
  }
  if (!j.contains("operator")) throw ConfigError("experiment: missing field 'operator'");
  if (cfg.trials < 1) throw ConfigError("experiment: trials must be at least 1");
  if (cfg.rank < 1) throw ConfigError("experiment: rank must be at least 1");
  if (!(cfg.reference_tol > 0.0)) throw ConfigError("experiment: reference tol must be positive");
  return cfg;
}

Json experiment_to_json(const ExperimentConfig& cfg) {
  Json methods = Json::array();
  for (const MethodConfig& m : cfg.methods) methods.push_back(method_to_json(m));
  return {{"name", cfg.name},
          {"operator", operator_spec_to_json(cfg.op)},
          {"rank", cfg.rank},
          {"trials", cfg.trials},
          {"base_seed", cfg.base_seed},
          {"reference", {{"tol", cfg.reference_tol}, {"max_iters", cfg.reference_max_iters}}},
          {"methods", std::move(methods)}};
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("experiment: trials must be at least 1");
  ExperimentResult result;
  result.name = cfg.name;
  result.rng_algorithm = std::string(Rng::kAlgorithm);
  for (int i = 0; i < cfg.trials; ++i) result.trials.push_back(run_trial(cfg, i));
  result.table = aggregate(result.trials);
  return result;
}

std::vector<MetricsRow> aggregate(const std::vector<TrialResult>& trials) {
  std::vector<std::string> order;
  std::vector<std::vector<const TrialMetrics*>> groups;
  for (const TrialResult& t : trials) {
    if (t.failed) continue;
    for (const TrialMetrics& m : t.rows) {
      std::size_t k = 0;
      while (k < order.size() && order[k] != m.method) ++k;
      if (k == order.size()) {
        order.push_back(m.method);
        groups.emplace_back();
      }
      groups[k].push_back(&m);
    }
  }

  std::vector<MetricsRow> rows;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& g = groups[k];
    const double count = static_cast<double>(g.size());
    auto stats = [&](auto field) {
      double mean = 0.0;
      for (const TrialMetrics* m : g) mean += field(*m);
      mean /= count;
      double ss = 0.0;
      for (const TrialMetrics* m : g) ss += (field(*m) - mean) * (field(*m) - mean);
      const double sd = g.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
      return std::pair{mean, sd};
    };
    const auto t = stats([](const TrialMetrics& m) { return m.time_s; });
    const auto e = stats([](const TrialMetrics& m) { return m.relerr; });
    const auto r = stats([](const TrialMetrics& m) { return m.residual; });
    const auto l = stats([](const TrialMetrics& m) { return m.lambda_err; });
    const auto n = stats([](const TrialMetrics& m) { return static_cast<double>(m.neg_count); });
    const auto c = stats([](const TrialMetrics& m) { return m.converged ? 1.0 : 0.0; });
    rows.push_back({order[k] + ":mean", t.first, e.first, r.first, l.first, n.first, c.first});
    rows.push_back({order[k] + ":std", t.second, e.second, r.second, l.second, n.second, c.second});
  }
  return rows;
}

void emit_table(const std::vector<MetricsRow>& rows, TableFormat format, std::ostream& out,
                bool timing) {
  auto values = [&](const MetricsRow& r) {
    return std::vector<double>{timing ? r.time_s : 0.0, r.relerr,   r.residual,
                               r.lambda_err,            r.neg_count, r.converged};
  };
  if (format == TableFormat::kCsv) {
    out << kCsvHeader << '\n';
    for (const MetricsRow& r : rows) {
      out << r.method;
      for (double v : values(r)) out << ',' << format_number(v, "%.17g");
      out << '\n';
    }
    return;
  }

  const std::vector<std::string> header = {"method",     "time_s",    "relerr",   "residual",
                                           "lambda_err", "neg_count", "converged"};
  std::vector<std::vector<std::string>> cells{header};
  for (const MetricsRow& r : rows) {
    std::vector<std::string> line{r.method};
    for (double v : values(r)) line.push_back(format_number(v, "%.2e"));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  }
  for (const auto& line : cells) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k > 0) out << "  ";
      out << std::string(width[k] - line[k].size(), ' ') << line[k];
    }
    out << '\n';
  }
}

std::string format_table(const std::vector<MetricsRow>& rows, TableFormat format, bool timing) {
  std::ostringstream out;
  emit_table(rows, format, out, timing);
  return out.str();
}

std::vector<MetricsRow> parse_csv_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("csv table: missing or unexpected header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ConfigError("csv table: expected 7 columns in '" + line + "'");
    std::vector<double> v;
    for (std::size_t k = 1; k < cells.size(); ++k) {
      char* end = nullptr;
      const double x = std::strtod(cells[k].c_str(), &end);
      if (end == cells[k].c_str() || *end != '\0') {
        throw ConfigError("csv table: bad number '" + cells[k] + "'");
      }
      v.push_back(x);
    }
    rows.push_back({cells[0], v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  return rows;
}

Json experiment_result_to_json(const ExperimentResult& result, bool timing) {
  Json trials = Json::array();
  for (const TrialResult& t : result.trials) {
    Json rows = Json::array();
    for (const TrialMetrics& m : t.rows) rows.push_back(metrics_to_json(m, timing));
    Json entry = {{"trial", t.trial},
                  {"seed", t.seed},
                  {"lambda_ref", t.lambda_ref},
                  {"failed", t.failed},
                  {"rows", std::move(rows)}};
    if (t.failed) entry["error"] = t.error;
    trials.push_back(std::move(entry));
  }
  Json table = Json::array();
  for (const MetricsRow& r : result.table) {
    auto num = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
    table.push_back({{"method", r.method},
                     {"time_s", timing ? num(r.time_s) : Json(0.0)},
                     {"relerr", num(r.relerr)},
                     {"residual", num(r.residual)},
                     {"lambda_err", num(r.lambda_err)},
                     {"neg_count", num(r.neg_count)},
                     {"converged", num(r.converged)}});
  }
  return {{"name", result.name},
          {"rng", result.rng_algorithm},
          {"trials", std::move(trials)},
          {"table", std::move(table)}};
}

std::size_t negcount(const DenseMatrix& x) { return kernels::count_negative(x.values()); }

}  // namespace nnlr
