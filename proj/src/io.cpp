#include "nnlr/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace nnlr {

namespace {

// Typed field access that rejects unknown keys, so misspelled parameters
// fail loudly instead of silently keeping their defaults.
class Fields {
public:
  Fields(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j.is_object()) throw ConfigError(what_ + ": expected a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(what_ + ": missing field '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const Json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(what_ + ": field '" + key + "' has the wrong type");
    }
  }

  template <class T>
  void optional(const std::string& key, T& out) {
    seen_.insert(key);
    if (has(key)) out = get<T>(key);
  }

  template <class T>
  void optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (has(key)) out = get<T>(key);
  }

  void ignore(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.contains(item.key())) {
        throw ConfigError(what_ + ": unknown field '" + item.key() + "'");
      }
    }
  }

private:
  const Json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a nonempty number array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": entries must be numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

Index count_from_json(Fields& f, const std::string& key) {
  const auto v = f.get<long long>(key);
  if (v < 1) throw ConfigError("field '" + key + "' must be a positive count");
  return static_cast<Index>(v);
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw ConfigError(what + ": expected a nonempty array of row arrays");
  }
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ConfigError(what + ": ragged rows");
    }
    for (Index k = 0; k < cols; ++k) {
      const Json& e = row[static_cast<std::size_t>(k)];
      if (!e.is_number()) throw ConfigError(what + ": entries must be numbers");
      m(i, k) = e.get<double>();
    }
  }
  return m;
}

Json operator_to_json(const OperatorHandle& op) {
  return std::visit(
      [](const auto& o) -> Json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, MarkovGridOperator>) {
          Json terms = Json::array();
          for (const MarkovTerm& t : o.terms()) {
            terms.push_back({{"alpha", t.alpha},
                             {"a", matrix_to_json(t.a.values())},
                             {"b", matrix_to_json(t.b.values())}});
          }
          return {{"kind", to_string(OperatorKind::kMarkovGrid)},
                  {"rows", o.rows()},
                  {"cols", o.cols()},
                  {"terms", std::move(terms)}};
        } else if constexpr (std::is_same_v<T, HadamardGrowthOperator>) {
          return {{"kind", to_string(OperatorKind::kHadamardGrowth)},
                  {"n", o.size()},
                  {"eps", o.eps()},
                  {"eps_r", o.eps_r()},
                  {"laplacian", matrix_to_json(o.laplacian().values())},
                  {"growth", matrix_to_json(o.growth().values())}};
        } else {
          return {{"kind", to_string(OperatorKind::kSeparableGrowth)},
                  {"n", o.size()},
                  {"eps", o.eps()},
                  {"r0", o.r0()},
                  {"eps_r", o.eps_r()},
                  {"laplacian", matrix_to_json(o.laplacian().values())},
                  {"phi", vector_to_json(o.phi())},
                  {"psi", vector_to_json(o.psi())}};
        }
      },
      op.get());
}

OperatorHandle operator_from_json(const Json& j) {
  Fields f(j, "operator");
  const auto kind = f.get<std::string>("kind");
  if (kind == to_string(OperatorKind::kMarkovGrid)) {
    const Index rows = count_from_json(f, "rows");
    const Index cols = count_from_json(f, "cols");
    const Json& terms = f.raw("terms");
    f.finish();
    if (!terms.is_array() || terms.empty()) throw ConfigError("operator: 'terms' must be a nonempty array");
    std::vector<MarkovTerm> out;
    for (const Json& t : terms) {
      Fields tf(t, "operator term");
      const auto alpha = tf.get<double>("alpha");
      DenseMatrix a(matrix_from_json(tf.raw("a"), "term matrix a"));
      DenseMatrix b(matrix_from_json(tf.raw("b"), "term matrix b"));
      tf.finish();
      out.push_back({alpha, std::move(a), std::move(b)});
    }
    MarkovGridOperator op(std::move(out));
    if (op.rows() != rows || op.cols() != cols) {
      throw ConfigError("operator: declared dimensions do not match the term matrices");
    }
    return op;
  }
  if (kind == to_string(OperatorKind::kHadamardGrowth)) {
    const Index n = count_from_json(f, "n");
    const auto eps = f.get<double>("eps");
    const auto eps_r = f.get<double>("eps_r");
    DenseMatrix lap(matrix_from_json(f.raw("laplacian"), "laplacian"));
    DenseMatrix growth(matrix_from_json(f.raw("growth"), "growth"));
    f.finish();
    HadamardGrowthOperator op(std::move(lap), eps, eps_r, std::move(growth));
    if (op.size() != n) throw ConfigError("operator: declared n does not match the laplacian");
    return op;
  }
  if (kind == to_string(OperatorKind::kSeparableGrowth)) {
    const Index n = count_from_json(f, "n");
    const auto eps = f.get<double>("eps");
    const auto r0 = f.get<double>("r0");
    const auto eps_r = f.get<double>("eps_r");
    DenseMatrix lap(matrix_from_json(f.raw("laplacian"), "laplacian"));
    Vector phi = vector_from_json(f.raw("phi"), "phi");
    Vector psi = vector_from_json(f.raw("psi"), "psi");
    f.finish();
    SeparableGrowthOperator op(std::move(lap), eps, r0, eps_r, std::move(phi), std::move(psi));
    if (op.size() != n) throw ConfigError("operator: declared n does not match the laplacian");
    return op;
  }
  throw ConfigError("operator: unknown kind '" + kind + "'");
}

OperatorSpec operator_spec_from_json(const Json& j) {
  Fields f(j, "operator spec");
  const auto kind = f.get<std::string>("kind");
  if (kind == "block_grid") {
    BlockGridSpec s;
    for (const Json& b : f.raw("block_sizes")) {
      if (!b.is_number_integer() || b.get<long long>() < 1) {
        throw ConfigError("operator spec: block sizes must be positive integers");
      }
      s.block_sizes.push_back(b.get<Index>());
    }
    s.delta = f.get<double>("delta");
    f.optional("seed", s.seed);
    f.finish();
    return s;
  }
  if (kind == "random_grid") {
    RandomGridSpec s;
    s.n = count_from_json(f, "n");
    s.t = count_from_json(f, "t");
    s.density = f.get<double>("density");
    f.optional("seed", s.seed);
    f.finish();
    return s;
  }
  if (kind == "hadamard_growth") {
    HadamardGrowthSpec s;
    s.n = count_from_json(f, "n");
    s.eps = f.get<double>("eps");
    s.eps_r = f.get<double>("eps_r");
    s.r0 = f.get<double>("r0");
    f.finish();
    return s;
  }
  if (kind == "separable_growth") {
    SeparableGrowthSpec s;
    s.n = count_from_json(f, "n");
    s.eps = f.get<double>("eps");
    s.r0 = f.get<double>("r0");
    s.eps_r = f.get<double>("eps_r");
    f.finish();
    return s;
  }
  throw ConfigError("operator spec: unknown kind '" + kind + "'");
}

Json operator_spec_to_json(const OperatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BlockGridSpec>) {
          return {{"kind", "block_grid"},
                  {"block_sizes", s.block_sizes},
                  {"delta", s.delta},
                  {"seed", s.seed}};
        } else if constexpr (std::is_same_v<T, RandomGridSpec>) {
          return {{"kind", "random_grid"},
                  {"n", s.n},
                  {"t", s.t},
                  {"density", s.density},
                  {"seed", s.seed}};
        } else if constexpr (std::is_same_v<T, HadamardGrowthSpec>) {
          return {{"kind", "hadamard_growth"}, {"n", s.n}, {"eps", s.eps}, {"eps_r", s.eps_r},
                  {"r0", s.r0}};
        } else {
          return {{"kind", "separable_growth"}, {"n", s.n}, {"eps", s.eps}, {"r0", s.r0},
                  {"eps_r", s.eps_r}};
        }
      },
      spec);
}

OperatorSpec with_seed(OperatorSpec spec, std::uint64_t seed) {
  if (auto* b = std::get_if<BlockGridSpec>(&spec)) b->seed = seed;
  if (auto* r = std::get_if<RandomGridSpec>(&spec)) r->seed = seed;
  return spec;
}

OperatorHandle build_operator(const OperatorSpec& spec) {
  return std::visit(
      [](const auto& s) -> OperatorHandle {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BlockGridSpec>) {
          return generate_block_grid(s);
        } else if constexpr (std::is_same_v<T, RandomGridSpec>) {
          return generate_random_grid(s);
        } else if constexpr (std::is_same_v<T, HadamardGrowthSpec>) {
          return make_hadamard_growth(s.n, s.eps, s.eps_r, s.r0);
        } else {
          return make_separable_growth(s.n, s.eps, s.r0, s.eps_r);
        }
      },
      spec);
}

PowerConfig power_config_from_json(const Json& j) {
  Fields f(j, "power config");
  PowerConfig c;
  f.ignore("method");
  f.optional("tol", c.tol);
  f.optional("max_iters", c.max_iters);
  f.optional("shift", c.shift);
  f.optional("damping", c.damping);
  f.optional("record_history", c.record_history);
  f.finish();
  return c;
}

ShiftInvertConfig shift_invert_config_from_json(const Json& j) {
  Fields f(j, "shift_invert config");
  ShiftInvertConfig c;
  f.ignore("method");
  f.optional("tol", c.tol);
  f.optional("max_iters", c.max_iters);
  f.optional("record_history", c.record_history);
  f.finish();
  return c;
}

PSIConfig psi_config_from_json(const Json& j) {
  Fields f(j, "psi config");
  PSIConfig c;
  f.ignore("method");
  f.optional("rank", c.rank);
  f.optional("h", c.h);
  f.optional("tol", c.tol);
  f.optional("max_steps", c.max_steps);
  f.optional("seed", c.seed);
  f.optional("record_history", c.record_history);
  f.finish();
  return c;
}

RNegConfig rneg_config_from_json(const Json& j) {
  Fields f(j, "rneg config");
  RNegConfig c;
  f.ignore("method");
  f.optional("rank", c.rank);
  f.optional("h0", c.h0);
  f.optional("h_cap", c.h_cap);
  f.optional("tol", c.tol);
  f.optional("max_iters", c.max_iters);
  f.optional("beta_rej", c.beta_rej);
  f.optional("beta_acc", c.beta_acc);
  f.optional("seed", c.seed);
  std::string rule = "both_norms";
  f.optional("backtrack", rule);
  if (rule == "both_norms") {
    c.backtrack = BacktrackRule::kBothNorms;
  } else if (rule == "combined_norm") {
    c.backtrack = BacktrackRule::kCombinedNorm;
  } else {
    throw ConfigError("rneg config: backtrack must be 'both_norms' or 'combined_norm'");
  }
  f.optional("h_force", c.h_force);
  f.optional("h_min", c.h_min);
  f.optional("record_history", c.record_history);
  f.finish();
  return c;
}

SolverConfig solver_config_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("method") || !j.at("method").is_string()) {
    throw ConfigError("solver config: expected an object with a string 'method'");
  }
  const auto method = j.at("method").get<std::string>();
  if (method == "power") return power_config_from_json(j);
  if (method == "shift_invert") return shift_invert_config_from_json(j);
  if (method == "psi") return psi_config_from_json(j);
  if (method == "rneg") return rneg_config_from_json(j);
  throw ConfigError("solver config: unknown method '" + method + "'");
}

Json solver_config_to_json(const SolverConfig& cfg) {
  return std::visit(
      [](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PowerConfig>) {
          Json out = {{"method", "power"},
                      {"tol", c.tol},
                      {"max_iters", c.max_iters},
                      {"damping", c.damping},
                      {"record_history", c.record_history}};
          if (c.shift) out["shift"] = *c.shift;
          return out;
        } else if constexpr (std::is_same_v<T, ShiftInvertConfig>) {
          return {{"method", "shift_invert"},
                  {"tol", c.tol},
                  {"max_iters", c.max_iters},
                  {"record_history", c.record_history}};
        } else if constexpr (std::is_same_v<T, PSIConfig>) {
          return {{"method", "psi"},     {"rank", c.rank}, {"h", c.h},
                  {"tol", c.tol},        {"max_steps", c.max_steps},
                  {"seed", c.seed},      {"record_history", c.record_history}};
        } else {
          Json out = {{"method", "rneg"},
                      {"rank", c.rank},
                      {"h0", c.h0},
                      {"tol", c.tol},
                      {"max_iters", c.max_iters},
                      {"beta_rej", c.beta_rej},
                      {"beta_acc", c.beta_acc},
                      {"seed", c.seed},
                      {"backtrack", c.backtrack == BacktrackRule::kBothNorms ? "both_norms"
                                                                             : "combined_norm"},
                      {"h_min", c.h_min},
                      {"record_history", c.record_history}};
          if (c.h_cap) out["h_cap"] = *c.h_cap;
          if (c.h_force) out["h_force"] = *c.h_force;
          return out;
        }
      },
      cfg);
}

EigenReport run_solver(const OperatorHandle& op, const SolverConfig& cfg) {
  return std::visit(
      [&](const auto& c) -> EigenReport {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PowerConfig>) {
          return power_reference(op, c);
        } else if constexpr (std::is_same_v<T, ShiftInvertConfig>) {
          return shift_invert_reference(op, c);
        } else if constexpr (std::is_same_v<T, PSIConfig>) {
          return psi_solve(op, c);
        } else {
          return rneg_solve(op, c);
        }
      },
      cfg);
}

Json report_to_json(const EigenReport& report, bool verbose) {
  Json out = {{"method", report.method},
              {"lambda", report.lambda},
              {"residual", report.residual},
              {"iterations", report.iterations},
              {"rejected_steps", report.rejected_steps},
              {"wall_seconds", report.wall_seconds},
              {"negative_entries", report.negative_entries},
              {"converged", report.converged},
              {"rng", Rng::kAlgorithm},
              {"x", matrix_to_json(report.x.values())}};
  if (report.method == "RNeg") {
    out["d_u"] = number_or_null(report.d_u);
    out["d_v"] = number_or_null(report.d_v);
  }
  if (report.factors) {
    out["factors"] = {{"u", matrix_to_json(report.factors->u().values())},
                      {"v", matrix_to_json(report.factors->v().values())}};
  }
  if (verbose) {
    Json hist = Json::array();
    for (const IterationRecord& r : report.history) {
      hist.push_back({{"lambda", number_or_null(r.lambda)},
                      {"residual", number_or_null(r.residual)},
                      {"step", r.step},
                      {"accepted", r.accepted}});
    }
    out["history"] = std::move(hist);
  }
  return out;
}

Json validation_to_json(const GridValidation& v) {
  return {{"ok", v.ok},
          {"max_row_sum_deviation", v.max_row_sum_deviation},
          {"weight_sum_deviation", v.weight_sum_deviation},
          {"negative_entries", v.negative_entries},
          {"failures", v.failures}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace nnlr
