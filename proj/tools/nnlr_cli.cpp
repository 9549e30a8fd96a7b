// nnlr: generate operators, solve for nonnegative low-rank rightmost
// eigenpairs, run benchmark experiments and validate operator files.
//
// Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 I/O error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "nnlr/bench.hpp"
#include "nnlr/io.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kSolver = 2, kIo = 3 };

struct Options {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";
  bool verbose = false;
  bool no_timing = false;
};

void emit(const Options& opt, const std::string& text) {
  if (opt.out.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw nnlr::IoError("failed writing to standard output");
  } else {
    nnlr::write_text_file(opt.out, text);
  }
}

bool is_generator_spec(const nnlr::Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) return false;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "block_grid" || kind == "random_grid") return true;
  return (kind == "hadamard_growth" || kind == "separable_growth") && !j.contains("laplacian");
}

// Accepts a serialized operator or a generator spec.
nnlr::OperatorHandle load_operator(const std::string& path, const Options& opt) {
  const nnlr::Json j = nnlr::read_json_file(path);
  if (is_generator_spec(j)) {
    nnlr::OperatorSpec spec = nnlr::operator_spec_from_json(j);
    if (opt.seed) spec = nnlr::with_seed(std::move(spec), *opt.seed);
    return nnlr::build_operator(spec);
  }
  return nnlr::operator_from_json(j);
}

int cmd_generate(const std::string& spec_path, const Options& opt) {
  nnlr::OperatorSpec spec = nnlr::operator_spec_from_json(nnlr::read_json_file(spec_path));
  if (opt.seed) spec = nnlr::with_seed(std::move(spec), *opt.seed);
  emit(opt, nnlr::operator_to_json(nnlr::build_operator(spec)).dump() + "\n");
  return kOk;
}

int cmd_solve(const std::string& op_path, const std::string& cfg_path, const Options& opt) {
  const nnlr::OperatorHandle op = load_operator(op_path, opt);
  nnlr::SolverConfig cfg = nnlr::solver_config_from_json(nnlr::read_json_file(cfg_path));
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, nnlr::PSIConfig> || std::is_same_v<T, nnlr::RNegConfig>) {
          if (opt.seed) c.seed = *opt.seed;
        }
        c.record_history = c.record_history || opt.verbose;
      },
      cfg);
  nnlr::EigenReport report = nnlr::run_solver(op, cfg);
  if (opt.no_timing) report.wall_seconds = 0.0;
  emit(opt, nnlr::report_to_json(report, opt.verbose).dump(2) + "\n");
  return kOk;
}

int cmd_bench(const std::string& cfg_path, const Options& opt) {
  nnlr::ExperimentConfig cfg = nnlr::experiment_from_json(nnlr::read_json_file(cfg_path));
  if (opt.seed) cfg.base_seed = *opt.seed;
  const nnlr::ExperimentResult result = nnlr::run_experiment(cfg);
  const bool timing = !opt.no_timing;
  if (opt.verbose) {
    for (const nnlr::TrialResult& t : result.trials) {
      std::cerr << "trial " << t.trial << " seed " << t.seed
                << (t.failed ? " FAILED: " + t.error : "") << '\n';
    }
  }
  if (opt.format == "json") {
    emit(opt, nnlr::experiment_result_to_json(result, timing).dump(2) + "\n");
  } else {
    const auto format = opt.format == "csv" ? nnlr::TableFormat::kCsv : nnlr::TableFormat::kText;
    emit(opt, nnlr::format_table(result.table, format, timing));
  }
  for (const nnlr::TrialResult& t : result.trials) {
    if (t.failed) return kSolver;
  }
  return kOk;
}

int cmd_validate(const std::string& op_path, const Options& opt) {
  const nnlr::OperatorHandle op = load_operator(op_path, opt);
  nnlr::Json report = {{"kind", nnlr::to_string(op.kind())},
                       {"rows", op.rows()},
                       {"cols", op.cols()},
                       {"nonnegativity_preserving", op.nonnegativity_preserving()},
                       {"metzler", op.metzler()},
                       {"nonnegative_shift", op.nonnegative_shift()}};
  bool ok = true;
  if (const auto* grid = std::get_if<nnlr::MarkovGridOperator>(&op.get())) {
    const nnlr::GridValidation v = nnlr::validate_grid(*grid);
    report["grid"] = nnlr::validation_to_json(v);
    ok = v.ok;
  }
  report["ok"] = ok;
  emit(opt, report.dump(2) + "\n");
  return ok ? kOk : kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonnegative low-rank rightmost eigenpairs of matrix-valued operators"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the seed (grid generator, solver or base seed)");
    sub->add_option("--out", opt.out, "Write output to this file instead of stdout");
    sub->add_flag("--verbose", opt.verbose, "Include iteration history / per-trial detail");
    sub->add_flag("--no-timing", opt.no_timing, "Write zero wall times for reproducible output");
  };

  std::string spec_path;
  auto* gen = app.add_subcommand("generate", "Operator spec JSON -> operator JSON");
  gen->add_option("spec", spec_path, "Operator spec file")->required();
  add_common(gen);

  std::string op_path;
  std::string solver_path;
  auto* solve = app.add_subcommand("solve", "Operator + solver config -> eigen report JSON");
  solve->add_option("operator", op_path, "Operator or operator spec file")->required();
  solve->add_option("solver", solver_path, "Solver config file")->required();
  add_common(solve);

  std::string exp_path;
  auto* bench = app.add_subcommand("bench", "Experiment config -> metrics table");
  bench->add_option("experiment", exp_path, "Experiment config file")->required();
  bench->add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"csv", "text", "json"}));
  add_common(bench);

  std::string val_path;
  auto* validate = app.add_subcommand("validate", "Operator JSON -> validation report");
  validate->add_option("operator", val_path, "Operator or operator spec file")->required();
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  for (CLI::App* sub : {gen, solve, bench, validate}) {
    if (sub->count("--seed") > 0) opt.seed = seed;
  }

  try {
    if (*gen) return cmd_generate(spec_path, opt);
    if (*solve) return cmd_solve(op_path, solver_path, opt);
    if (*bench) return cmd_bench(exp_path, opt);
    return cmd_validate(val_path, opt);
  } catch (const nnlr::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const nnlr::ConvergenceError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  }
}
