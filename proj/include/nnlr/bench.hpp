#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "nnlr/io.hpp"

namespace nnlr {

/// Truncated SVD of the reference eigenmatrix.
struct SvdMethod {};
/// NMF of the reference eigenmatrix.
struct NmfMethod {
  int iters = 500;
};

using MethodConfig = std::variant<SvdMethod, NmfMethod, PSIConfig, RNegConfig>;

struct ExperimentConfig {
  std::string name;
  /// Grid specs get seed base_seed + trial; growth specs are the same in
  /// every trial and only the solver seeds change.
  OperatorSpec op;
  Index rank = 1;
  int trials = 1;
  std::uint64_t base_seed = 0;
  /// Residual tolerance of the reference solve.
  double reference_tol = 1e-8;
  long reference_max_iters = 1'000'000;
  /// Rank, seed and history settings inside each method are overridden by
  /// the experiment.
  std::vector<MethodConfig> methods;
};

/// {"name", "operator": spec, "rank", "trials", "base_seed",
///  "reference": {"tol", "max_iters"}, "methods": [{"method": "svd" | "nmf" |
///  "psi" | "rneg", ...}]}
ExperimentConfig experiment_from_json(const Json& j);
Json experiment_to_json(const ExperimentConfig& cfg);

/// Metrics of one method in one trial, all taken on the unit-normalized X.
struct TrialMetrics {
  std::string method;
  double time_s = 0.0;
  double relerr = 0.0;
  double residual = 0.0;
  double lambda_err = 0.0;
  std::size_t neg_count = 0;
  bool converged = false;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  double lambda_ref = 0.0;
  bool failed = false;
  std::string error;
  /// Reference row first, then the configured methods in order.
  std::vector<TrialMetrics> rows;
};

/// One aggregate line of a table; `method` carries a ":mean" or ":std"
/// suffix and `converged` holds the converged fraction (or its std).
struct MetricsRow {
  std::string method;
  double time_s = 0.0;
  double relerr = 0.0;
  double residual = 0.0;
  double lambda_err = 0.0;
  double neg_count = 0.0;
  double converged = 0.0;
};

struct ExperimentResult {
  std::string name;
  std::string rng_algorithm;
  std::vector<TrialResult> trials;
  std::vector<MetricsRow> table;
};

/// Runs every trial, then aggregates the mean and sample standard deviation
/// of each metric per method over the trials that did not fail.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Mean and sample standard deviation rows for each method, in first-seen
/// order. Failed trials are skipped.
std::vector<MetricsRow> aggregate(const std::vector<TrialResult>& trials);

enum class TableFormat { kCsv, kText };

inline constexpr const char* kCsvHeader =
    "method,time_s,relerr,residual,lambda_err,neg_count,converged";

/// With timing disabled the time column is written as 0 so repeated runs
/// produce identical bytes.
void emit_table(const std::vector<MetricsRow>& rows, TableFormat format, std::ostream& out,
                bool timing = true);
std::string format_table(const std::vector<MetricsRow>& rows, TableFormat format,
                         bool timing = true);

/// Parses text written by emit_table in CSV format.
std::vector<MetricsRow> parse_csv_table(std::istream& in);

Json experiment_result_to_json(const ExperimentResult& result, bool timing = true);

/// Number of entries strictly below zero.
std::size_t negcount(const DenseMatrix& x);

}  // namespace nnlr
