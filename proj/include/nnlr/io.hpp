#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "nnlr/markovgrid.hpp"
#include "nnlr/solvers.hpp"

namespace nnlr {

using Json = nlohmann::json;

// Documents use dense matrices as arrays of row arrays. Doubles are written
// in shortest round-trip decimal form, so reading a written document gives
// back the same binary values.

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);

Json operator_to_json(const OperatorHandle& op);
OperatorHandle operator_from_json(const Json& j);

struct HadamardGrowthSpec {
  Index n = 0;
  double eps = 0.0;
  double eps_r = 0.0;
  double r0 = 0.0;
};

struct SeparableGrowthSpec {
  Index n = 0;
  double eps = 0.0;
  double r0 = 0.0;
  double eps_r = 0.0;
};

/// Recipe for an operator: a seeded grid generator or a parametric
/// growth-diffusion problem.
using OperatorSpec =
    std::variant<BlockGridSpec, RandomGridSpec, HadamardGrowthSpec, SeparableGrowthSpec>;

/// Accepts {"kind": "block_grid" | "random_grid" | "hadamard_growth" |
/// "separable_growth", ...parameters}.
OperatorSpec operator_spec_from_json(const Json& j);
Json operator_spec_to_json(const OperatorSpec& spec);
/// Replaces the seed of grid specs; growth specs carry no randomness.
OperatorSpec with_seed(OperatorSpec spec, std::uint64_t seed);
OperatorHandle build_operator(const OperatorSpec& spec);

/// Configuration of one solve: {"method": "power" | "shift_invert" | "psi" |
/// "rneg", ...parameters}. Missing parameters keep their defaults.
using SolverConfig = std::variant<PowerConfig, ShiftInvertConfig, PSIConfig, RNegConfig>;

SolverConfig solver_config_from_json(const Json& j);
Json solver_config_to_json(const SolverConfig& cfg);
EigenReport run_solver(const OperatorHandle& op, const SolverConfig& cfg);

PowerConfig power_config_from_json(const Json& j);
ShiftInvertConfig shift_invert_config_from_json(const Json& j);
PSIConfig psi_config_from_json(const Json& j);
RNegConfig rneg_config_from_json(const Json& j);

/// Report as JSON; the iteration history is included only when verbose.
Json report_to_json(const EigenReport& report, bool verbose);

Json validation_to_json(const GridValidation& v);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace nnlr
