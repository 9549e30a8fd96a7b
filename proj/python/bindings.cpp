// Thin Python layer: configs and reports travel as JSON text, matrices as
// numpy arrays.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>

#include "nnlr/bench.hpp"
#include "nnlr/lowrank.hpp"

namespace py = pybind11;

namespace {

nnlr::OperatorHandle load_operator(const std::string& text) {
  const nnlr::Json j = nnlr::Json::parse(text);
  const std::string kind = j.value("kind", "");
  if (kind == "block_grid" || kind == "random_grid" ||
      ((kind == "hadamard_growth" || kind == "separable_growth") && !j.contains("laplacian"))) {
    return nnlr::build_operator(nnlr::operator_spec_from_json(j));
  }
  return nnlr::operator_from_json(j);
}

}  // namespace

PYBIND11_MODULE(_nnlr, m) {
  py::register_exception<nnlr::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<nnlr::IoError>(m, "IoError", PyExc_OSError);

  m.def("generate", [](const std::string& spec) {
    return nnlr::operator_to_json(nnlr::build_operator(nnlr::operator_spec_from_json(nnlr::Json::parse(spec)))).dump();
  });
  m.def("solve", [](const std::string& op, const std::string& solver, bool verbose) {
    const nnlr::OperatorHandle handle = load_operator(op);
    const nnlr::EigenReport report = nnlr::run_solver(handle, nnlr::solver_config_from_json(nnlr::Json::parse(solver)));
    return nnlr::report_to_json(report, verbose).dump();
  }, py::arg("op"), py::arg("solver"), py::arg("verbose") = false);
  m.def("bench", [](const std::string& experiment, bool timing) {
    const nnlr::ExperimentResult r = nnlr::run_experiment(nnlr::experiment_from_json(nnlr::Json::parse(experiment)));
    return nnlr::experiment_result_to_json(r, timing).dump();
  }, py::arg("experiment"), py::arg("timing") = true);
  m.def("apply", [](const std::string& op, const nnlr::Matrix& x) {
    return nnlr::apply_full(load_operator(op), nnlr::DenseMatrix(x)).values();
  });
  m.def("vectorize", [](const std::string& op) {
    const nnlr::OperatorHandle handle = load_operator(op);
    const auto* grid = std::get_if<nnlr::MarkovGridOperator>(&handle.get());
    if (!grid) throw nnlr::DomainError("vectorize: only Markov grids are supported");
    return nnlr::vectorize_operator(*grid).values();
  });
  m.def("best_scaled_error", [](const nnlr::Matrix& x, const nnlr::Matrix& xstar) {
    return nnlr::best_scaled_error(nnlr::DenseMatrix(x), nnlr::DenseMatrix(xstar));
  });
  m.def("negcount", [](const nnlr::Matrix& x) { return nnlr::negcount(nnlr::DenseMatrix(x)); });
}
