#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coarsel2/cohomology.hpp"
#include "coarsel2/errors.hpp"
#include "coarsel2/io.hpp"
#include "coarsel2/runner.hpp"

namespace py = pybind11;
using namespace coarsel2;

namespace {

// JSON crosses the boundary as text; the Python side wraps json.loads/dumps.
std::string run_scenario_json(const std::string& scenario, const std::string& base_dir, int jobs,
                              std::optional<std::string> cache_dir, std::optional<std::size_t> tuple_cap) {
  RunOptions opts;
  opts.jobs = jobs;
  if (cache_dir) opts.cache_dir = *cache_dir;
  opts.tuple_cap = tuple_cap;
  auto r = run_scenario(Json::parse(scenario), base_dir, opts);
  return Json{{"report", r.report}, {"exit_code", r.exit_code}, {"diagnostics", r.diagnostics}}.dump();
}

WindowPtr window_from(const std::string& group, const std::string& window) {
  const auto g = build_group(parse_group_spec(Json::parse(group)));
  if (window.empty()) return parse_window(nullptr, g);
  const auto w = Json::parse(window);
  return parse_window(&w, g);
}

py::dict coboundary_coo(const std::string& group, const std::string& window, int degree, int scale) {
  const auto w = window_from(group, window);
  const auto op = coboundary_matrix(enumerate_tuples(w, degree, scale), enumerate_tuples(w, degree + 1, scale));
  std::vector<long> rows, cols;
  std::vector<double> vals;
  const auto& m = op.matrix();
  for (int r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      rows.push_back(static_cast<long>(it.row()));
      cols.push_back(static_cast<long>(it.col()));
      vals.push_back(it.value());
    }
  py::dict d;
  d["shape"] = py::make_tuple(m.rows(), m.cols());
  d["rows"] = rows;
  d["cols"] = cols;
  d["values"] = vals;
  return d;
}

py::dict harmonic(const std::string& group, const std::string& window, int degree, int scale, double tolerance) {
  const auto w = window_from(group, window);
  const auto h = harmonic_space(laplacian(w, degree, scale), tolerance);
  py::dict d;
  d["harmonic_count"] = h.report.harmonic_count;
  d["eigenvalues"] = h.report.eigenvalues;
  d["method"] = h.report.method;
  if (w->group()->is_finite() && w->is_whole_group())
    d["vn_dimension"] = vn_dimension_finite(*w->group(), h.report.harmonic_count);
  return d;
}

py::dict sweep(const std::string& group, int degree, int scale, const std::vector<std::int64_t>& radii) {
  const auto r = window_sweep(build_group(parse_group_spec(Json::parse(group))), degree, scale, radii);
  std::vector<double> normalized;
  for (const auto& e : r.estimates) normalized.push_back(e.normalized_dimension);
  py::dict d;
  d["normalized"] = normalized;
  d["verdict"] = to_string(r.verdict);
  d["strictly_decreasing"] = r.strictly_decreasing;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = kVersion;
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def("run_scenario_json", &run_scenario_json, py::arg("scenario"), py::arg("base_dir") = ".",
        py::arg("jobs") = 1, py::arg("cache_dir") = py::none(), py::arg("tuple_cap") = py::none(),
        py::call_guard<py::gil_scoped_release>());
  m.def("coboundary_coo", &coboundary_coo, py::arg("group"), py::arg("window"), py::arg("degree"),
        py::arg("scale"));
  m.def("harmonic", &harmonic, py::arg("group"), py::arg("window"), py::arg("degree"), py::arg("scale"),
        py::arg("tolerance") = kDefaultHarmonicTolerance);
  m.def("sweep", &sweep, py::arg("group"), py::arg("degree"), py::arg("scale"), py::arg("radii"));
}
