#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "r2opt/harness.hpp"

namespace py = pybind11;
using namespace r2opt;

namespace {

ObjectiveSet to_set(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("expected at least one point");
  ObjectiveSet set;
  for (const auto& r : rows) set.insert(ObjectiveVector(r));
  return set;
}

py::dict curve_dict(const RegretCurve& c) {
  py::dict d;
  d["iteration"] = c.iteration;
  d["mean"] = c.mean;
  d["std"] = c.std;
  d["runs"] = c.runs;
  d["failures"] = c.failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(r2opt, m) {
  m.doc() = "R2 utilities, greedy subset selection and Bayesian optimisation experiments.";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("problem_names", &problem_names);
  m.def(
      "evaluate",
      [](const std::string& name, const std::vector<double>& x, std::size_t D, std::size_t M) {
        const auto p = make_problem(name, D ? D : x.size(), M);
        const auto y = r2opt::evaluate(p, InputVector(x));
        return std::vector<double>(y.begin(), y.end());
      },
      py::arg("name"), py::arg("x"), py::arg("D") = 0, py::arg("M") = 2);

  m.def(
      "hypervolume",
      [](const std::vector<std::vector<double>>& points, const std::vector<double>& nadir) {
        return exact_hypervolume(to_set(points), ObjectiveVector(nadir)).value;
      },
      py::arg("points"), py::arg("nadir"));
  m.def(
      "igd_utility",
      [](const std::vector<std::vector<double>>& points, const std::vector<std::vector<double>>& refs, double p,
         double q, bool plus) { return igd_utility(to_set(points), to_set(refs), p, q, plus).value; },
      py::arg("points"), py::arg("references"), py::arg("p") = 2.0, py::arg("q") = 1.0, py::arg("plus") = true);
  m.def(
      "d1_utility",
      [](const std::vector<std::vector<double>>& points, const std::vector<std::vector<double>>& refs,
         const std::vector<double>& weights) { return d1_utility(to_set(points), to_set(refs), weights).value; },
      py::arg("points"), py::arg("references"), py::arg("weights"));
  m.def(
      "r2_utility",
      [](const std::vector<std::vector<double>>& points, const std::vector<double>& ideal, std::size_t J,
         std::uint64_t seed) {
        RandomStream rng(seed);
        const auto u = mc_utility(standard_r2_spec(ideal, J), to_set(points), rng);
        return py::make_tuple(u.value, u.std_error.value_or(0.0));
      },
      py::arg("points"), py::arg("ideal"), py::arg("J") = 1024, py::arg("seed") = 0,
      "Monte Carlo standard R2 utility; returns (value, standard error).");

  m.def(
      "canonical_config",
      [](const std::string& text) { return canonical_json(parse_config(text)); }, py::arg("text"));
  m.def(
      "config_digest", [](const std::string& text) { return config_digest(parse_config(text)); }, py::arg("text"));

  m.def(
      "run",
      [](const std::string& text, const std::string& mode, std::size_t parallel, std::optional<std::size_t> replications) {
        auto config = parse_config(text);
        if (replications) config.replications = *replications;
        config.validate();
        if (mode != "bo" && mode != "greedy") throw std::invalid_argument("mode must be bo or greedy");
        Replication rep;
        {
          py::gil_scoped_release release;
          const auto ex = prepare_experiment(config);
          rep = replicate(ex, parallel, mode == "bo" ? RunMode::bo : RunMode::greedy);
        }
        return curve_dict(rep.curve);
      },
      py::arg("config"), py::arg("mode") = "bo", py::arg("parallel") = 1, py::arg("replications") = py::none(),
      "Runs every replication of a JSON config and returns the mean log-regret curve.");
}
