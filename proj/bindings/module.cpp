// Python face of the toolkit: the scenario engine plus the handful of
// operations that are pleasant to poke at interactively. Rationals cross the
// boundary as "p/q" strings so nothing is lost to floats.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eqdensity/density.hpp"
#include "eqdensity/iso.hpp"
#include "eqdensity/oracles.hpp"
#include "eqdensity/scenario.hpp"
#include "eqdensity/structures.hpp"

namespace py = pybind11;
using namespace eqd;

namespace {

EqStructure make_named(const std::string& id) {
  if (id == "all-sizes") return canonical_all_sizes();
  if (id == "dense-pairs") return canonical_12(PairLayout::DensePairs);
  if (id == "sparse-pairs") return canonical_12(PairLayout::SparsePairs);
  throw ScenarioError("unknown structure id '" + id + "'");
}

py::dict character_dict(const Character& c) {
  py::dict counts;
  for (const auto& [size, n] : c.counts) counts[py::int_(size)] = n;
  py::dict out;
  out["counts"] = counts;
  out["truncated_classes"] = c.truncated_classes;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "finite-horizon experiments on equivalence structures";

  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<ScenarioError>(m, "ScenarioError");
  py::register_exception<BudgetExhausted>(m, "BudgetExhausted");

  py::class_<EqStructure>(m, "EqStructure")
      .def_readonly("note", &EqStructure::note)
      .def("related",
           [](const EqStructure& s, Nat x, Nat y) { return s.related(x, y); })
      .def("members_of",
           [](const EqStructure& s, Nat x) -> py::object {
             auto cls = s.exact_class(x);
             if (!cls) return py::none();
             return py::cast(*cls);
           })
      .def("character",
           [](const EqStructure& s, Nat horizon) {
             return character_dict(character_of(s, horizon));
           });

  m.def("structure", &make_named, py::arg("id"),
        "canonical structure by id: all-sizes | dense-pairs | sparse-pairs");
  m.def(
      "structure_from_classes",
      [](const std::vector<std::vector<Nat>>& classes) {
        return structure_from_classes("python classes", classes);
      },
      py::arg("classes"));

  py::class_<EnumerationOracle>(m, "EnumerationOracle")
      .def(py::init<std::string, Nat, std::vector<std::pair<Nat, Nat>>>(),
           py::arg("label"), py::arg("budget"), py::arg("plan"))
      .def_property_readonly("budget", &EnumerationOracle::budget)
      .def("snapshot", &EnumerationOracle::snapshot, py::arg("stage"))
      .def("contains_at", &EnumerationOracle::contains_at, py::arg("x"),
           py::arg("stage"));

  m.def(
      "prefix_density",
      [](const std::function<bool(Nat)>& member, Nat n) {
        return prefix_density(member, n).str();
      },
      py::arg("member"), py::arg("n"),
      "inclusive prefix density as a 'p/q' string");

  m.def(
      "square_density_sweep",
      [](const std::function<bool(Nat)>& member, Nat n_max) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [d, d2] : square_density_sweep(member, n_max))
          out.emplace_back(d.str(), d2.str());
        return out;
      },
      py::arg("member"), py::arg("n_max"));

  m.def(
      "extract_dense_subset",
      [](const EnumerationOracle& a, Nat target) {
        DenseSubset b = extract_dense_subset(a, a.budget(), target);
        py::dict out;
        out["member"] = b.member;
        out["coverage"] = b.certificate.coverage;
        out["segments"] = b.certificate.segments.size();
        return out;
      },
      py::arg("oracle"), py::arg("target_coverage") = 0);

  m.def(
      "build_12_density_q",
      [](const std::vector<std::string>& qs) {
        DyadicSchedule sched;
        for (const auto& q : qs) sched.q.push_back(Rat::parse(q));
        sched.limit = sched.q.empty() ? Rat(1, 2) : sched.q.back();
        Build12 b = build_12_density_q(sched);
        py::dict out;
        out["structure"] = b.E;
        out["checkpoints"] = b.checkpoints;
        out["type1_counts"] = b.type1_counts;
        return out;
      },
      py::arg("schedule"), "staged (1,2)-structure from a density schedule");

  py::class_<Report>(m, "Report")
      .def_readonly("scenario", &Report::scenario)
      .def_readonly("construction", &Report::construction)
      .def_property_readonly("all_pass", &Report::all_pass)
      .def_property_readonly("invariants",
                             [](const Report& r) {
                               std::vector<std::tuple<std::string, bool, std::string>> out;
                               for (const auto& c : r.checks)
                                 out.emplace_back(c.invariant, c.pass, c.measured);
                               return out;
                             })
      .def_property_readonly("warnings",
                             [](const Report& r) { return r.warnings; })
      .def("json", [](const Report& r) {
        return report_json(r, ReportFormat::Json);
      });

  m.def("run_scenario_file",
        [](const std::string& path) { return run_scenario(load_scenario(path)); },
        py::arg("path"));
  m.def("run_scenario_text",
        [](const std::string& text) {
          return run_scenario(parse_scenario(text, "<inline>"));
        },
        py::arg("text"));
  m.def("validate_scenario_file", [](const std::string& path) {
    return validate_scenario(load_scenario(path));
  });
  m.def("known_constructions", &known_constructions);
}
