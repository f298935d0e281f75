#pragma once

// Scenario files, the construction registry, and report emission. A scenario
// is one JSON document naming a construction plus its inputs; running it
// yields a report of pass/fail invariant lines, certificates, and density
// profiles. Emission is byte-stable: rerunning the same scenario writes
// identical files. The grammar is documented in docs/scenario-format.md.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eqdensity/rational.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

// One input set given by a named generator. Which fields matter depends on
// the generator; validation flags both missing and stray ones.
struct OracleSpec {
  std::string gen;  // identity | evens | squares | delayed | block-bursty |
                    // values | structure-pairs
  Nat budget = 0;   // 0 inherits the scenario budget
  Nat factor = 0;   // delayed: slowdown factor; structure-pairs: stage gap
  Nat seed = 0;     // structure-pairs: nonzero scrambles the value order
  std::vector<Nat> values;    // values: the explicit member list
  std::string structure;      // structure-pairs: a structure id from below
  bool positive_density = false;  // anti-coarse-k: grants the no-action case
};

// One equivalence structure given by a named layout.
struct StructureSpec {
  std::string id;  // all-sizes | even-sizes | square-sizes | dense-pairs |
                   // sparse-pairs | infinite-evens | blocks | schedule |
                   // classes
  Nat k = 0;                              // blocks: the repeated class size
  std::vector<Rat> schedule;              // schedule: the q_n list
  std::vector<std::vector<Nat>> classes;  // classes: explicit finite classes
};

struct Scenario {
  std::string name;
  std::string construction;
  Nat horizon = 0;  // 0 picks the construction default
  Nat budget = 0;   // 0 picks the construction default
  Rat tolerance = Rat(1, 20);
  std::string out;  // output directory hint, lowest precedence
  std::vector<OracleSpec> oracles;
  std::vector<StructureSpec> structures;
  // Free-form construction parameters; list values arrive comma-joined.
  std::map<std::string, std::string> params;
  std::string source_path;
};

Scenario parse_scenario(const std::string& text, const std::string& source_path);
Scenario load_scenario(const std::string& path);

// Every problem found, not just the first; empty means runnable.
std::vector<std::string> validate_scenario(const Scenario& s);

struct CheckLine {
  std::string invariant;
  bool pass = false;
  std::string measured;  // already formatted, deterministic
};

struct ProfileDump {
  std::string name;  // file stem component, [a-z0-9-]
  std::vector<std::pair<Nat, std::string>> rows;  // (n, rho_n as "p/q")
};

struct Report {
  std::string scenario;
  std::string construction;
  std::vector<CheckLine> checks;
  // (key, value) pairs; emitted as a JSON object so keys must be unique
  std::vector<std::pair<std::string, std::string>> certificates;
  std::vector<ProfileDump> profiles;
  std::vector<std::string> warnings;
  double wall_seconds = 0;  // in-memory only, never serialized

  bool all_pass() const;
};

// Dispatches on s.construction. Throws ValidationError (joining every
// problem) when validate_scenario objects, ScenarioError/BudgetExhausted
// from the constructions themselves.
Report run_scenario(const Scenario& s);

enum class ReportFormat {
  Json,       // one self-contained JSON file, profiles inline
  CsvBundle,  // JSON summary plus one CSV per profile
};

// Writes <name>.report.json (and <name>.<profile>.csv for CsvBundle) under
// out_dir, creating it if needed. Returns the paths written, in order.
std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     ReportFormat fmt);

// The exact bytes the JSON file gets; exposed for determinism checks.
std::string report_json(const Report& r, ReportFormat fmt);

std::vector<std::string> known_constructions();

}  // namespace eqd
