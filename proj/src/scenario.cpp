#include "eqdensity/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "eqdensity/density.hpp"
#include "eqdensity/generic.hpp"
#include "eqdensity/iso.hpp"
#include "eqdensity/oracles.hpp"
#include "eqdensity/s1.hpp"
#include "eqdensity/structures.hpp"

namespace eqd {

using nlohmann::json;

namespace {

constexpr Nat kHorizonCap = 200000;
constexpr Nat kBudgetCap = 1000000;

const std::set<std::string>& enum_generators() {
  static const std::set<std::string> g = {
      "identity", "evens", "squares", "delayed", "block-bursty", "values"};
  return g;
}

const std::set<std::string>& structure_ids() {
  static const std::set<std::string> g = {
      "all-sizes",  "even-sizes",  "square-sizes", "dense-pairs", "sparse-pairs",
      "infinite-evens", "blocks",  "schedule",     "classes"};
  return g;
}

bool is_slug(const std::string& s) {
  if (s.empty() || s.size() > 80) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' &&
        c != '.')
      return false;
  return true;
}

// ---- parsing ---------------------------------------------------------------

Nat as_nat(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ValidationError(where + ": expected a nonnegative integer");
  auto n = v.get<std::int64_t>();
  if (n < 0) throw ValidationError(where + ": expected a nonnegative integer");
  return static_cast<Nat>(n);
}

Rat as_rat(const json& v, const std::string& where) {
  try {
    if (v.is_string()) return Rat::parse(v.get<std::string>());
    if (v.is_number_integer() || v.is_number_unsigned())
      return Rat(v.get<std::int64_t>());
  } catch (const std::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
  throw ValidationError(where + ": expected a rational like \"3/8\"");
}

std::string scalar_to_string(const json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw ValidationError(where + ": expected a scalar or a list of scalars");
}

OracleSpec parse_oracle(const json& v, const std::string& where) {
  OracleSpec sp;
  if (v.is_string()) {
    sp.gen = v.get<std::string>();
    return sp;
  }
  if (!v.is_object()) throw ValidationError(where + ": expected a generator");
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string& k = it.key();
    if (k == "gen")
      sp.gen = it.value().get<std::string>();
    else if (k == "budget")
      sp.budget = as_nat(it.value(), where + ".budget");
    else if (k == "factor")
      sp.factor = as_nat(it.value(), where + ".factor");
    else if (k == "seed")
      sp.seed = as_nat(it.value(), where + ".seed");
    else if (k == "structure")
      sp.structure = it.value().get<std::string>();
    else if (k == "positive-density")
      sp.positive_density = it.value().get<bool>();
    else if (k == "values") {
      if (!it.value().is_array())
        throw ValidationError(where + ".values: expected a list");
      for (const auto& e : it.value())
        sp.values.push_back(as_nat(e, where + ".values"));
    } else {
      throw ValidationError(where + ": unknown key '" + k + "'");
    }
  }
  return sp;
}

StructureSpec parse_structure(const json& v, const std::string& where) {
  StructureSpec sp;
  if (v.is_string()) {
    sp.id = v.get<std::string>();
    return sp;
  }
  if (!v.is_object()) throw ValidationError(where + ": expected a structure");
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string& k = it.key();
    if (k == "id")
      sp.id = it.value().get<std::string>();
    else if (k == "k")
      sp.k = as_nat(it.value(), where + ".k");
    else if (k == "q") {
      if (!it.value().is_array())
        throw ValidationError(where + ".q: expected a list of rationals");
      for (const auto& e : it.value())
        sp.schedule.push_back(as_rat(e, where + ".q"));
    } else if (k == "classes") {
      if (!it.value().is_array())
        throw ValidationError(where + ".classes: expected a list of lists");
      for (const auto& cls : it.value()) {
        if (!cls.is_array())
          throw ValidationError(where + ".classes: expected a list of lists");
        std::vector<Nat> members;
        for (const auto& e : cls) members.push_back(as_nat(e, where + ".classes"));
        sp.classes.push_back(std::move(members));
      }
    } else {
      throw ValidationError(where + ": unknown key '" + k + "'");
    }
  }
  return sp;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source_path) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(source_path + ": not valid JSON: " + e.what());
  }
  if (!doc.is_object())
    throw ValidationError(source_path + ": top level must be an object");

  Scenario s;
  s.source_path = source_path;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "name")
      s.name = v.get<std::string>();
    else if (k == "construction")
      s.construction = v.get<std::string>();
    else if (k == "horizon")
      s.horizon = as_nat(v, "horizon");
    else if (k == "budget")
      s.budget = as_nat(v, "budget");
    else if (k == "tolerance")
      s.tolerance = as_rat(v, "tolerance");
    else if (k == "out")
      s.out = v.get<std::string>();
    else if (k == "oracles") {
      if (!v.is_array()) throw ValidationError("oracles: expected a list");
      for (std::size_t i = 0; i < v.size(); ++i)
        s.oracles.push_back(
            parse_oracle(v[i], "oracles[" + std::to_string(i) + "]"));
    } else if (k == "structures") {
      if (!v.is_array()) throw ValidationError("structures: expected a list");
      for (std::size_t i = 0; i < v.size(); ++i)
        s.structures.push_back(
            parse_structure(v[i], "structures[" + std::to_string(i) + "]"));
    } else if (k == "metadata") {
      if (!v.is_object()) throw ValidationError("metadata: expected an object");
      for (auto mit = v.begin(); mit != v.end(); ++mit) {
        const json& mv = mit.value();
        if (mv.is_array()) {
          std::string joined;
          for (const auto& e : mv) {
            if (!joined.empty()) joined += ",";
            joined += scalar_to_string(e, "metadata." + mit.key());
          }
          s.params[mit.key()] = joined;
        } else {
          s.params[mit.key()] = scalar_to_string(mv, "metadata." + mit.key());
        }
      }
    } else {
      throw ValidationError("unknown top-level key '" + k + "'");
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

// ---- construction registry and defaults ------------------------------------

struct Defaults {
  Nat horizon;
  Nat budget;
};

const std::map<std::string, Defaults>& construction_defaults() {
  static const std::map<std::string, Defaults> d = {
      {"prop1", {2000, 4000}},
      {"thm4", {2000, 4000}},
      {"thm2-restrict", {2000, 4096}},
      {"anti-coarse-k", {4096, 4096}},
      {"weak-coarse-iso", {4000, 4000}},
      {"thm12-demo", {2048, 2048}},
      {"ex1-demo", {2000, 4096}},
      {"s1-roundtrip", {4000, 6000}},
      {"square-density", {2000, 2000}},
      {"extract-dense", {4096, 4096}},
      {"diagonal-complement", {1024, 1024}},
      {"build-12", {2000, 2000}},
      {"staged-subrelation", {4000, 4000}},
      {"interleaved-bijection", {2000, 2000}},
      {"generic-iso-char2", {2000, 2000}},
      {"coarse-iso-char1", {2000, 2000}},
      {"sparse-simple", {2048, 2048}},
      {"faithful-coarse", {4000, 4000}},
      {"diagonal-dense-k", {1024, 1024}},
      {"character", {500, 500}},
  };
  return d;
}

Nat effective_horizon(const Scenario& s) {
  if (s.horizon) return s.horizon;
  return construction_defaults().at(s.construction).horizon;
}

Nat effective_budget(const Scenario& s) {
  if (s.budget) return s.budget;
  return construction_defaults().at(s.construction).budget;
}

// ---- input realization -----------------------------------------------------

StructureSpec named_structure(std::string id) {
  StructureSpec sp;
  sp.id = std::move(id);
  return sp;
}

EqStructure make_structure(const StructureSpec& sp) {
  if (sp.id == "all-sizes") return canonical_all_sizes();
  if (sp.id == "dense-pairs") return canonical_12(PairLayout::DensePairs);
  if (sp.id == "sparse-pairs") return canonical_12(PairLayout::SparsePairs);
  if (sp.id == "even-sizes" || sp.id == "square-sizes") {
    // consecutive blocks, class n holding size(n) elements
    const bool even = sp.id == "even-sizes";
    auto size_of = [even](Nat n) { return even ? 2 * (n + 1) : (n + 1) * (n + 1); };
    auto locate = [size_of](Nat x) {
      Nat start = 0, n = 0;
      while (start + size_of(n) <= x) start += size_of(n), ++n;
      return std::pair<Nat, Nat>(n, start);
    };
    EqStructure S;
    S.note = sp.id;
    S.related = [locate](Nat x, Nat y) {
      return locate(x).first == locate(y).first;
    };
    S.members_of = [locate, size_of](Nat x) -> std::optional<std::vector<Nat>> {
      auto [n, start] = locate(x);
      std::vector<Nat> cls(size_of(n));
      for (Nat i = 0; i < cls.size(); ++i) cls[i] = start + i;
      return cls;
    };
    return S;
  }
  if (sp.id == "infinite-evens") {
    EqStructure S;
    S.note = "one infinite class on the evens, singletons elsewhere";
    S.related = [](Nat x, Nat y) { return x == y || (x % 2 == 0 && y % 2 == 0); };
    S.members_of = [](Nat x) -> std::optional<std::vector<Nat>> {
      if (x % 2 == 0) return std::nullopt;  // infinite class, no finite list
      return std::vector<Nat>{x};
    };
    S.declared_infinite = [](Nat x) { return x % 2 == 0; };
    return S;
  }
  if (sp.id == "blocks") {
    const Nat k = sp.k;
    EqStructure S;
    S.note = "blocks of " + std::to_string(k);
    S.related = [k](Nat x, Nat y) { return x / k == y / k; };
    S.members_of = [k](Nat x) -> std::optional<std::vector<Nat>> {
      std::vector<Nat> cls(k);
      for (Nat i = 0; i < k; ++i) cls[i] = (x / k) * k + i;
      return cls;
    };
    return S;
  }
  if (sp.id == "schedule") {
    DyadicSchedule sched;
    sched.q = sp.schedule;
    sched.limit = sp.schedule.empty() ? Rat(1, 2) : sp.schedule.back();
    return build_12_density_q(sched).E;
  }
  if (sp.id == "classes")
    return structure_from_classes("explicit classes", sp.classes);
  throw ScenarioError("unknown structure id '" + sp.id + "'");
}

// All intra-class pairs of the complete classes below the horizon, ordered by
// (max, min): for block layouts this is exactly class-by-class order.
std::vector<PairEnumerationOracle::Entry> class_pairs_below(const EqStructure& S,
                                                            Nat horizon) {
  std::vector<std::pair<Nat, Nat>> pairs;
  for (const auto& cls : classes_below(S, horizon)) {
    if (!cls.complete) continue;
    for (std::size_t i = 0; i < cls.below.size(); ++i)
      for (std::size_t j = i + 1; j < cls.below.size(); ++j)
        pairs.emplace_back(cls.below[i], cls.below[j]);
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::vector<PairEnumerationOracle::Entry> plan;
  plan.reserve(pairs.size());
  for (const auto& [x, y] : pairs)
    plan.push_back({static_cast<Nat>(plan.size() + 1), x, y});
  return plan;
}

PairEnumerationOracle pair_oracle_from(const OracleSpec& sp, Nat scen_budget) {
  if (sp.gen != "structure-pairs")
    throw ScenarioError("generator '" + sp.gen + "' does not produce pairs");
  Nat budget = sp.budget ? sp.budget : scen_budget;
  EqStructure S = make_structure(named_structure(sp.structure));
  auto plan = class_pairs_below(S, budget);
  if (sp.seed) {
    std::vector<std::pair<Nat, Nat>> vals;
    vals.reserve(plan.size());
    for (const auto& e : plan) vals.emplace_back(e.x, e.y);
    detail::deterministic_shuffle(vals, sp.seed);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      plan[i].x = vals[i].first;
      plan[i].y = vals[i].second;
    }
  }
  const Nat gap = std::max<Nat>(1, sp.factor);
  Nat max_stage = 0;
  for (std::size_t i = 0; i < plan.size(); ++i)
    max_stage = plan[i].stage = (i + 1) * gap;
  return PairEnumerationOracle(sp.structure + " pairs",
                               std::max(budget, max_stage), std::move(plan));
}

EnumerationOracle enum_oracle_from(const OracleSpec& sp, Nat scen_budget) {
  Nat budget = sp.budget ? sp.budget : scen_budget;
  if (sp.gen == "identity") return gen::identity(budget);
  if (sp.gen == "evens") return gen::evens(budget);
  if (sp.gen == "squares") return gen::squares(budget);
  if (sp.gen == "delayed") return gen::delayed(std::max<Nat>(1, sp.factor), budget);
  if (sp.gen == "block-bursty") return gen::block_bursty(budget);
  if (sp.gen == "values") return gen::from_values("values", sp.values, budget);
  throw ScenarioError("generator '" + sp.gen + "' does not produce a plain set");
}

std::string oracle_label(const OracleSpec& sp, std::size_t i) {
  std::string out = sp.gen;
  if (sp.gen == "delayed") out += "-" + std::to_string(std::max<Nat>(1, sp.factor));
  if (sp.gen == "structure-pairs") out += "-" + sp.structure;
  return "oracle " + std::to_string(i) + " (" + out + ")";
}

// ---- scenario parameters ---------------------------------------------------

std::string param_str(const Scenario& s, const std::string& key,
                      const std::string& fallback) {
  auto it = s.params.find(key);
  return it == s.params.end() ? fallback : it->second;
}

Nat param_nat(const Scenario& s, const std::string& key, Nat fallback) {
  auto it = s.params.find(key);
  if (it == s.params.end()) return fallback;
  try {
    return static_cast<Nat>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw ValidationError("metadata." + key + ": expected an integer, got '" +
                          it->second + "'");
  }
}

std::vector<Rat> param_rat_list(const Scenario& s, const std::string& key,
                                const std::vector<Rat>& fallback) {
  auto it = s.params.find(key);
  if (it == s.params.end()) return fallback;
  std::vector<Rat> out;
  std::stringstream ss(it->second);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    try {
      out.push_back(Rat::parse(piece));
    } catch (const std::exception&) {
      throw ValidationError("metadata." + key + ": bad rational '" + piece + "'");
    }
  }
  if (out.empty())
    throw ValidationError("metadata." + key + ": expected rationals");
  return out;
}

std::vector<Nat> param_nat_list(const Scenario& s, const std::string& key) {
  auto it = s.params.find(key);
  std::vector<Nat> out;
  if (it == s.params.end()) return out;
  std::stringstream ss(it->second);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    try {
      out.push_back(static_cast<Nat>(std::stoull(piece)));
    } catch (const std::exception&) {
      throw ValidationError("metadata." + key + ": bad integer '" + piece + "'");
    }
  }
  return out;
}

ScenarioMetadata metadata_from(const Scenario& s) {
  ScenarioMetadata md;
  const std::string tag = param_str(s, "case", "none");
  if (tag == "infinite-class") {
    md.tag = CaseTag::InfiniteClass;
    md.infinite_reps = param_nat_list(s, "infinite-reps");
    if (md.infinite_reps.empty()) md.infinite_reps = {0};
  } else if (tag == "repeated-size") {
    md.tag = CaseTag::RepeatedSize;
    md.repeated_size = param_nat(s, "size", 0);
  } else if (tag == "s1-subset") {
    md.tag = CaseTag::S1Subset;
  } else if (tag == "none") {
    md.tag = CaseTag::None;
  } else {
    throw ValidationError("metadata.case: unknown tag '" + tag + "'");
  }
  return md;
}

// ---- report helpers --------------------------------------------------------

void add_check(Report& r, std::string invariant, bool pass, std::string measured) {
  r.checks.push_back({std::move(invariant), pass, std::move(measured)});
}

void add_cert(Report& r, std::string key, std::string value) {
  r.certificates.emplace_back(std::move(key), std::move(value));
}

std::string join_nats(const std::vector<Nat>& v, std::size_t cap = 24) {
  std::string out;
  for (std::size_t i = 0; i < v.size() && i < cap; ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  if (v.size() > cap) out += ",...";
  return out;
}

// Sampled prefix-density rows of a membership predicate: every stride-th
// point plus the final one.
void add_profile(Report& r, std::string name, const std::function<bool(Nat)>& member,
                 Nat points) {
  if (points == 0) return;
  ProfileDump p;
  p.name = std::move(name);
  const Nat stride = std::max<Nat>(1, points / 200);
  Nat count = 0;
  for (Nat n = 0; n < points; ++n) {
    if (member(n)) ++count;
    if ((n + 1) % stride == 0 || n + 1 == points)
      p.rows.emplace_back(n, Rat::ratio(count, n + 1).str());
  }
  r.profiles.push_back(std::move(p));
}

void add_profile(Report& r, std::string name, const std::vector<bool>& member) {
  add_profile(r, std::move(name),
              [&member](Nat x) { return x < member.size() && member[x]; },
              member.size());
}

std::string pass_range(Nat checked) {
  return std::to_string(checked) + " pairs checked";
}

// ---- runners ----------------------------------------------------------------

GenericCopy run_copy(const Scenario& s, Report& r) {
  StructureSpec sp =
      s.structures.empty() ? named_structure("all-sizes") : s.structures[0];
  const EqStructure S = make_structure(sp);
  ScenarioMetadata md = metadata_from(s);
  const Nat h = effective_horizon(s);
  GenericCopy gc = strongly_generic_copy(S, md, h);

  WitnessCheck wc = verify_generic_witness(gc.witness, h);
  add_check(r, "partial decision agrees with the copy on its domain below the horizon",
            wc.ok, wc.ok ? pass_range(wc.pairs_checked) : wc.detail);

  Rat floor = Rat(1) - s.tolerance;
  Rat carrier_density = prefix_density(gc.carrier_member, h - 1);
  add_check(r, "carrier density at the horizon within tolerance of one",
            carrier_density >= floor, carrier_density.str());

  const Nat eq_h = std::min<Nat>(h, 1000);
  EquivalenceCheck eq = verify_equivalence(gc.copy, eq_h);
  add_check(r, "copy is an equivalence relation below the check horizon", eq.ok,
            eq.ok ? std::to_string(eq_h) + " elements" : eq.detail);

  FaithfulReport fr = is_faithful(gc.carrier_member, gc.copy, h);
  if (gc.case_used == 3) {
    std::string cx = fr.counterexample
                         ? std::to_string(fr.counterexample->first) + "," +
                               std::to_string(fr.counterexample->second)
                         : "none";
    add_check(r, "transversal carrier exhibits a faithfulness counterexample",
              !fr.faithful, cx);
  } else {
    add_check(r, "carrier is faithful inside the copy", fr.faithful,
              fr.faithful ? "no counterexample" : "counterexample found");
  }

  add_cert(r, "case", std::to_string(gc.case_used));
  add_cert(r, "carrier-size", std::to_string(gc.carrier.size()));
  add_cert(r, "matched-horizon", std::to_string(gc.matched_horizon));
  add_profile(r, "carrier", gc.carrier_member, h);
  return gc;
}

Report run_prop1(const Scenario& s) {
  Report r;
  run_copy(s, r);
  return r;
}

Report run_thm4(const Scenario& s) {
  Report r;
  StructureSpec sp =
      s.structures.empty() ? named_structure("all-sizes") : s.structures[0];
  const EqStructure S = make_structure(sp);
  ScenarioMetadata md = metadata_from(s);
  const Nat h = effective_horizon(s);

  const Nat rows = param_nat(s, "rows", 12);
  S1Table f;
  if (md.tag == CaseTag::S1Subset) {
    const std::string shape = param_str(s, "table", "constant");
    if (shape == "constant")
      f = S1Table::from_function([](Nat i, Nat) { return i + 1; }, rows);
    else if (shape == "ramp")
      f = S1Table::from_function(
          [](Nat i, Nat st) { return std::min<Nat>(i + 1, st - i + 1); }, rows);
    else
      throw ValidationError("metadata.table: unknown shape '" + shape + "'");
  }
  CharacterApprox K;
  K.budget = effective_budget(s);
  K.guess = [](Nat, Nat, Nat) { return true; };
  for (Nat k : param_nat_list(s, "affirm")) K.candidates.emplace_back(k, 1);

  FaithfulCopy fc = faithful_generic_copy(S, md, K, f, h);
  add_check(r, "carrier is faithful inside the copy", fc.faithfulness.faithful,
            fc.faithfulness.faithful ? "no counterexample" : "counterexample found");
  WitnessCheck wc = verify_generic_witness(fc.base.witness, h);
  add_check(r, "partial decision agrees with the copy on its domain below the horizon",
            wc.ok, wc.ok ? pass_range(wc.pairs_checked) : wc.detail);
  Rat floor = Rat(1) - s.tolerance;
  Rat carrier_density = prefix_density(fc.base.carrier_member, h - 1);
  add_check(r, "carrier density at the horizon within tolerance of one",
            carrier_density >= floor, carrier_density.str());
  if (md.tag == CaseTag::S1Subset) {
    add_check(r, "declared character grew a structure on the carrier",
              fc.grown.has_value(),
              fc.grown ? std::to_string(fc.grown->classes.size()) + " classes"
                       : "absent");
    if (fc.grown) add_cert(r, "grown-elements", std::to_string(fc.grown->elements_used));
  }
  add_cert(r, "case", std::to_string(fc.base.case_used));
  add_cert(r, "carrier-size", std::to_string(fc.base.carrier.size()));
  add_profile(r, "carrier", fc.base.carrier_member, h);
  return r;
}

Report run_thm2_restrict(const Scenario& s) {
  Report r;
  GenericCopy gc = run_copy(s, r);
  RestrictedWitness rw = restrict_generic_witness(gc.witness, effective_budget(s));

  const auto& crt = rw.Y.certificate;
  bool bounds = !crt.segments.empty();
  for (const auto& seg : crt.segments) bounds = bounds && seg.bound_met;
  add_check(r, "every extraction segment meets its claimed density bound", bounds,
            std::to_string(crt.segments.size()) + " segments");

  const Nat target = effective_budget(s) / 2;
  add_check(r, "extracted subset is decided past half the budget",
            crt.coverage >= target, std::to_string(crt.coverage));

  const Nat check_h = std::min<Nat>({crt.coverage, effective_horizon(s), 1500});
  Nat pairs = 0;
  bool exact = true;
  for (Nat x = 0; x < check_h && exact; ++x) {
    if (!rw.Y.member[x]) continue;
    for (Nat y = 0; y < check_h; ++y) {
      if (!rw.Y.member[y]) continue;
      ++pairs;
      if (rw.decide(x, y) != gc.copy.related(x, y)) {
        exact = false;
        break;
      }
    }
  }
  add_check(r, "inherited decision procedure is total and exact on the subset",
            exact, pass_range(pairs));

  add_cert(r, "coverage", std::to_string(crt.coverage));
  add_profile(r, "subset", rw.Y.member);
  return r;
}

Report run_anti_coarse_k(const Scenario& s) {
  Report r;
  const Nat budget = effective_budget(s);
  OracleRegistry<PairEnumerationOracle> reg;
  std::vector<ScenarioMetadata> mds;
  for (const auto& sp : s.oracles) {
    reg.add(pair_oracle_from(sp, budget));
    ScenarioMetadata md;
    md.positive_density_size = sp.positive_density;
    mds.push_back(md);
  }
  AntiCoarseK ak = anti_coarse_K(reg, mds, budget);

  Nat removed = 0;
  for (const auto& e : ak.log)
    if (e.action == AntiCoarseAction::Removed) ++removed;
  add_check(r, "one element preserved per acted requirement",
            ak.preserved.size() == removed,
            std::to_string(ak.preserved.size()) + " preserved / " +
                std::to_string(removed) + " removals");

  bool wit_ok = true;
  for (const auto& w : ak.witnesses) wit_ok = wit_ok && w.ok;
  add_check(r, "coverage stays under its bound plus slack at every witness point",
            wit_ok, std::to_string(ak.witnesses.size()) + " witnesses");

  bool stalled = false;
  for (const auto& e : ak.log) stalled = stalled || e.action == AntiCoarseAction::Stalled;
  add_check(r, "no requirement stalled inside the budget", !stalled,
            std::to_string(ak.log.size()) + " requirements");

  for (const auto& e : ak.log) {
    std::string act = e.action == AntiCoarseAction::Removed    ? "removed"
                      : e.action == AntiCoarseAction::Nested   ? "nested"
                      : e.action == AntiCoarseAction::Stalled  ? "stalled"
                                                               : "no-action";
    std::string v = act;
    if (e.action == AntiCoarseAction::Removed)
      v += " residue " + std::to_string(e.residue) + " mod " +
           std::to_string(e.modulus) + ", preserved " + std::to_string(e.preserved) +
           ", selection " + e.selection_density.str() + " at " +
           std::to_string(e.checkpoint);
    add_cert(r, "requirement-" + std::to_string(e.requirement), v);
  }
  for (const auto& w : ak.witnesses)
    add_cert(r, "coverage-" + std::to_string(w.requirement),
             w.coverage.str() + " vs " + w.bound.str() + " + " + w.epsilon.str() +
                 " at " + std::to_string(w.checkpoint));
  add_profile(r, "kept-sizes", ak.member, std::min<Nat>(budget, 4096));
  return r;
}

Report run_weak_coarse_iso(const Scenario& s) {
  Report r;
  if (s.structures.size() < 2)
    throw ValidationError("weak-coarse-iso: needs two schedule structures");
  EqStructure A = make_structure(s.structures[0]);
  EqStructure B = make_structure(s.structures[1]);
  std::vector<Rat> qs = param_rat_list(s, "q", {Rat(1, 2)});
  auto qf = [qs](Nat i) { return qs[std::min<std::size_t>(i, qs.size() - 1)]; };
  const Nat budget = effective_budget(s);

  WeakCoarse12 w = weak_coarse_iso_12(A, B, qf, budget, s.tolerance);

  bool div_ok = true;
  for (const auto& d : w.C.divergence) div_ok = div_ok && d.ok;
  for (const auto& d : w.D.divergence) div_ok = div_ok && d.ok;
  add_check(r, "every staged divergence certificate clears its bound", div_ok,
            std::to_string(w.C.divergence.size() + w.D.divergence.size()) +
                " certificates");

  add_check(r, "agreement set splits into the three cases exhaustively",
            w.cases.ok,
            w.cases.ok ? std::to_string(w.cases.case1) + "/" +
                             std::to_string(w.cases.case2) + "/" +
                             std::to_string(w.cases.case3)
                       : w.cases.detail);

  add_check(r, "complement identity holds on the boundary-clean region",
            w.complement_identity,
            std::to_string(w.complement_mismatches) + " mismatches");

  bool bounds_ok = true;
  for (const auto& b : w.g1.bounds) bounds_ok = bounds_ok && b.ok;
  add_check(r, "both interleaving counting bounds hold at every prefix",
            bounds_ok, std::to_string(w.g1.bounds.size()) + " prefixes");

  add_check(r, "agreement set density at least nine tenths at the work horizon",
            w.e_density >= Rat(9, 10), w.e_density.str());

  add_cert(r, "work-horizon", std::to_string(w.work_horizon));
  add_cert(r, "matched-pairs", std::to_string(w.g2.size()));
  add_cert(r, "unmatched", std::to_string(w.witness.unmatched));
  add_cert(r, "frontier-c", std::to_string(w.C.frontier));
  add_cert(r, "frontier-d", std::to_string(w.D.frontier));
  for (const auto& warn : w.witness.warnings) r.warnings.push_back(warn);
  for (const auto& warn : w.g1.warnings) r.warnings.push_back(warn);
  add_profile(r, "agreement", w.E);
  return r;
}

Report run_thm12_demo(const Scenario& s) {
  Report r;
  const Nat budget = effective_budget(s);
  OracleRegistry<EnumerationOracle> reg;
  for (const auto& sp : s.oracles) reg.add(enum_oracle_from(sp, budget));
  SparseSimple ss = sparse_simple_set(reg, budget);

  bool dens_ok = !ss.density.empty();
  for (const auto& c : ss.density) dens_ok = dens_ok && c.ok;
  add_check(r, "sparse set keeps at most k elements below two to the k", dens_ok,
            std::to_string(ss.density.size()) + " dyadic checkpoints");

  Nat hit = 0;
  for (const auto& c : ss.hits)
    if (c.element) ++hit;
  add_check(r, "every registered enumeration contributed a value above its threshold",
            hit == ss.hits.size(),
            std::to_string(hit) + " of " + std::to_string(ss.hits.size()));

  // Greedy pairing of the sparse hits in enumeration order gives the pair
  // part of a structure whose pair set is exactly the sparse set.
  std::vector<Nat> order;
  for (const auto& e : ss.S.entries()) order.push_back(e.second);
  std::vector<std::vector<Nat>> classes;
  for (std::size_t i = 0; i + 1 < order.size(); i += 2)
    classes.push_back({order[i], order[i + 1]});
  if (order.size() % 2) r.warnings.push_back("odd sparse hit left unpaired");
  EqStructure A = structure_from_classes("paired sparse hits", classes);
  EqStructure C = canonical_12(PairLayout::SparsePairs);
  add_cert(r, "paired-classes", std::to_string(classes.size()));

  // Candidate map C -> A taken to be the identity; its obstruction set is the
  // singleton part of C intersected with the domain. For the witness those
  // elements' images must avoid the sparse set, and nearly all do.
  auto in_d = [](Nat x) {
    Nat rt = static_cast<Nat>(std::sqrt(static_cast<double>(x)));
    while (rt * rt > x) --rt;
    while ((rt + 1) * (rt + 1) <= x) ++rt;
    return (rt >= 1 && rt * rt == x) || (rt >= 1 && x == rt * rt + 1);
  };
  Nat avoiding = 0, obstruction = 0;
  std::vector<Nat> sample;
  for (Nat x = 0; x < budget; ++x) {
    if (in_d(x)) continue;
    ++obstruction;
    if (!ss.S.contains_at(x, budget)) {
      ++avoiding;
      if (sample.size() < 12) sample.push_back(x);
    }
  }
  add_check(r, "at least fifty obstruction elements map off the sparse set",
            avoiding >= 50, std::to_string(avoiding) + " of " +
                                std::to_string(obstruction) + " below budget");
  (void)A;
  (void)C;

  add_cert(r, "sparse-size", std::to_string(ss.S.count_at(ss.S.budget())));
  add_cert(r, "obstruction-sample", join_nats(sample));
  for (const auto& c : ss.hits)
    if (c.element)
      add_cert(r, "hit-" + std::to_string(c.e),
               std::to_string(*c.element) + " at stage " + std::to_string(c.stage));
  add_profile(r, "sparse-set",
              [&ss, budget](Nat x) { return ss.S.contains_at(x, budget); },
              std::min<Nat>(budget, 2048));
  return r;
}

Report run_ex1_demo(const Scenario& s) {
  Report r;
  Scenario local = s;
  if (local.structures.empty())
    local.structures.push_back(named_structure("infinite-evens"));
  if (!local.params.count("case")) local.params["case"] = "infinite-class";
  GenericCopy gc = run_copy(local, r);

  RestrictedWitness rw = restrict_generic_witness(gc.witness, effective_budget(s));
  const Nat check_h = std::min<Nat>({rw.Y.certificate.coverage,
                                     effective_horizon(s), 1500});
  Nat pairs = 0;
  bool exact = true;
  for (Nat x = 0; x < check_h && exact; ++x) {
    if (!rw.Y.member[x]) continue;
    for (Nat y = 0; y < check_h; ++y) {
      if (!rw.Y.member[y]) continue;
      ++pairs;
      if (rw.decide(x, y) != gc.copy.related(x, y)) {
        exact = false;
        break;
      }
    }
  }
  add_check(r, "restriction to the extracted subset is decided exactly", exact,
            pass_range(pairs));

  // The sting: an arbitrary infinite computable set need not respect the
  // class structure; the probe set cuts the infinite class in half.
  const std::string probe = param_str(s, "probe", "evens");
  std::function<bool(Nat)> probe_member;
  if (probe == "evens")
    probe_member = [](Nat x) { return x % 2 == 0; };
  else if (probe == "squares")
    probe_member = [](Nat x) {
      Nat rt = static_cast<Nat>(std::sqrt(static_cast<double>(x)));
      while (rt * rt > x) --rt;
      while ((rt + 1) * (rt + 1) <= x) ++rt;
      return rt * rt == x;
    };
  else
    throw ValidationError("metadata.probe: unknown set '" + probe + "'");
  FaithfulReport fr = is_faithful(probe_member, gc.copy, effective_horizon(s));
  std::string cx = fr.counterexample
                       ? std::to_string(fr.counterexample->first) + "," +
                             std::to_string(fr.counterexample->second)
                       : "none";
  add_check(r, "an arbitrary infinite computable set splits a class of the copy",
            !fr.faithful, cx);
  add_cert(r, "coverage", std::to_string(rw.Y.certificate.coverage));
  return r;
}

Report run_s1_roundtrip(const Scenario& s) {
  Report r;
  StructureSpec sp =
      s.structures.empty() ? named_structure("all-sizes") : s.structures[0];
  const EqStructure S = make_structure(sp);
  const Nat budget = effective_budget(s);

  OracleSpec osp;
  osp.gen = "structure-pairs";
  osp.structure = sp.id;
  osp.seed = param_nat(s, "seed", 0);
  osp.factor = param_nat(s, "gap", 0);
  // explicit schedules and class lists have no id to rebuild from; reuse sp
  PairEnumerationOracle E =
      structure_ids().count(sp.id) && sp.id != "schedule" && sp.id != "classes"
          ? pair_oracle_from(osp, budget)
          : PairEnumerationOracle("scenario pairs", budget, class_pairs_below(S, budget));

  S1Extraction x = extract_s1(E, E.budget(), param_nat(s, "stages", 0));
  S1Validation v = validate_s1(x.table);
  add_check(r, "extracted table has monotone rows and strictly increasing limits",
            v.ok, v.ok ? std::to_string(x.table.stages) + " stages" : v.detail);

  std::vector<Nat> realized = realized_class_sizes(E, x);
  bool sizes_match = true;
  for (std::size_t i = 0; i < v.stable_limits.size() && i < realized.size(); ++i)
    sizes_match = sizes_match && realized[i] == v.stable_limits[i];
  add_check(r, "anchored classes realize the settled limits exactly", sizes_match,
            std::to_string(v.stable_limits.size()) + " settled rows");

  // Regrow a structure from the table alone and read its character back; the
  // final column of the table must reappear as the realized class sizes.
  CharacterApprox K;
  K.budget = budget;
  K.guess = [](Nat, Nat, Nat) { return false; };
  BuiltStructure grown = build_from_character(K, x.table, effective_horizon(s));
  std::map<Nat, Nat> want;
  if (x.table.stages) {
    const Nat last = x.table.stages - 1;
    for (Nat i = 0; i < x.table.stages; ++i) ++want[x.table.f(i, last)];
  }
  Character got = character_of(grown.structure, effective_horizon(s));
  bool same = got.counts == want && got.truncated_classes == 0;
  add_check(r, "regrown structure realizes the final table column as its character",
            same, std::to_string(grown.classes.size()) + " classes");

  add_cert(r, "stages", std::to_string(x.last_stage()));
  add_cert(r, "checkpoints", join_nats(x.checkpoints));
  if (!x.anchors.empty()) add_cert(r, "anchors", join_nats(x.final_anchors()));
  add_cert(r, "settled-limits", join_nats(v.stable_limits));
  return r;
}

Report run_square_density(const Scenario& s) {
  Report r;
  const Nat h = effective_horizon(s);
  for (std::size_t i = 0; i < s.oracles.size(); ++i) {
    EnumerationOracle A = enum_oracle_from(s.oracles[i], effective_budget(s));
    auto member = [&A](Nat x) { return A.contains_at(x, A.budget()); };
    auto sweep = square_density_sweep(member, h);
    bool ok = true;
    for (const auto& [d, d2] : sweep) ok = ok && d2 == d * d;
    add_check(r, oracle_label(s.oracles[i], i) +
                     ": product density is exactly the square at every prefix",
              ok, std::to_string(sweep.size()) + " prefixes");
  }
  return r;
}

Report run_extract_dense(const Scenario& s) {
  Report r;
  const Nat budget = effective_budget(s);
  for (std::size_t i = 0; i < s.oracles.size(); ++i) {
    EnumerationOracle A = enum_oracle_from(s.oracles[i], budget);
    DenseSubset B = extract_dense_subset(A, A.budget());
    const auto& crt = B.certificate;
    bool bounds = !crt.segments.empty();
    for (const auto& seg : crt.segments) bounds = bounds && seg.bound_met;
    add_check(r, oracle_label(s.oracles[i], i) + ": every segment meets its bound",
              bounds, std::to_string(crt.segments.size()) + " segments");
    bool subset = true;
    Nat members = 0;
    for (Nat v = 0; v < crt.coverage; ++v) {
      if (!B.member[v]) continue;
      ++members;
      subset = subset && A.contains_at(v, A.budget());
    }
    add_check(r, oracle_label(s.oracles[i], i) + ": extracted set sits inside the oracle",
              subset, std::to_string(members) + " members below " +
                          std::to_string(crt.coverage));
    add_cert(r, "coverage-" + std::to_string(i), std::to_string(crt.coverage));
    if (i == 0) add_profile(r, "extracted", B.member);
  }
  return r;
}

Report run_diagonal_complement(const Scenario& s) {
  Report r;
  const Nat h = effective_horizon(s);
  OracleRegistry<EnumerationOracle> reg;
  for (const auto& sp : s.oracles) reg.add(enum_oracle_from(sp, effective_budget(s)));
  DiagonalComplement dc(reg);

  bool dens_ok = true;
  Nat points = 0;
  for (Nat i = 1; (Nat(1) << i) <= h; ++i) {
    const Nat side = Nat(1) << i;
    const Nat count = dc.count_in_square(side);
    const Rat bound = Rat::ratio(side - std::min(side, i), side);
    dens_ok = dens_ok && Rat::ratio(count, side * side) >= bound * bound;
    ++points;
  }
  add_check(r, "diagonal square density clears its bound at every dyadic side",
            dens_ok, std::to_string(points) + " sides");

  auto ws = dc.witnesses(h);
  Nat found = 0;
  for (const auto& w : ws)
    if (w.found) ++found;
  add_check(r, "each productive oracle yields a pair outside the complement",
            found == ws.size(),
            std::to_string(found) + " of " + std::to_string(ws.size()));
  for (const auto& w : ws)
    if (w.found)
      add_cert(r, "witness-" + std::to_string(w.oracle),
               std::to_string(w.a) + "," + std::to_string(w.b));
  return r;
}

Report run_build_12(const Scenario& s) {
  Report r;
  if (s.structures.empty() || s.structures[0].id != "schedule")
    throw ValidationError("build-12: needs a schedule structure");
  DyadicSchedule sched;
  sched.q = s.structures[0].schedule;
  sched.limit = sched.q.empty() ? Rat(1, 2) : sched.q.back();
  Build12 b = build_12_density_q(sched);

  bool exact = true;
  Nat verified = 0;
  const Nat recount_cap = 65536;
  for (std::size_t n = 0; n < b.checkpoints.size(); ++n) {
    const Nat sn = b.checkpoints[n];
    const Rat qn = sched.q[n];
    if (Rat::ratio(b.type1_counts[n], sn) != qn) exact = false;
    if (sn > recount_cap) continue;
    Nat singles = 0;
    for (Nat x = 0; x < sn; ++x)
      if (b.E.exact_class(x)->size() == 1) ++singles;
    if (singles != b.type1_counts[n]) exact = false;
    ++verified;
  }
  add_check(r, "type-one count equals the scheduled share exactly at every checkpoint",
            exact, std::to_string(verified) + " of " +
                       std::to_string(b.checkpoints.size()) + " recounted");

  const Nat eq_h = std::min<Nat>(effective_horizon(s), 1000);
  EquivalenceCheck eq = verify_equivalence(b.E, eq_h);
  add_check(r, "built relation is an equivalence below the check horizon", eq.ok,
            eq.ok ? std::to_string(eq_h) + " elements" : eq.detail);

  add_cert(r, "checkpoints", join_nats(b.checkpoints));
  add_cert(r, "type1-counts", join_nats(b.type1_counts));
  const Nat pts = std::min<Nat>(effective_horizon(s), b.checkpoints.back());
  add_profile(r, "singletons",
              [&b](Nat x) { return b.E.exact_class(x)->size() == 1; }, pts);
  return r;
}

Report run_staged_subrelation(const Scenario& s) {
  Report r;
  if (s.structures.empty())
    throw ValidationError("staged-subrelation: needs an input structure");
  EqStructure A = make_structure(s.structures[0]);
  std::vector<Rat> qs = param_rat_list(s, "q", {Rat(1, 2)});
  auto qf = [qs](Nat i) { return qs[std::min<std::size_t>(i, qs.size() - 1)]; };
  const Nat budget = effective_budget(s);
  StagedSubrelation st = staged_subrelation(A, qf, budget, param_nat(s, "stages", 0));

  const Nat sub_h = std::min<Nat>(st.frontier, effective_horizon(s));
  bool sub = true;
  Nat pairs = 0;
  for (Nat x = 0; x < sub_h && sub; ++x) {
    auto cls = st.B.exact_class(x);
    if (!cls) continue;
    for (Nat y : *cls) {
      if (y == x || y >= sub_h) continue;
      ++pairs;
      sub = sub && A.related(x, y);
    }
  }
  add_check(r, "declared relation is a subrelation of the input below the frontier",
            sub, pass_range(pairs));

  bool div_ok = true;
  for (const auto& d : st.divergence) div_ok = div_ok && d.ok;
  add_check(r, "every divergence certificate clears its bound", div_ok,
            std::to_string(st.divergence.size()) + " certificates");

  bool append_only = true;
  std::set<Nat> seen;
  Nat last_stage = 0;
  for (const auto& d : st.log) {
    append_only = append_only && d.stage >= last_stage && !seen.count(d.element);
    last_stage = d.stage;
    seen.insert(d.element);
  }
  add_check(r, "singleton log is append-only with one decision per element",
            append_only, std::to_string(st.log.size()) + " decisions");

  add_cert(r, "frontier", std::to_string(st.frontier));
  add_cert(r, "stage-pairs", std::to_string(st.pairs.size()));
  add_cert(r, "late-pair-singletons", join_nats(st.b1_minus_a1));
  add_profile(r, "declared-singletons",
              [&st](Nat x) {
                auto b = st.b1(x);
                return b.has_value() && *b;
              },
              st.frontier);
  return r;
}

Report run_interleaved(const Scenario& s) {
  Report r;
  if (s.oracles.size() != 4)
    throw ValidationError("interleaved-bijection: needs four set generators");
  const Nat budget = effective_budget(s);
  std::vector<std::vector<Nat>> sets;
  for (const auto& sp : s.oracles) {
    EnumerationOracle o = enum_oracle_from(sp, budget);
    sets.push_back(o.snapshot(o.budget()));
  }
  // the routed sets keep enumeration order
  for (int i : {2, 3}) {
    EnumerationOracle o = enum_oracle_from(s.oracles[i], budget);
    sets[i].clear();
    for (const auto& e : o.entries()) sets[i].push_back(e.second);
  }
  InterleavedBijection ib =
      interleaved_bijection(sets[0], sets[1], sets[2], sets[3], effective_horizon(s));

  bool bounds_ok = !ib.bounds.empty();
  for (const auto& b : ib.bounds) bounds_ok = bounds_ok && b.ok;
  add_check(r, "both counting bounds hold at every prefix below the horizon",
            bounds_ok, std::to_string(ib.bounds.size()) + " prefixes");

  if (sets[2].empty() && sets[3].empty()) {
    bool order = true;
    for (Nat i = 0; i < ib.matched && i < sets[0].size() && i < sets[1].size(); ++i) {
      auto img = ib.f(sets[0][i]);
      order = order && img && *img == sets[1][i];
    }
    add_check(r, "empty routed sets reduce the map to the order isomorphism", order,
              std::to_string(ib.matched) + " matched");
  }
  add_cert(r, "matched", std::to_string(ib.matched));
  for (const auto& w : ib.warnings) r.warnings.push_back(w);
  return r;
}

Report run_generic_iso_char2(const Scenario& s) {
  Report r;
  StructureSpec sp =
      s.structures.empty() ? named_structure("dense-pairs") : s.structures[0];
  EqStructure A = make_structure(sp);
  const Nat h = effective_horizon(s);

  PairEnumerationOracle pairs = [&] {
    if (!s.oracles.empty()) return pair_oracle_from(s.oracles[0], effective_budget(s));
    OracleSpec osp;
    osp.gen = "structure-pairs";
    osp.structure = sp.id;
    return pair_oracle_from(osp, effective_budget(s));
  }();

  PartialIsoWitness w = generic_iso_char2(A, pairs, h, s.tolerance);
  WitnessCheck wc = verify_partial_iso(w, h);
  add_check(r, "pair table is injective and preserves the relation", wc.ok,
            wc.ok ? pass_range(wc.pairs_checked) : wc.detail);

  Rat floor = Rat(1) - s.tolerance;
  bool dense = !w.domain_profile.values.empty() &&
               w.domain_profile.values.back() >= floor;
  add_check(r, "domain density at the horizon within tolerance of one", dense,
            w.domain_profile.values.empty() ? "empty"
                                            : w.domain_profile.values.back().str());

  PartialIsoWitness inv = invert_partial_iso(w, h);
  PartialIsoWitness merged = merge_partial_iso(w, inv, h);
  WitnessCheck mc = verify_partial_iso(merged, h);
  add_check(r, "merge with the inverse still verifies", mc.ok,
            mc.ok ? pass_range(mc.pairs_checked) : mc.detail);

  add_cert(r, "table-size", std::to_string(w.table.size()));
  for (const auto& warn : w.warnings) r.warnings.push_back(warn);
  add_profile(r, "domain",
              [&w](Nat x) {
                return std::binary_search(w.domain.begin(), w.domain.end(), x);
              },
              h);
  return r;
}

Report run_coarse_iso_char1(const Scenario& s) {
  Report r;
  if (s.structures.size() < 2)
    throw ValidationError("coarse-iso-char1: needs two structures");
  EqStructure A = make_structure(s.structures[0]);
  EqStructure B = make_structure(s.structures[1]);
  const Nat h = effective_horizon(s);
  WeakCoarseWitness w = coarse_iso_char1(A, B, h, s.tolerance);

  const Nat check_h = std::min<Nat>(h, 1200);
  bool agree = true;
  Nat pairs = 0;
  for (Nat x = 0; x < check_h && agree; ++x) {
    if (!w.C[x]) continue;
    for (Nat y = x + 1; y < check_h; ++y) {
      if (!w.C[y]) continue;
      ++pairs;
      if (A.related(x, y) != B.related(w.theta(x), w.theta(y))) {
        agree = false;
        break;
      }
    }
  }
  add_check(r, "identity matches the relations on the agreement set", agree,
            pass_range(pairs));

  Rat floor = Rat(1) - s.tolerance;
  bool dense = !w.c_profile.values.empty() && w.c_profile.values.back() >= floor;
  add_check(r, "agreement set density at the horizon within tolerance of one",
            dense, w.c_profile.values.empty() ? "empty"
                                              : w.c_profile.values.back().str());

  add_cert(r, "unmatched", std::to_string(w.unmatched));
  for (const auto& warn : w.warnings) r.warnings.push_back(warn);
  add_profile(r, "agreement", w.C);
  return r;
}

Report run_sparse_simple(const Scenario& s) {
  Report r;
  const Nat budget = effective_budget(s);
  OracleRegistry<EnumerationOracle> reg;
  for (const auto& sp : s.oracles) reg.add(enum_oracle_from(sp, budget));
  SparseSimple ss = sparse_simple_set(reg, budget);

  bool dens_ok = !ss.density.empty();
  for (const auto& c : ss.density) dens_ok = dens_ok && c.ok;
  add_check(r, "at most k elements below two to the k at every dyadic checkpoint",
            dens_ok, std::to_string(ss.density.size()) + " checkpoints");

  bool above = true;
  Nat found = 0;
  for (const auto& c : ss.hits) {
    if (!c.element) continue;
    ++found;
    above = above && *c.element > (Nat(1) << c.e);
  }
  add_check(r, "every chosen element exceeds its requirement threshold", above,
            std::to_string(found) + " of " + std::to_string(ss.hits.size()));
  for (const auto& c : ss.density)
    add_cert(r, "below-2^" + std::to_string(c.k), std::to_string(c.count));
  return r;
}

Report run_faithful_coarse(const Scenario& s) {
  Report r;
  const std::string kset = param_str(s, "k-set", "powers-of-two");
  std::function<bool(Nat)> K;
  std::vector<Nat> sizes = param_nat_list(s, "sizes");
  if (kset == "powers-of-two")
    K = [](Nat k) { return k && (k & (k - 1)) == 0; };
  else if (kset == "evens")
    K = [](Nat k) { return k % 2 == 0; };
  else if (kset == "list") {
    std::set<Nat> set(sizes.begin(), sizes.end());
    K = [set](Nat k) { return set.count(k) > 0; };
  } else {
    throw ValidationError("metadata.k-set: unknown set '" + kset + "'");
  }

  const Nat h = effective_horizon(s);
  FaithfulCoarse fc = build_faithful_coarse(K, h);
  add_check(r, "relation matches the canonical one exactly on the kept set",
            fc.agreement_exact, "exhaustive below the horizon");
  bool deficits = !fc.a_k.checkpoints.empty();
  for (const auto& c : fc.a_k.checkpoints) deficits = deficits && c.ok;
  add_check(r, "deficit at every triangular checkpoint within its bound", deficits,
            std::to_string(fc.a_k.checkpoints.size()) + " checkpoints");
  add_check(r, "kept set is faithful for the built relation", fc.faithful_R.faithful,
            fc.faithful_R.faithful ? "no counterexample" : "counterexample found");
  add_check(r, "kept set is faithful for the canonical relation",
            fc.faithful_E.faithful,
            fc.faithful_E.faithful ? "no counterexample" : "counterexample found");
  bool twice = true;
  for (const auto& [size, count] : fc.character.counts) {
    (void)size;
    twice = twice && count <= 2;
  }
  add_check(r, "no size carries more than two classes", twice,
            std::to_string(fc.character.counts.size()) + " sizes");

  add_cert(r, "kept-elements", std::to_string(fc.a_k.elements.size()));
  add_cert(r, "carved-classes", std::to_string(fc.carved_classes));
  add_profile(r, "kept", fc.a_k.member, h);
  return r;
}

Report run_diagonal_dense_k(const Scenario& s) {
  Report r;
  const Nat h = effective_horizon(s);
  const Nat budget = effective_budget(s);
  OracleRegistry<LimitApproxOracle> reg;
  std::vector<EnumerationOracle> backing;
  for (const auto& sp : s.oracles) backing.push_back(enum_oracle_from(sp, budget));
  for (const auto& o : backing) {
    reg.add(LimitApproxOracle(o.label(), budget, [&o](Nat x, Nat stage) {
      return o.contains_at(x, std::min(stage, o.budget()));
    }));
  }
  DiagonalDenseK dd = diagonal_dense_K(reg, h);

  bool cps = !dd.checkpoints.empty();
  for (const auto& c : dd.checkpoints) cps = cps && c.ok;
  add_check(r, "kept-size density clears its diagonal bound at every checkpoint",
            cps, std::to_string(dd.checkpoints.size()) + " checkpoints");

  bool affirmed = true;
  Nat removed = 0;
  for (std::size_t e = 0; e < dd.omitted.size(); ++e) {
    if (!dd.omitted[e]) continue;
    ++removed;
    affirmed = affirmed && backing[e].contains_at(*dd.omitted[e], budget);
  }
  add_check(r, "every omitted value is affirmed by its oracle", affirmed,
            std::to_string(removed) + " removals");

  std::vector<Nat> omitted;
  for (const auto& o : dd.omitted)
    if (o) omitted.push_back(*o);
  add_cert(r, "omitted", join_nats(omitted));
  add_profile(r, "kept-sizes", dd.member, h);
  return r;
}

Report run_character(const Scenario& s) {
  Report r;
  if (s.structures.empty())
    throw ValidationError("character: needs an input structure");
  EqStructure S = make_structure(s.structures[0]);
  Character c = character_of(S, effective_horizon(s));
  for (const auto& [size, count] : c.counts)
    add_cert(r, "size-" + std::to_string(size), std::to_string(count));
  add_cert(r, "truncated-classes", std::to_string(c.truncated_classes));
  return r;
}

using Runner = Report (*)(const Scenario&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> reg = {
      {"prop1", run_prop1},
      {"thm4", run_thm4},
      {"thm2-restrict", run_thm2_restrict},
      {"anti-coarse-k", run_anti_coarse_k},
      {"weak-coarse-iso", run_weak_coarse_iso},
      {"thm12-demo", run_thm12_demo},
      {"ex1-demo", run_ex1_demo},
      {"s1-roundtrip", run_s1_roundtrip},
      {"square-density", run_square_density},
      {"extract-dense", run_extract_dense},
      {"diagonal-complement", run_diagonal_complement},
      {"build-12", run_build_12},
      {"staged-subrelation", run_staged_subrelation},
      {"interleaved-bijection", run_interleaved},
      {"generic-iso-char2", run_generic_iso_char2},
      {"coarse-iso-char1", run_coarse_iso_char1},
      {"sparse-simple", run_sparse_simple},
      {"faithful-coarse", run_faithful_coarse},
      {"diagonal-dense-k", run_diagonal_dense_k},
      {"character", run_character},
  };
  return reg;
}

}  // namespace

std::vector<std::string> known_constructions() {
  std::vector<std::string> out;
  for (const auto& [id, fn] : runners()) {
    (void)fn;
    out.push_back(id);
  }
  return out;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> problems;
  if (!is_slug(s.name))
    problems.push_back("name: required, letters/digits/._- only (got '" + s.name +
                       "')");
  const bool known = runners().count(s.construction) > 0;
  if (!known)
    problems.push_back("construction: unknown id '" + s.construction + "'");
  if (s.horizon > kHorizonCap)
    problems.push_back("horizon: " + std::to_string(s.horizon) + " exceeds cap " +
                       std::to_string(kHorizonCap));
  if (s.budget > kBudgetCap)
    problems.push_back("budget: " + std::to_string(s.budget) + " exceeds cap " +
                       std::to_string(kBudgetCap));
  if (!(s.tolerance > Rat(0)) || !(s.tolerance < Rat(1)))
    problems.push_back("tolerance: must lie strictly between 0 and 1, got " +
                       s.tolerance.str());

  for (std::size_t i = 0; i < s.oracles.size(); ++i) {
    const auto& o = s.oracles[i];
    const std::string at = "oracles[" + std::to_string(i) + "]";
    if (o.gen == "structure-pairs") {
      if (!structure_ids().count(o.structure) || o.structure == "schedule" ||
          o.structure == "classes")
        problems.push_back(at + ": structure-pairs needs a named structure id, got '" +
                           o.structure + "'");
    } else if (!enum_generators().count(o.gen)) {
      problems.push_back(at + ": unknown generator '" + o.gen + "'");
    }
    if (o.gen == "delayed" && o.factor == 0)
      problems.push_back(at + ": delayed needs factor >= 1");
    if (o.gen == "values" && o.values.empty())
      problems.push_back(at + ": values needs a nonempty list");
    if (o.budget > kBudgetCap)
      problems.push_back(at + ": budget exceeds cap");
  }

  for (std::size_t i = 0; i < s.structures.size(); ++i) {
    const auto& sp = s.structures[i];
    const std::string at = "structures[" + std::to_string(i) + "]";
    if (!structure_ids().count(sp.id)) {
      problems.push_back(at + ": unknown structure id '" + sp.id + "'");
      continue;
    }
    if (sp.id == "blocks" && sp.k == 0)
      problems.push_back(at + ": blocks needs k >= 1");
    if (sp.id == "schedule") {
      if (sp.schedule.empty())
        problems.push_back(at + ": schedule needs a nonempty q list");
      for (const Rat& q : sp.schedule)
        if (!(q > Rat(0)) || !(q < Rat(1)))
          problems.push_back(at + ": schedule entry " + q.str() +
                             " must lie strictly between 0 and 1");
    }
    if (sp.id == "classes" && sp.classes.empty())
      problems.push_back(at + ": classes needs a nonempty list");
  }

  if (known) {
    const std::string& c = s.construction;
    auto need_structures = [&](std::size_t n) {
      if (s.structures.size() < n)
        problems.push_back(c + ": needs at least " + std::to_string(n) +
                           " structure(s), got " + std::to_string(s.structures.size()));
    };
    auto need_oracles = [&](std::size_t n) {
      if (s.oracles.size() < n)
        problems.push_back(c + ": needs at least " + std::to_string(n) +
                           " oracle(s), got " + std::to_string(s.oracles.size()));
    };
    if (c == "prop1" || c == "thm4" || c == "thm2-restrict") {
      need_structures(1);
      const std::string tag = param_str(s, "case", "");
      if (tag != "infinite-class" && tag != "repeated-size" && tag != "s1-subset")
        problems.push_back(c + ": metadata.case must name the structural case");
      if (tag == "repeated-size" && param_nat(s, "size", 0) == 0)
        problems.push_back(c + ": repeated-size needs metadata.size >= 1");
    } else if (c == "anti-coarse-k") {
      need_oracles(1);
      for (std::size_t i = 0; i < s.oracles.size(); ++i)
        if (s.oracles[i].gen != "structure-pairs")
          problems.push_back("oracles[" + std::to_string(i) +
                             "]: anti-coarse-k consumes pair enumerations");
    } else if (c == "weak-coarse-iso") {
      if (s.structures.size() != 2)
        problems.push_back(c + ": needs exactly two schedule structures");
      for (const auto& sp : s.structures)
        if (sp.id != "schedule")
          problems.push_back(c + ": both structures must be schedules");
    } else if (c == "thm12-demo" || c == "sparse-simple" ||
               c == "diagonal-complement" || c == "extract-dense" ||
               c == "square-density" || c == "diagonal-dense-k") {
      need_oracles(1);
      for (std::size_t i = 0; i < s.oracles.size(); ++i)
        if (s.oracles[i].gen == "structure-pairs")
          problems.push_back("oracles[" + std::to_string(i) + "]: " + c +
                             " consumes plain set enumerations");
    } else if (c == "interleaved-bijection") {
      if (s.oracles.size() != 4)
        problems.push_back(c + ": needs exactly four set generators (domain, "
                           "codomain, and the two routed sets)");
    } else if (c == "build-12") {
      need_structures(1);
      if (!s.structures.empty() && s.structures[0].id != "schedule")
        problems.push_back(c + ": the input must be a schedule structure");
    } else if (c == "staged-subrelation" || c == "character") {
      need_structures(1);
    } else if (c == "coarse-iso-char1") {
      need_structures(2);
    }
  }
  return problems;
}

bool Report::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckLine& c) { return c.pass; });
}

Report run_scenario(const Scenario& s) {
  auto problems = validate_scenario(s);
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) {
      if (!joined.empty()) joined += "; ";
      joined += p;
    }
    throw ValidationError(joined);
  }
  const auto start = std::chrono::steady_clock::now();
  Report r = runners().at(s.construction)(s);
  r.scenario = s.name;
  r.construction = s.construction;
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return r;
}

std::string report_json(const Report& r, ReportFormat fmt) {
  json j;
  j["scenario"] = r.scenario;
  j["construction"] = r.construction;
  j["all_pass"] = r.all_pass();
  j["invariants"] = json::array();
  for (const auto& c : r.checks) {
    json line;
    line["invariant"] = c.invariant;
    line["pass"] = c.pass;
    line["measured"] = c.measured;
    j["invariants"].push_back(line);
  }
  json certs = json::object();
  for (const auto& [k, v] : r.certificates) certs[k] = v;
  j["certificates"] = certs;
  j["warnings"] = r.warnings;
  if (fmt == ReportFormat::Json) {
    json profiles = json::object();
    for (const auto& p : r.profiles) {
      json rows = json::array();
      for (const auto& [n, rho] : p.rows) rows.push_back(json::array({n, rho}));
      profiles[p.name] = rows;
    }
    j["profiles"] = profiles;
  } else {
    json names = json::array();
    for (const auto& p : r.profiles)
      names.push_back(r.scenario + "." + p.name + ".csv");
    j["profiles"] = names;
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     ReportFormat fmt) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  const fs::path summary = fs::path(out_dir) / (r.scenario + ".report.json");
  {
    std::ofstream out(summary, std::ios::binary);
    if (!out) throw ScenarioError("cannot write " + summary.string());
    out << report_json(r, fmt);
  }
  written.push_back(summary.string());

  if (fmt == ReportFormat::CsvBundle) {
    for (const auto& p : r.profiles) {
      const fs::path csv = fs::path(out_dir) / (r.scenario + "." + p.name + ".csv");
      std::ofstream out(csv, std::ios::binary);
      if (!out) throw ScenarioError("cannot write " + csv.string());
      out << "n,rho_n\n";
      for (const auto& [n, rho] : p.rows) out << n << "," << rho << "\n";
      written.push_back(csv.string());
    }
  }
  return written;
}

}  // namespace eqd
