#pragma once

// Stage tables with monotone rows and strictly increasing limits, the staged
// anchor-tuple extraction that produces them from a pair enumeration, and the
// reverse direction: growing a concrete structure out of a table plus a
// stagewise character guess.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqdensity/oracles.hpp"
#include "eqdensity/structures.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

// Triangular table: f(i,s) defined for i <= s < stages. Row i starts at
// column s = i.
struct S1Table {
  Nat stages = 0;
  std::vector<std::vector<Nat>> rows;  // rows[i][s - i] = f(i,s)

  Nat f(Nat i, Nat s) const;
  bool defined(Nat i, Nat s) const { return i < stages && i <= s && s < stages; }

  // Table filled from g over the full triangle.
  static S1Table from_function(const std::function<Nat(Nat, Nat)>& g, Nat stages);

  // CSV rows "i,s,f"; header included. Deterministic.
  std::string to_csv() const;
};

struct S1Validation {
  bool ok = true;
  std::string detail;  // first violation, empty when ok
  // Longest prefix of rows whose value went quiet strictly before the final
  // stage, with the stage each settled at. Rows past the first unsettled row
  // are not reported even if they happen to be constant.
  std::vector<Nat> stable_limits;
  std::vector<Nat> settled_at;
};

// Checks monotonicity along every row, then strict increase across the
// settled prefix of limits. A row that still moved at the last stage has no
// observed limit and simply ends the prefix; that is not a violation.
S1Validation validate_s1(const S1Table& t);

// Stagewise guess at a character: pair (k,n) is affirmed iff guess(k,n,budget)
// holds. Always a finite object: only the listed candidates are ever asked.
struct CharacterApprox {
  std::function<bool(Nat k, Nat n, Nat stage)> guess;
  Nat budget = 0;
  std::vector<std::pair<Nat, Nat>> candidates;

  std::vector<std::pair<Nat, Nat>> affirmed() const;
};

struct S1Extraction {
  S1Table table;
  std::vector<std::vector<Nat>> anchors;  // anchors[s] = a_0^s .. a_s^s
  std::vector<Nat> checkpoints;           // p_s, one per completed stage

  Nat last_stage() const { return checkpoints.empty() ? 0 : checkpoints.size() - 1; }
  const std::vector<Nat>& final_anchors() const { return anchors.back(); }
};

class S1Exhausted : public BudgetExhausted {
 public:
  S1Extraction partial;
  S1Exhausted(std::string what, S1Extraction p)
      : BudgetExhausted(std::move(what)), partial(std::move(p)) {}
};

// Staged anchor search over the pair enumeration E. Each stage s+1 finds the
// least checkpoint p > p_s and the lexicographically least anchor tuple
// b_0..b_{s+1} (b_0 pinned to 0, tuple elements <= p) such that for i <= s
//   f(i,s) <= |{a <= p : a E^p b_i}| < |{a <= p : a E^p b_{i+1}}|,
// then sets f(i,s+1) to the new class counts. Class counts follow the closure
// of all pairs enumerated by stage p, with members counted only up to p.
//
// stages = 0 runs until the checkpoint search first fails within max_stage
// and returns whatever was built. stages > 0 demands that many completed
// stages and throws S1Exhausted (carrying the partial result) if the search
// dies earlier -- the signal that the character looks bounded or the budget
// is too small.
S1Extraction extract_s1(const PairEnumerationOracle& E, Nat max_stage, Nat stages = 0);

// Size of the full class of each final anchor at E's own budget, counting all
// members (not capped at the checkpoint). Index-aligned with the table rows.
std::vector<Nat> realized_class_sizes(const PairEnumerationOracle& E,
                                      const S1Extraction& x);

struct GrowthEvent {
  Nat stage;
  Nat class_id;
  Nat new_size;
};

struct BuiltStructure {
  EqStructure structure;  // universe = exactly the allocated elements
  std::vector<std::vector<Nat>> classes;
  std::vector<GrowthEvent> growth;
  Nat elements_used = 0;
};

// Grows one class per table row, stage by stage, to the row's current value;
// classes never shrink (enforced by validation). Afterwards allocates fresh
// classes so that every affirmed (k,n) of K is met: at least n classes of
// size k, counting the table-grown classes. Elements come from carrier(0),
// carrier(1), ... which must be strictly increasing; identity when absent.
// Throws ValidationError if the table fails validate_s1 or the allocation
// spills past the horizon.
BuiltStructure build_from_character(const CharacterApprox& K, const S1Table& f,
                                    Nat horizon,
                                    const std::function<Nat(Nat)>& carrier = {});

}  // namespace eqd
