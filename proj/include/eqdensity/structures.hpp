#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqdensity/rational.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

// An equivalence structure given by a total decision procedure on pairs.
// members_of, when set, returns the exact finite class of an element; every
// structure this toolkit builds provides it, and horizon-truncation questions
// are answered exactly through it. Structures assembled from opaque
// relations fall back to a bounded scan (see type_sets).
struct EqStructure {
  std::string note;
  std::function<bool(Nat, Nat)> related;
  std::function<bool(Nat)> in_universe;  // null means all of omega
  std::function<std::optional<std::vector<Nat>>(Nat)> members_of;
  std::function<bool(Nat)> declared_infinite;  // scenario metadata

  bool universe(Nat x) const { return !in_universe || in_universe(x); }
  bool infinite_class(Nat x) const {
    return declared_infinite && declared_infinite(x);
  }
  std::optional<std::vector<Nat>> exact_class(Nat x) const {
    if (!members_of) return std::nullopt;
    return members_of(x);
  }
};

// Elements below the horizon grouped by exact class size. Classes that are
// not complete below the horizon (or are declared infinite) land in
// undetermined instead of being assigned a size.
struct TypePartition {
  std::map<Nat, std::vector<Nat>> by_size;
  std::vector<Nat> undetermined;
};

// Complete classes per size, with the truncated classes counted separately
// (their sizes are unknowable at the horizon, not zero).
struct Character {
  std::map<Nat, Nat> counts;
  Nat truncated_classes = 0;
};

struct FaithfulReport {
  bool faithful = true;
  // a in the set, b outside it, related; members below the horizon
  std::optional<std::pair<Nat, Nat>> counterexample;
};

// Every class with a member below the horizon, in order of least member.
struct HorizonClass {
  std::vector<Nat> below;  // members under the horizon, ascending
  bool complete = false;   // the whole class is finite and fully below
};
std::vector<HorizonClass> classes_below(const EqStructure& S, Nat horizon);

TypePartition type_sets(const EqStructure& S, Nat horizon);
Character character_of(const EqStructure& S, Nat horizon);
FaithfulReport is_faithful(const std::function<bool(Nat)>& A,
                           const EqStructure& S, Nat horizon);

// Exhaustive check that the relation restricted to the horizon is an
// equivalence (reflexive on the universe and exactly a partition equality).
struct EquivalenceCheck {
  bool ok = true;
  std::string detail;
};
EquivalenceCheck verify_equivalence(const EqStructure& S, Nat horizon);

// Triangular-block structure with exactly one class of each finite size:
// {0}, {1,2}, {3,4,5}, {6,7,8,9}, ...
EqStructure canonical_all_sizes();

enum class PairLayout {
  DensePairs,   // singletons at the squares, pairs filling the gaps
  SparsePairs,  // pairs {n^2, n^2+1} for n >= 1, singletons elsewhere
};
EqStructure canonical_12(PairLayout layout);

// Elements of canonical_all_sizes lying in classes whose size is in K,
// with the deficit bound 2m/n checked at every triangular checkpoint.
struct DeficitCheckpoint {
  Nat classes = 0;   // first n classes
  Nat prefix = 0;    // n(n+1)/2
  Nat missing = 0;   // sizes among 1..n not in K
  Rat deficit;       // 1 - |A_K ∩ prefix| / prefix
  Rat bound;         // 2m/n
  bool ok = false;
};
struct AKSet {
  std::vector<Nat> elements;  // sorted, below the horizon
  std::function<bool(Nat)> member;
  std::vector<DeficitCheckpoint> checkpoints;
};
AKSet build_A_K(const std::function<bool(Nat)>& K, Nat horizon);

EqStructure restrict_structure(const EqStructure& S,
                               const std::function<bool(Nat)>& Y,
                               std::string note);

// Partner map for structures whose classes have at most two elements below
// the horizon: partner[x] = the other member, or x itself for singletons.
// Fails if some class has three members below the horizon.
std::vector<Nat> partner_map(const EqStructure& S, Nat horizon);

// Structure whose listed classes are exact; everything unmentioned is a
// singleton. The workhorse for explicitly assembled finite-horizon builds.
EqStructure structure_from_classes(std::string note,
                                   const std::vector<std::vector<Nat>>& classes);

}  // namespace eqd
