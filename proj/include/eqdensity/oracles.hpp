#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eqdensity/types.hpp"

namespace eqd {

// Stage-indexed enumeration of a c.e. set, materialized up to a budget.
// The entry plan (stage, value) is the single source of truth, so snapshots
// are monotone and deterministic by construction. Stage 0 is always empty
// unless the plan says otherwise.
class EnumerationOracle {
 public:
  EnumerationOracle() = default;
  EnumerationOracle(std::string label, Nat budget,
                    std::vector<std::pair<Nat, Nat>> entry_plan);

  const std::string& label() const { return label_; }
  Nat budget() const { return budget_; }

  // Elements enumerated by the given stage, sorted by value.
  std::vector<Nat> snapshot(Nat stage) const;
  bool contains_at(Nat x, Nat stage) const;
  std::optional<Nat> entry_stage(Nat x) const;
  Nat count_at(Nat stage) const;

  // Enumeration order: ascending (stage, value).
  const std::vector<std::pair<Nat, Nat>>& entries() const { return plan_; }

 private:
  void check_stage(Nat stage) const;

  std::string label_;
  Nat budget_ = 0;
  std::vector<std::pair<Nat, Nat>> plan_;  // (entry stage, value)
  std::unordered_map<Nat, Nat> entry_of_;
};

// Same discipline for pairs. Pairs are stored normalized (x < y); reflexive
// pairs are dropped at construction since they add nothing to a closure.
class PairEnumerationOracle {
 public:
  struct Entry {
    Nat stage;
    Nat x;
    Nat y;
  };

  PairEnumerationOracle() = default;
  PairEnumerationOracle(std::string label, Nat budget,
                        std::vector<Entry> entry_plan);

  const std::string& label() const { return label_; }
  Nat budget() const { return budget_; }

  std::vector<std::pair<Nat, Nat>> snapshot(Nat stage) const;
  const std::vector<Entry>& entries() const { return plan_; }

 private:
  void check_stage(Nat stage) const;

  std::string label_;
  Nat budget_ = 0;
  std::vector<Entry> plan_;  // ascending (stage, x, y)
};

// Limit-stable yes/no approximation, the desk-scale stand-in for a set given
// by a double limit. Only its value at the budget is treated as operative.
class LimitApproxOracle {
 public:
  LimitApproxOracle() = default;
  LimitApproxOracle(std::string label, Nat budget,
                    std::function<bool(Nat, Nat)> approx)
      : label_(std::move(label)), budget_(budget), approx_(std::move(approx)) {}

  const std::string& label() const { return label_; }
  Nat budget() const { return budget_; }

  bool approx(Nat x, Nat stage) const {
    if (stage > budget_)
      throw BudgetExceeded(label_ + ": stage " + std::to_string(stage) +
                           " past budget " + std::to_string(budget_));
    return approx_(x, stage);
  }
  bool at_budget(Nat x) const { return approx_(x, budget_); }

 private:
  std::string label_;
  Nat budget_ = 0;
  std::function<bool(Nat, Nat)> approx_;
};

// Ordered list of oracles standing in for an effective listing W_0, W_1, ...
// Indexing conventions of the diagonal constructions live with those
// constructions, not here.
template <class OracleT>
class OracleRegistry {
 public:
  std::size_t add(OracleT oracle) {
    items_.push_back(std::move(oracle));
    return items_.size() - 1;
  }
  std::size_t size() const { return items_.size(); }
  const OracleT& at(std::size_t i) const { return items_.at(i); }
  const std::vector<OracleT>& items() const { return items_; }

 private:
  std::vector<OracleT> items_;
};

// Equivalence classes generated by the pairs enumerated up to a stage,
// restricted to {0, ..., horizon-1}. Unmentioned elements are singletons.
// Pairs touching values at or past the horizon are counted, not applied.
struct Partition {
  std::vector<Nat> class_id;               // indexed by element
  std::vector<std::vector<Nat>> classes;   // sorted members, ordered by min
  Nat dropped_pairs = 0;

  Nat size_of(Nat x) const { return classes[class_id[x]].size(); }
  bool same(Nat x, Nat y) const { return class_id[x] == class_id[y]; }
};

Partition ce_closure(const PairEnumerationOracle& pairs, Nat stage,
                     Nat horizon);

namespace gen {

// One new element per stage: steady enumerations of simple decidable sets.
EnumerationOracle identity(Nat budget);
EnumerationOracle evens(Nat budget);
EnumerationOracle squares(Nat budget);
// Identity slowed by a factor: the n-th element arrives at stage factor*(n+1).
EnumerationOracle delayed(Nat factor, Nat budget);
// Factorial blocks [(2k-1)!, (2k)!) enumerated promptly (upper density one,
// lower density zero). Element n arrives at stage n+1.
EnumerationOracle block_bursty(Nat budget);
// Prompt enumeration of an explicit decidable set: the n-th member (by value)
// arrives at stage n+1. Membership is scanned on [0, limit).
EnumerationOracle from_predicate(std::string label,
                                 const std::function<bool(Nat)>& pred,
                                 Nat limit, Nat budget);
EnumerationOracle from_values(std::string label, std::vector<Nat> values,
                              Nat budget);

}  // namespace gen

namespace detail {

// Deterministic 64-bit mixer, used wherever a fixed shuffle is needed.
// Standard-library distributions are implementation-defined, this is not.
struct SplitMix64 {
  explicit SplitMix64(Nat seed) : state(seed) {}
  Nat next() {
    state += 0x9e3779b97f4a7c15ULL;
    Nat z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  Nat state;
};

template <class T>
void deterministic_shuffle(std::vector<T>& v, Nat seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.next() % i]);
}

}  // namespace detail

}  // namespace eqd
