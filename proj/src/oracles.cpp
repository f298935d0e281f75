#include "eqdensity/oracles.hpp"

#include <algorithm>

namespace eqd {

EnumerationOracle::EnumerationOracle(std::string label, Nat budget,
                                     std::vector<std::pair<Nat, Nat>> plan)
    : label_(std::move(label)), budget_(budget), plan_(std::move(plan)) {
  std::sort(plan_.begin(), plan_.end());
  entry_of_.reserve(plan_.size());
  for (const auto& [stage, value] : plan_) {
    auto [it, fresh] = entry_of_.emplace(value, stage);
    (void)it;
    if (!fresh)
      throw Error(label_ + ": value " + std::to_string(value) +
                  " enumerated twice");
  }
}

void EnumerationOracle::check_stage(Nat stage) const {
  if (stage > budget_)
    throw BudgetExceeded(label_ + ": stage " + std::to_string(stage) +
                         " past budget " + std::to_string(budget_));
}

std::vector<Nat> EnumerationOracle::snapshot(Nat stage) const {
  check_stage(stage);
  std::vector<Nat> out;
  for (const auto& [entry, value] : plan_) {
    if (entry > stage) break;
    out.push_back(value);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool EnumerationOracle::contains_at(Nat x, Nat stage) const {
  check_stage(stage);
  auto it = entry_of_.find(x);
  return it != entry_of_.end() && it->second <= stage;
}

std::optional<Nat> EnumerationOracle::entry_stage(Nat x) const {
  auto it = entry_of_.find(x);
  if (it == entry_of_.end()) return std::nullopt;
  return it->second;
}

Nat EnumerationOracle::count_at(Nat stage) const {
  check_stage(stage);
  auto it = std::upper_bound(
      plan_.begin(), plan_.end(), stage,
      [](Nat s, const std::pair<Nat, Nat>& e) { return s < e.first; });
  return static_cast<Nat>(it - plan_.begin());
}

PairEnumerationOracle::PairEnumerationOracle(std::string label, Nat budget,
                                             std::vector<Entry> plan)
    : label_(std::move(label)), budget_(budget) {
  plan_.reserve(plan.size());
  for (Entry e : plan) {
    if (e.x == e.y) continue;
    if (e.x > e.y) std::swap(e.x, e.y);
    plan_.push_back(e);
  }
  std::sort(plan_.begin(), plan_.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.stage, a.x, a.y) < std::tie(b.stage, b.x, b.y);
  });
}

void PairEnumerationOracle::check_stage(Nat stage) const {
  if (stage > budget_)
    throw BudgetExceeded(label_ + ": stage " + std::to_string(stage) +
                         " past budget " + std::to_string(budget_));
}

std::vector<std::pair<Nat, Nat>> PairEnumerationOracle::snapshot(
    Nat stage) const {
  check_stage(stage);
  std::vector<std::pair<Nat, Nat>> out;
  for (const Entry& e : plan_) {
    if (e.stage > stage) break;
    out.emplace_back(e.x, e.y);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Plain union-find, path compression plus union by size.
struct DisjointSet {
  explicit DisjointSet(Nat n) : parent(n), rank(n, 1) {
    for (Nat i = 0; i < n; ++i) parent[i] = i;
  }
  Nat find(Nat x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(Nat a, Nat b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    rank[a] += rank[b];
  }
  std::vector<Nat> parent;
  std::vector<Nat> rank;
};

}  // namespace

Partition ce_closure(const PairEnumerationOracle& pairs, Nat stage,
                     Nat horizon) {
  Partition part;
  DisjointSet dsu(horizon);
  for (const auto& e : pairs.entries()) {
    if (e.stage > stage) break;
    if (e.y >= horizon) {
      ++part.dropped_pairs;
      continue;
    }
    dsu.unite(e.x, e.y);
  }
  part.class_id.assign(horizon, 0);
  std::unordered_map<Nat, Nat> root_to_class;
  root_to_class.reserve(horizon);
  for (Nat x = 0; x < horizon; ++x) {
    Nat r = dsu.find(x);
    auto it = root_to_class.find(r);
    if (it == root_to_class.end()) {
      it = root_to_class.emplace(r, part.classes.size()).first;
      part.classes.emplace_back();
    }
    part.class_id[x] = it->second;
    part.classes[it->second].push_back(x);
  }
  return part;
}

namespace gen {

EnumerationOracle identity(Nat budget) {
  std::vector<std::pair<Nat, Nat>> plan;
  for (Nat n = 0; n + 1 <= budget; ++n) plan.emplace_back(n + 1, n);
  return EnumerationOracle("identity", budget, std::move(plan));
}

EnumerationOracle evens(Nat budget) {
  std::vector<std::pair<Nat, Nat>> plan;
  for (Nat n = 0; n + 1 <= budget; ++n) plan.emplace_back(n + 1, 2 * n);
  return EnumerationOracle("evens", budget, std::move(plan));
}

EnumerationOracle squares(Nat budget) {
  std::vector<std::pair<Nat, Nat>> plan;
  for (Nat n = 0; n + 1 <= budget; ++n) plan.emplace_back(n + 1, n * n);
  return EnumerationOracle("squares", budget, std::move(plan));
}

EnumerationOracle delayed(Nat factor, Nat budget) {
  if (factor == 0) throw Error("delayed: factor must be positive");
  std::vector<std::pair<Nat, Nat>> plan;
  for (Nat n = 0; factor * (n + 1) <= budget; ++n)
    plan.emplace_back(factor * (n + 1), n);
  return EnumerationOracle("delayed(" + std::to_string(factor) + ")", budget,
                           std::move(plan));
}

EnumerationOracle block_bursty(Nat budget) {
  // Member blocks are [(2k-1)!, (2k)!): {1}, [6,24), [120,720), [5040,40320)...
  std::vector<std::pair<Nat, Nat>> plan;
  Nat f = 1;  // running factorial, f == i! below
  Nat i = 1;
  while (f <= budget) {
    Nat lo = f;            // i! with i odd
    Nat hi = f * (i + 1);  // (i+1)!
    for (Nat n = lo; n < hi && n + 1 <= budget; ++n)
      plan.emplace_back(n + 1, n);
    if (hi > budget) break;
    f = hi * (i + 2);
    i += 2;
  }
  return EnumerationOracle("block-bursty", budget, std::move(plan));
}

EnumerationOracle from_predicate(std::string label,
                                 const std::function<bool(Nat)>& pred,
                                 Nat limit, Nat budget) {
  std::vector<Nat> values;
  for (Nat x = 0; x < limit; ++x)
    if (pred(x)) values.push_back(x);
  return from_values(std::move(label), std::move(values), budget);
}

EnumerationOracle from_values(std::string label, std::vector<Nat> values,
                              Nat budget) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<std::pair<Nat, Nat>> plan;
  for (Nat i = 0; i < values.size() && i + 1 <= budget; ++i)
    plan.emplace_back(i + 1, values[i]);
  return EnumerationOracle(std::move(label), budget, std::move(plan));
}

}  // namespace gen

}  // namespace eqd
