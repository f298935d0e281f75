#include "eqdensity/s1.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace eqd {

Nat S1Table::f(Nat i, Nat s) const {
  if (!defined(i, s))
    throw ValidationError("S1Table: f(" + std::to_string(i) + "," +
                          std::to_string(s) + ") is outside the triangle");
  return rows[i][s - i];
}

S1Table S1Table::from_function(const std::function<Nat(Nat, Nat)>& g, Nat stages) {
  S1Table t;
  t.stages = stages;
  t.rows.resize(stages);
  for (Nat i = 0; i < stages; ++i)
    for (Nat s = i; s < stages; ++s) t.rows[i].push_back(g(i, s));
  return t;
}

std::string S1Table::to_csv() const {
  std::ostringstream out;
  out << "i,s,f\n";
  for (Nat i = 0; i < stages; ++i)
    for (Nat s = i; s < stages; ++s)
      out << i << "," << s << "," << rows[i][s - i] << "\n";
  return out.str();
}

S1Validation validate_s1(const S1Table& t) {
  S1Validation v;
  if (t.rows.size() != t.stages) {
    v.ok = false;
    v.detail = "row count disagrees with the stage count";
    return v;
  }
  for (Nat i = 0; i < t.stages; ++i) {
    if (t.rows[i].size() != t.stages - i) {
      v.ok = false;
      v.detail = "row " + std::to_string(i) + " is not rectangular on i <= s < stages";
      return v;
    }
    for (Nat k = 0; k + 1 < t.rows[i].size(); ++k) {
      if (t.rows[i][k] > t.rows[i][k + 1]) {
        v.ok = false;
        v.detail = "row " + std::to_string(i) + " decreases at stage " +
                   std::to_string(i + k + 1);
        return v;
      }
    }
  }
  // Settled prefix: rows whose value is already constant strictly before the
  // final stage. A single-entry row never qualifies; its limit was not
  // observed to hold still.
  for (Nat i = 0; i < t.stages; ++i) {
    const auto& row = t.rows[i];
    if (row.size() < 2 || row[row.size() - 1] != row[row.size() - 2]) break;
    Nat k = row.size() - 1;
    while (k > 0 && row[k - 1] == row[k]) --k;
    v.stable_limits.push_back(row.back());
    v.settled_at.push_back(i + k);
    if (v.stable_limits.size() >= 2) {
      Nat a = v.stable_limits[v.stable_limits.size() - 2];
      Nat b = v.stable_limits.back();
      if (a >= b) {
        v.ok = false;
        v.detail = "settled limits not strictly increasing: m_" +
                   std::to_string(i - 1) + " = " + std::to_string(a) +
                   ", m_" + std::to_string(i) + " = " + std::to_string(b);
        v.stable_limits.pop_back();
        v.settled_at.pop_back();
        return v;
      }
    }
  }
  return v;
}

std::vector<std::pair<Nat, Nat>> CharacterApprox::affirmed() const {
  std::vector<std::pair<Nat, Nat>> out;
  for (const auto& [k, n] : candidates)
    if (guess(k, n, budget)) out.emplace_back(k, n);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

constexpr Nat kInf = std::numeric_limits<Nat>::max();

// Incremental view of the stage-p relation: pairs enumerated by stage p,
// closed up, with class members counted only up to p. p only moves forward.
class CountEngine {
 public:
  explicit CountEngine(const PairEnumerationOracle& E) : entries_(E.entries()) {}

  void advance_to(Nat p) {
    while (next_entry_ < entries_.size() && entries_[next_entry_].stage <= p) {
      unite(slot(entries_[next_entry_].x), slot(entries_[next_entry_].y));
      ++next_entry_;
    }
    while (threshold_ + 1 <= p) {
      ++threshold_;
      auto it = slot_by_value_.find(threshold_);
      if (it != slot_by_value_.end()) bump(find(it->second));
    }
    p_ = p;
  }

  Nat count(Nat x) const {
    auto it = slot_by_value_.find(x);
    if (it == slot_by_value_.end()) return 1;
    Nat c = below_[find_const(it->second)];
    return c == 0 ? 1 : c;  // x > p_ never queried; guard anyway
  }

  // Distinct class counts achievable by some element <= p, ascending.
  std::vector<Nat> pool() const {
    std::vector<Nat> out;
    for (auto it = root_counts_.begin(); it != root_counts_.end();
         it = root_counts_.upper_bound(*it))
      if (*it >= 1) out.push_back(*it);
    if (mentioned_below_ < p_ + 1) {
      // Some number <= p is untouched by any pair and counts as 1.
      if (out.empty() || out.front() != 1) out.insert(out.begin(), 1);
    }
    return out;
  }

 private:
  Nat slot(Nat v) {
    auto it = slot_by_value_.find(v);
    if (it != slot_by_value_.end()) return it->second;
    Nat s = parent_.size();
    slot_by_value_.emplace(v, s);
    parent_.push_back(s);
    rank_.push_back(0);
    Nat init = v <= threshold_ ? 1 : 0;
    below_.push_back(init);
    if (init) {
      ++mentioned_below_;
      root_counts_.insert(1);
    }
    return s;
  }

  Nat find(Nat s) {
    while (parent_[s] != s) {
      parent_[s] = parent_[parent_[s]];
      s = parent_[s];
    }
    return s;
  }

  Nat find_const(Nat s) const {
    while (parent_[s] != s) s = parent_[s];
    return s;
  }

  void unite(Nat a, Nat b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    if (rank_[a] == rank_[b]) ++rank_[a];
    if (below_[a]) root_counts_.erase(root_counts_.find(below_[a]));
    if (below_[b]) root_counts_.erase(root_counts_.find(below_[b]));
    parent_[b] = a;
    below_[a] += below_[b];
    if (below_[a]) root_counts_.insert(below_[a]);
  }

  void bump(Nat root) {
    if (below_[root]) root_counts_.erase(root_counts_.find(below_[root]));
    ++below_[root];
    ++mentioned_below_;
    root_counts_.insert(below_[root]);
  }

  std::vector<PairEnumerationOracle::Entry> entries_;
  std::size_t next_entry_ = 0;
  Nat p_ = 0;
  Nat threshold_ = 0;  // members <= threshold_ are counted
  std::unordered_map<Nat, Nat> slot_by_value_;
  std::vector<Nat> parent_, rank_, below_;
  std::multiset<Nat> root_counts_;
  Nat mentioned_below_ = 0;
};

// chain_max[j]: the largest lower bound L such that positions j..last can be
// filled with strictly increasing pool counts, each >= its row floor and the
// first >= L. 0 means infeasible, kInf means no positions remain.
std::vector<Nat> chain_bounds(const std::vector<Nat>& pool,
                              const std::vector<Nat>& floors) {
  std::vector<Nat> chain(floors.size() + 1, kInf);
  for (std::size_t j = floors.size(); j-- > 1;) {
    Nat ub = chain[j + 1];
    // largest pool value v with floors[j] <= v < ub
    auto it = ub == kInf ? pool.end() : std::lower_bound(pool.begin(), pool.end(), ub);
    if (it == pool.begin()) {
      chain[j] = 0;
    } else {
      Nat v = *(it - 1);
      chain[j] = v >= floors[j] ? v : 0;
    }
  }
  return chain;
}

}  // namespace

S1Extraction extract_s1(const PairEnumerationOracle& E, Nat max_stage, Nat stages) {
  Nat cap = std::min(max_stage, E.budget());
  CountEngine engine(E);
  engine.advance_to(0);

  S1Extraction x;
  x.checkpoints.push_back(0);
  x.anchors.push_back({0});
  x.table.stages = 1;
  x.table.rows.push_back({engine.count(0)});

  for (Nat s = 0;; ++s) {
    if (stages > 0 && s + 1 > stages) break;
    Nat L = s + 1;  // tuple positions 0..L
    std::vector<Nat> floors(L + 1, 0);
    for (Nat i = 1; i <= s; ++i) floors[i] = x.table.f(i, s);

    Nat p = x.checkpoints.back();
    bool found = false;
    std::vector<Nat> pool;
    std::vector<Nat> chain;
    while (p < cap) {
      ++p;
      engine.advance_to(p);
      pool = engine.pool();
      chain = chain_bounds(pool, floors);
      Nat c0 = engine.count(0);
      if (c0 < x.table.f(0, s))
        throw Error("extract_s1: class count shrank; enumeration not monotone");
      if (chain[1] != 0 && c0 < chain[1]) {
        found = true;
        break;
      }
    }
    if (!found) {
      if (stages > 0)
        throw S1Exhausted(
            "extract_s1: no checkpoint beyond " +
                std::to_string(x.checkpoints.back()) + " admits an anchor tuple within " +
                std::to_string(cap) + "; the character looks bounded or the budget is too small",
            x);
      break;
    }

    // Lexicographically least tuple, b_0 = 0 pinned.
    std::vector<Nat> b(L + 1, 0);
    std::vector<Nat> counts(L + 1, engine.count(0));
    for (Nat i = 1; i <= L; ++i) {
      Nat lo = std::max<Nat>(floors[i], counts[i - 1] + 1);
      Nat ub = i < L ? chain[i + 1] : kInf;
      bool placed = false;
      for (Nat cand = 0; cand <= p; ++cand) {
        Nat c = engine.count(cand);
        if (c >= lo && c < ub) {
          b[i] = cand;
          counts[i] = c;
          placed = true;
          break;
        }
      }
      if (!placed) throw Error("extract_s1: tuple scan failed after a feasible check");
    }

    for (Nat i = 0; i <= s; ++i) x.table.rows[i].push_back(counts[i]);
    x.table.rows.push_back({counts[L]});
    x.table.stages = L + 1;
    x.anchors.push_back(b);
    x.checkpoints.push_back(p);
  }
  return x;
}

std::vector<Nat> realized_class_sizes(const PairEnumerationOracle& E,
                                      const S1Extraction& x) {
  std::unordered_map<Nat, Nat> slot;
  std::vector<Nat> parent;
  auto get = [&](Nat v) {
    auto it = slot.find(v);
    if (it != slot.end()) return it->second;
    Nat s = parent.size();
    slot.emplace(v, s);
    parent.push_back(s);
    return s;
  };
  std::function<Nat(Nat)> find = [&](Nat s) {
    while (parent[s] != s) {
      parent[s] = parent[parent[s]];
      s = parent[s];
    }
    return s;
  };
  for (const auto& e : E.entries()) {
    Nat a = get(e.x), b = get(e.y);
    a = find(a);
    b = find(b);
    if (a != b) parent[a] = b;
  }
  std::unordered_map<Nat, Nat> size_of_root;
  for (const auto& [v, s] : slot) ++size_of_root[find(s)];
  std::vector<Nat> out;
  for (Nat a : x.final_anchors()) {
    auto it = slot.find(a);
    out.push_back(it == slot.end() ? 1 : size_of_root[find(it->second)]);
  }
  return out;
}

BuiltStructure build_from_character(const CharacterApprox& K, const S1Table& f,
                                    Nat horizon,
                                    const std::function<Nat(Nat)>& carrier) {
  auto v = validate_s1(f);
  if (!v.ok) throw ValidationError("build_from_character: " + v.detail);

  BuiltStructure out;
  Nat next_index = 0;
  auto fresh = [&]() {
    Nat e = carrier ? carrier(next_index) : next_index;
    ++next_index;
    if (e >= horizon)
      throw ValidationError("build_from_character: allocation spills past the horizon");
    out.elements_used = std::max(out.elements_used, e + 1);
    return e;
  };

  out.classes.resize(f.stages);
  for (Nat s = 0; s < f.stages; ++s) {
    for (Nat i = 0; i <= s; ++i) {
      Nat target = f.f(i, s);
      auto& cls = out.classes[i];
      if (cls.size() < target) {
        while (cls.size() < target) cls.push_back(fresh());
        out.growth.push_back({s, i, target});
      }
    }
  }

  std::map<Nat, Nat> need;  // size -> required class count
  for (const auto& [k, n] : K.affirmed()) {
    Nat& cur = need[k];
    cur = std::max(cur, n);
  }
  std::map<Nat, Nat> have;
  for (const auto& cls : out.classes)
    if (!cls.empty()) ++have[cls.size()];
  for (const auto& [k, n] : need) {
    Nat existing = have.count(k) ? have[k] : 0;
    for (Nat extra = existing; extra < n; ++extra) {
      std::vector<Nat> cls;
      for (Nat j = 0; j < k; ++j) cls.push_back(fresh());
      out.classes.push_back(std::move(cls));
      out.growth.push_back({f.stages, static_cast<Nat>(out.classes.size() - 1), k});
    }
  }

  out.classes.erase(
      std::remove_if(out.classes.begin(), out.classes.end(),
                     [](const std::vector<Nat>& c) { return c.empty(); }),
      out.classes.end());

  out.structure = structure_from_classes("grown from a stage table", out.classes);
  auto allocated = std::make_shared<std::unordered_set<Nat>>();
  for (const auto& cls : out.classes) allocated->insert(cls.begin(), cls.end());
  out.structure.in_universe = [allocated](Nat x) { return allocated->count(x) > 0; };
  return out;
}

}  // namespace eqd
