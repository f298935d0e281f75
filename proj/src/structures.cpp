#include "eqdensity/structures.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

namespace eqd {

namespace {

Nat isqrt(Nat x) {
  Nat r = static_cast<Nat>(std::sqrt(static_cast<double>(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

Nat triangle(Nat j) { return j * (j + 1) / 2; }

// Index of the triangular block containing x: triangle(j) <= x < triangle(j+1).
Nat block_of(Nat x) {
  Nat j = (isqrt(8 * x + 1) - 1) / 2;
  while (triangle(j + 1) <= x) ++j;
  while (triangle(j) > x) --j;
  return j;
}

// Visits every class with a member below the horizon exactly once.
// below: the members under the horizon. complete: the whole class is finite
// and sits under the horizon.
void walk_classes(
    const EqStructure& S, Nat horizon,
    const std::function<void(const std::vector<Nat>&, bool)>& visit) {
  std::vector<bool> seen(horizon, false);
  if (S.members_of) {
    for (Nat x = 0; x < horizon; ++x) {
      if (seen[x] || !S.universe(x)) continue;
      auto cls = S.exact_class(x);
      if (!cls) {
        // class not exactly known (infinite or undetermined): gather what the
        // relation shows below the horizon and report it incomplete
        std::vector<Nat> below;
        for (Nat y = x; y < horizon; ++y) {
          if (S.universe(y) && S.related(x, y)) {
            below.push_back(y);
            seen[y] = true;
          }
        }
        visit(below, false);
        continue;
      }
      std::vector<Nat> below;
      bool complete = !S.infinite_class(x);
      for (Nat m : *cls) {
        if (m < horizon) {
          below.push_back(m);
          seen[m] = true;
        } else {
          complete = false;
        }
      }
      std::sort(below.begin(), below.end());
      visit(below, complete);
    }
    return;
  }
  // Opaque relation: scan a window past the horizon. Classes are assumed not
  // to stretch past twice the horizon; shipped structures carry members_of
  // and never take this path.
  Nat probe = 2 * horizon + 8;
  std::vector<Nat> reps;
  std::vector<std::vector<Nat>> classes;
  std::vector<bool> has_far;
  for (Nat x = 0; x < probe; ++x) {
    if (!S.universe(x)) continue;
    bool placed = false;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      if (S.related(x, reps[i])) {
        if (x < horizon)
          classes[i].push_back(x);
        else
          has_far[i] = true;
        placed = true;
        break;
      }
    }
    if (!placed && x < horizon) {
      reps.push_back(x);
      classes.push_back({x});
      has_far.push_back(false);
    }
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    bool complete = !has_far[i] && !S.infinite_class(classes[i].front());
    visit(classes[i], complete);
  }
}

}  // namespace

std::vector<HorizonClass> classes_below(const EqStructure& S, Nat horizon) {
  std::vector<HorizonClass> out;
  walk_classes(S, horizon, [&](const std::vector<Nat>& below, bool complete) {
    out.push_back({below, complete});
  });
  return out;
}

TypePartition type_sets(const EqStructure& S, Nat horizon) {
  TypePartition t;
  walk_classes(S, horizon, [&](const std::vector<Nat>& below, bool complete) {
    if (complete) {
      auto& bucket = t.by_size[below.size()];
      bucket.insert(bucket.end(), below.begin(), below.end());
    } else {
      t.undetermined.insert(t.undetermined.end(), below.begin(), below.end());
    }
  });
  for (auto& [size, elems] : t.by_size) std::sort(elems.begin(), elems.end());
  std::sort(t.undetermined.begin(), t.undetermined.end());
  return t;
}

Character character_of(const EqStructure& S, Nat horizon) {
  Character c;
  walk_classes(S, horizon, [&](const std::vector<Nat>& below, bool complete) {
    if (complete)
      ++c.counts[below.size()];
    else
      ++c.truncated_classes;
  });
  return c;
}

FaithfulReport is_faithful(const std::function<bool(Nat)>& A,
                           const EqStructure& S, Nat horizon) {
  FaithfulReport r;
  walk_classes(S, horizon, [&](const std::vector<Nat>& below, bool) {
    if (!r.faithful) return;
    std::optional<Nat> inside, outside;
    for (Nat m : below) {
      if (A(m))
        inside = inside ? inside : std::optional<Nat>(m);
      else
        outside = outside ? outside : std::optional<Nat>(m);
    }
    if (inside && outside) {
      r.faithful = false;
      r.counterexample = {*inside, *outside};
    }
  });
  return r;
}

EquivalenceCheck verify_equivalence(const EqStructure& S, Nat horizon) {
  EquivalenceCheck out;
  std::vector<Nat> id(horizon, horizon);
  std::vector<Nat> reps;
  for (Nat x = 0; x < horizon; ++x) {
    if (!S.universe(x)) continue;
    if (!S.related(x, x)) {
      out.ok = false;
      out.detail = "not reflexive at " + std::to_string(x);
      return out;
    }
    for (std::size_t i = 0; i < reps.size(); ++i) {
      if (S.related(x, reps[i])) {
        id[x] = i;
        break;
      }
    }
    if (id[x] == horizon) {
      id[x] = reps.size();
      reps.push_back(x);
    }
  }
  for (Nat x = 0; x < horizon; ++x) {
    if (!S.universe(x)) continue;
    for (Nat y = 0; y < horizon; ++y) {
      if (!S.universe(y)) continue;
      if (S.related(x, y) != (id[x] == id[y])) {
        out.ok = false;
        out.detail = "relation disagrees with its partition at (" +
                     std::to_string(x) + "," + std::to_string(y) + ")";
        return out;
      }
    }
  }
  return out;
}

EqStructure canonical_all_sizes() {
  EqStructure s;
  s.note = "one class of each finite size, triangular blocks";
  s.related = [](Nat x, Nat y) { return block_of(x) == block_of(y); };
  s.members_of = [](Nat x) -> std::optional<std::vector<Nat>> {
    Nat j = block_of(x);
    std::vector<Nat> cls;
    for (Nat m = triangle(j); m < triangle(j + 1); ++m) cls.push_back(m);
    return cls;
  };
  return s;
}

namespace {

// DensePairs partner: squares are singletons, the 2n elements between n^2
// and (n+1)^2 pair up as {n^2+2j-1, n^2+2j}.
Nat dense_partner(Nat x) {
  Nat r = isqrt(x);
  if (r * r == x) return x;
  Nat off = x - r * r;  // 1..2r
  return (off % 2 == 1) ? x + 1 : x - 1;
}

// SparsePairs partner: {n^2, n^2+1} for n >= 1.
Nat sparse_partner(Nat x) {
  Nat r = isqrt(x);
  if (r >= 1 && r * r == x) return x + 1;
  if (x >= 2) {
    Nat q = isqrt(x - 1);
    if (q >= 1 && q * q == x - 1) return x - 1;
  }
  return x;
}

}  // namespace

EqStructure canonical_12(PairLayout layout) {
  EqStructure s;
  auto partner =
      layout == PairLayout::DensePairs ? dense_partner : sparse_partner;
  s.note = layout == PairLayout::DensePairs
               ? "(1,2) structure, pairs dense, singletons at the squares"
               : "(1,2) structure, sparse pairs {n^2, n^2+1}";
  s.related = [partner](Nat x, Nat y) { return x == y || partner(x) == y; };
  s.members_of = [partner](Nat x) -> std::optional<std::vector<Nat>> {
    Nat p = partner(x);
    if (p == x) return std::vector<Nat>{x};
    return std::vector<Nat>{std::min(x, p), std::max(x, p)};
  };
  return s;
}

AKSet build_A_K(const std::function<bool(Nat)>& K, Nat horizon) {
  AKSet out;
  out.member = [K](Nat x) { return K(block_of(x) + 1); };
  for (Nat x = 0; x < horizon; ++x)
    if (out.member(x)) out.elements.push_back(x);
  // Checkpoints at every full block prefix n with triangle(n) <= horizon.
  Nat count = 0;
  Nat missing = 0;
  Nat x = 0;
  for (Nat n = 1; triangle(n) <= horizon; ++n) {
    if (!K(n)) ++missing;
    for (; x < triangle(n); ++x)
      if (out.member(x)) ++count;
    DeficitCheckpoint cp;
    cp.classes = n;
    cp.prefix = triangle(n);
    cp.missing = missing;
    cp.deficit = Rat::ratio(cp.prefix - count, cp.prefix);
    cp.bound = Rat(2 * static_cast<std::int64_t>(missing),
                   static_cast<std::int64_t>(n));
    cp.ok = cp.deficit <= cp.bound;
    out.checkpoints.push_back(cp);
  }
  return out;
}

EqStructure restrict_structure(const EqStructure& S,
                               const std::function<bool(Nat)>& Y,
                               std::string note) {
  EqStructure r;
  r.note = std::move(note);
  auto base_universe = S.in_universe;
  r.in_universe = [Y, base_universe](Nat x) {
    return Y(x) && (!base_universe || base_universe(x));
  };
  auto rel = S.related;
  r.related = [Y, rel](Nat x, Nat y) { return Y(x) && Y(y) && rel(x, y); };
  if (S.members_of) {
    auto members = S.members_of;
    r.members_of = [Y, members](Nat x) -> std::optional<std::vector<Nat>> {
      auto cls = members(x);
      if (!cls) return std::nullopt;
      std::vector<Nat> kept;
      for (Nat m : *cls)
        if (Y(m)) kept.push_back(m);
      return kept;
    };
  }
  if (S.declared_infinite) {
    auto decl = S.declared_infinite;
    r.declared_infinite = [Y, decl](Nat x) { return Y(x) && decl(x); };
  }
  return r;
}

std::vector<Nat> partner_map(const EqStructure& S, Nat horizon) {
  std::vector<Nat> partner(horizon);
  if (S.members_of) {
    for (Nat x = 0; x < horizon; ++x) {
      partner[x] = x;
      if (!S.universe(x)) continue;
      auto cls = S.exact_class(x);
      if (!cls) throw Error("partner_map: class unknown at " + std::to_string(x));
      std::vector<Nat> below;
      for (Nat m : *cls)
        if (m < horizon) below.push_back(m);
      if (below.size() > 2)
        throw Error("partner_map: class of " + std::to_string(x) +
                    " has over two members below the horizon");
      for (Nat m : below)
        if (m != x) partner[x] = m;
    }
    return partner;
  }
  for (Nat x = 0; x < horizon; ++x) {
    partner[x] = x;
    if (!S.universe(x)) continue;
    for (Nat y = 0; y < horizon; ++y) {
      if (y == x || !S.universe(y)) continue;
      if (S.related(x, y)) {
        if (partner[x] != x)
          throw Error("partner_map: class of " + std::to_string(x) +
                      " has over two members below the horizon");
        partner[x] = y;
      }
    }
  }
  return partner;
}

EqStructure structure_from_classes(
    std::string note, const std::vector<std::vector<Nat>>& classes) {
  auto members =
      std::make_shared<std::unordered_map<Nat, std::shared_ptr<std::vector<Nat>>>>();
  for (const auto& cls : classes) {
    if (cls.empty()) continue;
    auto stored = std::make_shared<std::vector<Nat>>(cls);
    std::sort(stored->begin(), stored->end());
    for (Nat m : *stored) {
      if (!members->emplace(m, stored).second)
        throw ValidationError("structure_from_classes: element " +
                              std::to_string(m) + " listed twice");
    }
  }
  EqStructure s;
  s.note = std::move(note);
  s.related = [members](Nat x, Nat y) {
    if (x == y) return true;
    auto it = members->find(x);
    if (it == members->end()) return false;
    return std::binary_search(it->second->begin(), it->second->end(), y);
  };
  s.members_of = [members](Nat x) -> std::optional<std::vector<Nat>> {
    auto it = members->find(x);
    if (it == members->end()) return std::vector<Nat>{x};
    return *it->second;
  };
  return s;
}

}  // namespace eqd
