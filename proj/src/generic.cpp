#include "eqdensity/generic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>
#include <unordered_set>

namespace eqd {

namespace {

constexpr Nat kUnassigned = std::numeric_limits<Nat>::max();

Nat isqrt(Nat x) {
  Nat r = static_cast<Nat>(std::sqrt(static_cast<double>(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

bool is_square(Nat x) {
  Nat r = isqrt(x);
  return r * r == x;
}

// i-th non-square, ascending: 2, 3, 5, 6, 7, 8, 10, ...
// Non-squares in [0, v] number v - isqrt(v).
Nat nth_nonsquare(Nat i) {
  Nat v = i;
  while (is_square(v) || v - isqrt(v) != i + 1) ++v;
  return v;
}

// Copy of S through the slot assignment pi: slot x carries the input element
// pi[x]. Unassigned slots fall outside the universe.
EqStructure pullback_copy(const EqStructure& S,
                          std::shared_ptr<const std::vector<Nat>> pi,
                          std::string note) {
  auto inv = std::make_shared<std::unordered_map<Nat, Nat>>();
  for (Nat x = 0; x < pi->size(); ++x)
    if ((*pi)[x] != kUnassigned) inv->emplace((*pi)[x], x);

  EqStructure c;
  c.note = std::move(note);
  c.in_universe = [pi](Nat x) {
    return x < pi->size() && (*pi)[x] != kUnassigned;
  };
  c.related = [pi, rel = S.related](Nat x, Nat y) {
    if (x >= pi->size() || y >= pi->size()) return false;
    Nat u = (*pi)[x], v = (*pi)[y];
    if (u == kUnassigned || v == kUnassigned) return false;
    return rel(u, v);
  };
  if (S.members_of) {
    c.members_of = [pi, inv, mo = S.members_of](
                       Nat x) -> std::optional<std::vector<Nat>> {
      if (x >= pi->size() || (*pi)[x] == kUnassigned) return std::nullopt;
      auto full = mo((*pi)[x]);
      if (!full) return std::nullopt;
      std::vector<Nat> out;
      for (Nat m : *full) {
        auto it = inv->find(m);
        if (it != inv->end()) out.push_back(it->second);
      }
      std::sort(out.begin(), out.end());
      return out;
    };
  }
  if (S.declared_infinite) {
    c.declared_infinite = [pi, di = S.declared_infinite](Nat x) {
      return x < pi->size() && (*pi)[x] != kUnassigned && di((*pi)[x]);
    };
  }
  return c;
}

// Classes of S walked by least member, arbitrarily far past any horizon,
// bucketed by exact size. take(size) hands out the next unused class of that
// size or nothing once the walk hits the cap. Needs exact classes.
struct ClassPool {
  const EqStructure& S;
  Nat cap;
  Nat cursor = 0;
  std::unordered_set<Nat> ahead;
  std::map<Nat, std::vector<std::vector<Nat>>> ready;
  std::map<Nat, std::size_t> taken;

  ClassPool(const EqStructure& s, Nat c) : S(s), cap(c) {}

  std::optional<std::vector<Nat>> take(Nat size) {
    while (true) {
      auto& vec = ready[size];
      auto& t = taken[size];
      if (t < vec.size()) return vec[t++];
      if (cursor >= cap) return std::nullopt;
      Nat x = cursor++;
      if (ahead.erase(x) > 0) continue;
      if (!S.universe(x)) continue;
      auto cls = S.exact_class(x);
      if (!cls) continue;
      for (Nat m : *cls)
        if (m > x) ahead.insert(m);
      if (S.infinite_class(x)) continue;
      std::vector<Nat> sorted = *cls;
      std::sort(sorted.begin(), sorted.end());
      ready[sorted.size()].push_back(std::move(sorted));
    }
  }
};

EnumerationOracle carrier_oracle(const std::vector<Nat>& values, Nat horizon) {
  return gen::from_values("carrier", values, horizon + 1);
}

}  // namespace

WitnessCheck verify_generic_witness(const GenericWitness& w, Nat horizon) {
  WitnessCheck c;
  std::vector<Nat> members;
  for (Nat a : w.A.snapshot(w.A.budget()))
    if (a < horizon) members.push_back(a);
  for (Nat a : members) {
    for (Nat b : members) {
      if (!w.dom(a, b)) {
        c.ok = false;
        c.detail = "carrier pair (" + std::to_string(a) + "," +
                   std::to_string(b) + ") escapes the domain";
        return c;
      }
    }
  }
  for (Nat x = 0; x < horizon; ++x) {
    for (Nat y = 0; y < horizon; ++y) {
      if (!w.dom(x, y)) continue;
      if (!w.target.universe(x) || !w.target.universe(y)) continue;
      ++c.pairs_checked;
      if (w.phi(x, y) != w.target.related(x, y)) {
        c.ok = false;
        c.detail = "phi disagrees with the relation at (" + std::to_string(x) +
                   "," + std::to_string(y) + ")";
        return c;
      }
    }
  }
  return c;
}

GenericCopy strongly_generic_copy(const EqStructure& S, const ScenarioMetadata& md,
                                  Nat horizon,
                                  const std::function<bool(Nat)>& carrier) {
  if (horizon < 32)
    throw ValidationError("strongly_generic_copy: horizon must be at least 32");

  GenericCopy out;
  out.carrier_member =
      carrier ? carrier : std::function<bool(Nat)>([](Nat x) { return !is_square(x); });
  for (Nat x = 0; x < horizon; ++x)
    if (out.carrier_member(x)) out.carrier.push_back(x);
  if (out.carrier.empty() || out.carrier.size() == horizon)
    throw ValidationError("carrier must be a proper nonempty subset below the horizon");

  Nat probe = 4 * horizon + 64;
  auto pi = std::make_shared<std::vector<Nat>>(horizon, kUnassigned);

  if (md.tag == CaseTag::InfiniteClass) {
    out.case_used = 1;
    if (md.infinite_reps.empty())
      throw ScenarioError("infinite-class case without a declared class");
    Nat r = md.infinite_reps.front();
    if (!S.universe(r))
      throw ScenarioError("declared infinite class representative is outside the universe");
    std::vector<Nat> B;
    for (Nat y = 0; y < probe; ++y)
      if (S.universe(y) && S.related(y, r)) B.push_back(y);
    Nat below_h = 0, below_half = 0;
    for (Nat b : B) {
      if (b < horizon) ++below_h;
      if (b < horizon / 2) ++below_half;
    }
    if (below_h < 2 || below_half >= below_h)
      throw ScenarioError("declared infinite class stops growing below the horizon");
    if (B.size() < out.carrier.size())
      throw ScenarioError("declared infinite class too thin inside the probe window");
    for (std::size_t i = 0; i < out.carrier.size(); ++i)
      (*pi)[out.carrier[i]] = B[i];

    std::unordered_set<Nat> in_B(B.begin(), B.end());
    Nat v = 0;
    for (Nat x = 0; x < horizon; ++x) {
      if (out.carrier_member(x)) continue;
      while (v < probe && (in_B.count(v) || !S.universe(v))) ++v;
      if (v >= probe) break;
      (*pi)[x] = v++;
    }

    out.cmp.note = "two classes split by the carrier";
    out.cmp.related = [cm = out.carrier_member](Nat x, Nat y) {
      return cm(x) == cm(y);
    };
    out.cmp.declared_infinite = [](Nat) { return true; };
  } else if (md.tag == CaseTag::RepeatedSize) {
    out.case_used = 2;
    Nat k = md.repeated_size;
    if (k == 0) throw ValidationError("repeated size must be positive");
    auto classes = classes_below(S, probe);
    std::vector<const HorizonClass*> kpool;
    Nat k_below_h = 0, k_below_half = 0;
    for (const auto& c : classes) {
      if (!c.complete || c.below.size() != k) continue;
      kpool.push_back(&c);
      if (c.below.front() < horizon) ++k_below_h;
      if (c.below.front() < horizon / 2) ++k_below_half;
    }
    if (k_below_h < 3 || k_below_half >= k_below_h)
      throw ScenarioError("declared repeated size is not visibly repeating below the horizon");

    auto assigned_blocks = std::make_shared<std::unordered_set<Nat>>();
    std::size_t next_class = 0;
    for (Nat m = 0; (m + 1) * k <= horizon; ++m) {
      if (is_square(m)) continue;
      if (next_class >= kpool.size()) break;
      const auto& cls = kpool[next_class++]->below;
      for (Nat i = 0; i < k; ++i) (*pi)[m * k + i] = cls[i];
      assigned_blocks->insert(m);
    }
    // the carrier is the assigned blocks; pool exhaustion shrinks it
    out.carrier.clear();
    out.carrier_member = [k, assigned_blocks](Nat x) {
      return assigned_blocks->count(x / k) > 0;
    };
    for (Nat x = 0; x < horizon; ++x)
      if (out.carrier_member(x)) out.carrier.push_back(x);

    std::unordered_set<Nat> in_B;  // every complete size-k class, used or not
    for (const auto* c : kpool) in_B.insert(c->below.begin(), c->below.end());
    Nat v = 0;
    for (Nat x = 0; x < horizon; ++x) {
      if (out.carrier_member(x)) continue;
      while (v < probe && (in_B.count(v) || !S.universe(v))) ++v;
      if (v >= probe) break;
      (*pi)[x] = v++;
    }

    out.cmp.note = "consecutive blocks of size " + std::to_string(k);
    out.cmp.related = [k](Nat x, Nat y) { return x / k == y / k; };
    out.cmp.members_of = [k](Nat x) -> std::optional<std::vector<Nat>> {
      std::vector<Nat> block(k);
      for (Nat i = 0; i < k; ++i) block[i] = (x / k) * k + i;
      return block;
    };
  } else if (md.tag == CaseTag::S1Subset) {
    out.case_used = 3;
    if (!S.members_of)
      throw ScenarioError("transversal case needs exact classes on the input");
    Nat cap = horizon * horizon;
    std::vector<Nat> minima;   // one point per chosen class
    std::unordered_set<Nat> ahead;
    Nat last_size = 0;
    for (Nat x = 0; x < cap && minima.size() < out.carrier.size(); ++x) {
      if (ahead.erase(x) > 0) continue;
      if (!S.universe(x)) continue;
      auto cls = S.exact_class(x);
      if (!cls) continue;
      for (Nat m : *cls)
        if (m > x) ahead.insert(m);
      if (S.infinite_class(x)) continue;
      if (cls->size() > last_size) {
        last_size = cls->size();
        minima.push_back(x);
      }
    }
    if (minima.size() < out.carrier.size())
      throw ScenarioError("character does not look unbounded inside the probe window");
    for (std::size_t i = 0; i < out.carrier.size(); ++i)
      (*pi)[out.carrier[i]] = minima[i];

    std::unordered_set<Nat> in_B(minima.begin(), minima.end());
    Nat v = 0;
    for (Nat x = 0; x < horizon; ++x) {
      if (out.carrier_member(x)) continue;
      while (v < cap && (in_B.count(v) || !S.universe(v))) ++v;
      if (v >= cap) break;
      (*pi)[x] = v++;
    }

    out.cmp.note = "identity relation";
    out.cmp.related = [](Nat x, Nat y) { return x == y; };
    out.cmp.members_of = [](Nat x) -> std::optional<std::vector<Nat>> {
      return std::vector<Nat>{x};
    };
  } else {
    throw ScenarioError("copy construction needs a declared case tag");
  }

  out.pi = *pi;
  out.matched_horizon = horizon;
  out.copy = pullback_copy(S, pi, "copy of: " + S.note);
  out.A = carrier_oracle(out.carrier, horizon);

  out.witness.target = out.copy;
  out.witness.dom = [cm = out.carrier_member](Nat x, Nat y) {
    return cm(x) && cm(y);
  };
  out.witness.phi = out.cmp.related;
  out.witness.A = out.A;
  out.witness.faithful = out.case_used != 3;
  return out;
}

FaithfulCopy faithful_generic_copy(const EqStructure& S, const ScenarioMetadata& md,
                                   const CharacterApprox& K, const S1Table& f,
                                   Nat horizon) {
  if (md.tag == CaseTag::None)
    throw UnsupportedStructure(
        "no infinite class, no repeated size, no stage table: no faithful copy is promised");
  if (md.tag != CaseTag::S1Subset) {
    FaithfulCopy out;
    out.base = strongly_generic_copy(S, md, horizon);
    out.faithfulness =
        is_faithful(out.base.carrier_member, out.base.copy, horizon);
    return out;
  }

  if (!S.members_of)
    throw ScenarioError("faithful transversal case needs exact classes on the input");

  FaithfulCopy out;
  out.grown = build_from_character(K, f, horizon, nth_nonsquare);
  const auto& grown = *out.grown;

  auto pi = std::make_shared<std::vector<Nat>>(horizon, kUnassigned);
  std::unordered_set<Nat> used;
  ClassPool pool(S, horizon * horizon);
  for (const auto& cls : grown.classes) {
    auto match = pool.take(cls.size());
    if (!match)
      throw ScenarioError("input shows no unused class of size " +
                          std::to_string(cls.size()) + " inside the probe window");
    for (std::size_t i = 0; i < cls.size(); ++i) (*pi)[cls[i]] = (*match)[i];
    used.insert(match->begin(), match->end());
  }
  Nat v = 0;
  Nat vcap = horizon * horizon;
  for (Nat x = 0; x < horizon; ++x) {
    if (grown.structure.in_universe(x)) continue;
    while (v < vcap && (used.count(v) || !S.universe(v))) ++v;
    if (v >= vcap) break;
    (*pi)[x] = v++;
  }

  auto& base = out.base;
  base.case_used = 3;
  for (const auto& cls : grown.classes)
    base.carrier.insert(base.carrier.end(), cls.begin(), cls.end());
  std::sort(base.carrier.begin(), base.carrier.end());
  base.carrier_member = grown.structure.in_universe;
  base.pi = *pi;
  base.matched_horizon = horizon;
  base.copy = pullback_copy(S, pi, "faithful copy of: " + S.note);
  base.cmp = grown.structure;
  base.A = carrier_oracle(base.carrier, horizon);
  base.witness.target = base.copy;
  base.witness.dom = [cm = base.carrier_member](Nat x, Nat y) {
    return cm(x) && cm(y);
  };
  base.witness.phi = grown.structure.related;
  base.witness.A = base.A;
  base.witness.faithful = true;

  out.faithfulness = is_faithful(base.carrier_member, base.copy, horizon);
  return out;
}

RestrictedWitness restrict_generic_witness(const GenericWitness& w, Nat budget) {
  RestrictedWitness r;
  r.Y = extract_dense_subset(w.A, budget);
  auto member = std::make_shared<std::vector<bool>>(r.Y.member);
  auto pred = [member](Nat x) { return x < member->size() && (*member)[x]; };
  r.restricted =
      restrict_structure(w.target, pred, w.target.note + " | on extracted dense subset");
  r.decide = w.phi;
  return r;
}

FaithfulCoarse build_faithful_coarse(const std::function<bool(Nat)>& K,
                                     Nat horizon) {
  FaithfulCoarse out;
  out.a_k = build_A_K(K, horizon);
  EqStructure E = canonical_all_sizes();

  std::vector<Nat> leftover;
  for (Nat x = 0; x < horizon; ++x)
    if (!out.a_k.member(x)) leftover.push_back(x);
  if (leftover.empty())
    throw ScenarioError("no leftover numbers below the horizon; K covers every size in range");

  auto carved = std::make_shared<std::vector<std::vector<Nat>>>();
  auto carve_id = std::make_shared<std::unordered_map<Nat, Nat>>();
  std::size_t pos = 0;
  for (Nat k = 1; k <= horizon && pos < leftover.size(); ++k) {
    if (!K(k)) continue;
    if (pos + k > leftover.size()) break;
    std::vector<Nat> cls(leftover.begin() + pos, leftover.begin() + pos + k);
    pos += k;
    for (Nat m : cls) carve_id->emplace(m, carved->size());
    carved->push_back(std::move(cls));
  }
  if (carved->empty())
    throw ScenarioError("leftover pool below the horizon cannot fit a single class");
  out.carved_classes = carved->size();

  auto akm = out.a_k.member;
  out.R.note = "canonical classes with size in K, leftovers repartitioned";
  out.R.in_universe = [akm, carve_id](Nat x) {
    return akm(x) || carve_id->count(x) > 0;
  };
  out.R.related = [akm, carve_id, erel = E.related](Nat x, Nat y) {
    if (x == y) return true;
    bool ax = akm(x), ay = akm(y);
    if (ax != ay) return false;
    if (ax) return erel(x, y);
    auto ix = carve_id->find(x), iy = carve_id->find(y);
    return ix != carve_id->end() && iy != carve_id->end() &&
           ix->second == iy->second;
  };
  out.R.members_of = [akm, carve_id, carved, emo = E.members_of](
                         Nat x) -> std::optional<std::vector<Nat>> {
    if (akm(x)) return emo(x);
    auto it = carve_id->find(x);
    if (it != carve_id->end()) return (*carved)[it->second];
    return std::nullopt;
  };

  out.character = character_of(out.R, horizon);

  out.agreement_exact = true;
  for (Nat x : out.a_k.elements) {
    auto rc = out.R.members_of(x);
    auto ec = E.members_of(x);
    if (!rc || !ec || rc->front() != ec->front()) {
      out.agreement_exact = false;
      break;
    }
  }
  Nat pair_cap = std::min<Nat>(horizon, 2000);
  for (std::size_t i = 0; out.agreement_exact && i < out.a_k.elements.size(); ++i) {
    Nat x = out.a_k.elements[i];
    if (x >= pair_cap) break;
    for (std::size_t j = 0; j < out.a_k.elements.size(); ++j) {
      Nat y = out.a_k.elements[j];
      if (y >= pair_cap) break;
      if (out.R.related(x, y) != E.related(x, y)) {
        out.agreement_exact = false;
        break;
      }
    }
  }

  out.faithful_R = is_faithful(akm, out.R, horizon);
  out.faithful_E = is_faithful(akm, E, horizon);
  return out;
}

DiagonalDenseK diagonal_dense_K(const OracleRegistry<LimitApproxOracle>& reg,
                                Nat horizon) {
  DiagonalDenseK out;
  auto removed = std::make_shared<std::unordered_set<Nat>>();
  for (std::size_t p = 0; p < reg.size(); ++p) {
    Nat i = p + 1;
    std::optional<Nat> hit;
    for (Nat x = (Nat(1) << i) + 1; x < horizon; ++x) {
      if (reg.at(p).at_budget(x)) {
        hit = x;
        break;
      }
    }
    out.omitted.push_back(hit);
    if (hit) removed->insert(*hit);
  }
  out.member = [removed](Nat m) { return removed->count(m) == 0; };
  for (Nat i = 1; (Nat(1) << i) <= horizon; ++i) {
    Nat edge = Nat(1) << i;
    Nat inside = 0;
    for (Nat m : *removed)
      if (m < edge) ++inside;
    DiagonalDenseK::Checkpoint c;
    c.i = i;
    c.count = edge - inside;
    c.density = Rat::ratio(c.count, edge);
    c.bound = Rat::ratio(edge - std::min(edge, i), edge);
    c.ok = c.density >= c.bound;
    out.checkpoints.push_back(c);
  }
  return out;
}

AntiCoarseK anti_coarse_K(const OracleRegistry<PairEnumerationOracle>& reg,
                          const std::vector<ScenarioMetadata>& metadata,
                          Nat budget) {
  if (metadata.size() != reg.size())
    throw ValidationError("anti_coarse_K: one metadata record per registered structure");
  if (budget < 64) throw ValidationError("anti_coarse_K: budget must be at least 64");

  struct Removal {
    Nat req;
    Nat modulus;
    Nat residue;
  };
  auto removals = std::make_shared<std::vector<Removal>>();
  auto preserved = std::make_shared<std::vector<std::pair<Nat, Nat>>>();  // (req, value)

  auto member_upto = [removals, preserved](Nat m, Nat bound) {
    for (const auto& [req, val] : *preserved)
      if (req < bound && val == m) return true;
    for (const auto& r : *removals)
      if (r.req < bound && m % r.modulus == r.residue) return false;
    return true;
  };

  AntiCoarseK out;

  std::vector<Nat> checkpoints;
  for (Nat c = 64; c < budget; c *= 2) checkpoints.push_back(c);
  checkpoints.push_back(budget);

  for (std::size_t e = 0; e < reg.size(); ++e) {
    Nat M = Nat(1) << (e + 2);
    AntiCoarseLogEntry entry;
    entry.requirement = e;
    entry.modulus = M;
    entry.threshold = Rat::pow2(-static_cast<int>(e) - 2);

    if (metadata[e].positive_density_size) {
      entry.action = AntiCoarseAction::NoActionPositiveDensity;
      out.log.push_back(entry);
      continue;
    }

    const auto& pairs = reg.at(e);
    Partition P = ce_closure(pairs, pairs.budget(), budget);

    // best (density, earliest checkpoint) per residue of the class size
    std::vector<Rat> best(M, Rat(0));
    std::vector<Nat> best_at(M, 0);
    for (Nat c : checkpoints) {
      std::vector<Nat> count(M, 0);
      for (Nat x = 0; x < c; ++x) ++count[P.size_of(x) % M];
      for (Nat r = 0; r < M; ++r) {
        Rat d = Rat::ratio(count[r], c);
        if (d > best[r]) {
          best[r] = d;
          best_at[r] = c;
        }
      }
    }

    std::optional<Nat> chosen;
    for (Nat r = 0; r < M; ++r) {
      if (best[r] >= entry.threshold) {
        chosen = r;
        break;
      }
    }
    if (!chosen) {
      entry.action = AntiCoarseAction::Stalled;
      out.log.push_back(entry);
      continue;
    }

    Nat j = *chosen;
    entry.residue = j;
    entry.selection_density = best[j];
    entry.checkpoint = best_at[j];

    bool nested = false;
    for (const auto& r : *removals)
      if (r.modulus <= M && j % r.modulus == r.residue) nested = true;
    if (nested) {
      entry.action = AntiCoarseAction::Nested;
    } else {
      entry.action = AntiCoarseAction::Removed;
      removals->push_back({static_cast<Nat>(e), M, j});
      preserved->push_back({static_cast<Nat>(e), M + j});
      entry.preserved = M + j;
      out.preserved.push_back(M + j);
    }
    out.log.push_back(entry);

    // coverage witness at the selection checkpoint, against K as it stands
    // after this requirement
    Nat c = entry.checkpoint;
    Nat covered = 0, preserved_mass = 0, truncated_mass = 0;
    for (Nat x = 0; x < c; ++x) {
      Nat size = P.size_of(x);
      if (member_upto(size, e + 1)) ++covered;
      for (const auto& [req, val] : *preserved)
        if (val == size) {
          ++preserved_mass;
          break;
        }
      if (P.classes[P.class_id[x]].back() >= c) ++truncated_mass;
    }
    AntiCoarseWitness w;
    w.requirement = e;
    w.checkpoint = c;
    w.coverage = Rat::ratio(covered, c);
    w.bound = Rat(1) - entry.threshold;
    w.epsilon = Rat::ratio(preserved_mass, c) + Rat::ratio(truncated_mass, c);
    w.ok = w.coverage <= w.bound + w.epsilon;
    out.witnesses.push_back(w);
  }

  out.member = [member_upto, n = reg.size()](Nat m) {
    return member_upto(m, n);
  };
  out.member_at = member_upto;
  return out;
}

}  // namespace eqd
