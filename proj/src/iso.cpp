#include "eqdensity/iso.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>
#include <unordered_set>

namespace eqd {

namespace {

constexpr Nat kNone = std::numeric_limits<Nat>::max();

using Table = std::unordered_map<Nat, Nat>;

std::function<std::optional<Nat>(Nat)> lookup_fn(std::shared_ptr<const Table> t) {
  return [t](Nat x) -> std::optional<Nat> {
    auto it = t->find(x);
    if (it == t->end()) return std::nullopt;
    return it->second;
  };
}

DensityProfile profile_of(const std::vector<Nat>& sorted_values, Nat horizon,
                          Rat tol) {
  auto set = std::make_shared<std::unordered_set<Nat>>(sorted_values.begin(),
                                                       sorted_values.end());
  Nat window = std::max<Nat>(horizon / 8, 1);
  return density_profile([set](Nat x) { return set->count(x) > 0; }, horizon,
                         window, tol);
}

void fill_witness_tables(PartialIsoWitness& w,
                         std::vector<std::pair<Nat, Nat>> table, Nat horizon,
                         Rat tol) {
  w.table = std::move(table);
  auto fwd = std::make_shared<Table>();
  auto inv = std::make_shared<Table>();
  for (const auto& [x, y] : w.table) {
    fwd->emplace(x, y);
    inv->emplace(y, x);
    w.domain.push_back(x);
    w.range.push_back(y);
  }
  std::sort(w.domain.begin(), w.domain.end());
  std::sort(w.range.begin(), w.range.end());
  w.theta = lookup_fn(fwd);
  w.theta_inv = lookup_fn(inv);
  w.domain_profile = profile_of(w.domain, horizon, tol);
  w.range_profile = profile_of(w.range, horizon, tol);
}

// Ascending size-2 classes {n^2+i, n^2+i+1}, i odd below 2n, of the dense
// canonical layout, up to the horizon.
std::vector<std::pair<Nat, Nat>> dense_canonical_pairs(Nat horizon) {
  std::vector<std::pair<Nat, Nat>> out;
  for (Nat n = 1; n * n + 2 <= horizon; ++n)
    for (Nat i = 1; i < 2 * n && n * n + i + 1 < horizon; i += 2)
      out.emplace_back(n * n + i, n * n + i + 1);
  return out;
}

}  // namespace

WitnessCheck verify_partial_iso(const PartialIsoWitness& w, Nat horizon) {
  WitnessCheck c;
  std::unordered_set<Nat> seen_dom, seen_rng;
  for (const auto& [x, y] : w.table) {
    if (!seen_dom.insert(x).second || !seen_rng.insert(y).second) {
      c.ok = false;
      c.detail = "table repeats an element at (" + std::to_string(x) + "," +
                 std::to_string(y) + ")";
      return c;
    }
  }
  std::vector<std::pair<Nat, Nat>> below;
  for (const auto& p : w.table)
    if (p.first < horizon && p.second < horizon) below.push_back(p);
  for (std::size_t i = 0; i < below.size(); ++i) {
    for (std::size_t j = i + 1; j < below.size(); ++j) {
      ++c.pairs_checked;
      bool src = w.source.related(below[i].first, below[j].first);
      bool tgt = w.target.related(below[i].second, below[j].second);
      if (src != tgt) {
        c.ok = false;
        c.detail = "relation not preserved between " +
                   std::to_string(below[i].first) + " and " +
                   std::to_string(below[j].first);
        return c;
      }
    }
  }
  return c;
}

PartialIsoWitness generic_iso_char2(const EqStructure& A,
                                    const PairEnumerationOracle& pairs,
                                    Nat horizon, Rat tol) {
  if (horizon < 16) throw ValidationError("generic_iso_char2: horizon too small");
  auto pm = partner_map(A, horizon);
  Nat paired = 0;
  for (Nat x = 0; x < horizon; ++x)
    if (pm[x] != x) ++paired;
  if (Rat::ratio(paired, horizon) < Rat(1) - tol)
    throw ValidationError(
        "generic_iso_char2: pair part measures " +
        Rat::ratio(paired, horizon).str() + " at the horizon, too far from one");

  auto canonical = dense_canonical_pairs(horizon);

  PartialIsoWitness w;
  w.source = A;
  w.target = canonical_12(PairLayout::DensePairs);

  std::vector<std::pair<Nat, Nat>> table;
  std::unordered_set<Nat> used;
  std::size_t next = 0;
  for (const auto& e : pairs.entries()) {
    if (next >= canonical.size()) break;
    if (e.x >= horizon || e.y >= horizon) continue;
    if (!A.related(e.x, e.y) || e.x == e.y)
      throw ScenarioError("enumerated pair (" + std::to_string(e.x) + "," +
                          std::to_string(e.y) + ") is not a class of the input");
    if (used.count(e.x) || used.count(e.y))
      throw ScenarioError("pair enumeration repeats element " +
                          std::to_string(used.count(e.x) ? e.x : e.y));
    used.insert(e.x);
    used.insert(e.y);
    table.emplace_back(e.x, canonical[next].first);
    table.emplace_back(e.y, canonical[next].second);
    ++next;
  }
  if (next < canonical.size())
    w.warnings.push_back("pair enumeration exhausted after " +
                         std::to_string(next) + " of " +
                         std::to_string(canonical.size()) +
                         " canonical pairs below the horizon");
  fill_witness_tables(w, std::move(table), horizon, tol);
  return w;
}

PartialIsoWitness invert_partial_iso(const PartialIsoWitness& w, Nat horizon) {
  PartialIsoWitness out;
  out.source = w.target;
  out.target = w.source;
  out.warnings = w.warnings;
  std::vector<std::pair<Nat, Nat>> table;
  table.reserve(w.table.size());
  for (const auto& [x, y] : w.table) table.emplace_back(y, x);
  fill_witness_tables(out, std::move(table), horizon,
                      w.domain_profile.tolerance);
  return out;
}

PartialIsoWitness compose_partial_iso(const PartialIsoWitness& first,
                                      const PartialIsoWitness& second,
                                      Nat horizon) {
  PartialIsoWitness out;
  out.source = first.source;
  out.target = second.target;
  out.warnings = first.warnings;
  out.warnings.insert(out.warnings.end(), second.warnings.begin(),
                      second.warnings.end());
  std::vector<std::pair<Nat, Nat>> table;
  for (const auto& [x, y] : first.table) {
    auto z = second.theta(y);
    if (z) table.emplace_back(x, *z);
  }
  fill_witness_tables(out, std::move(table), horizon,
                      first.domain_profile.tolerance);
  return out;
}

PartialIsoWitness merge_partial_iso(const PartialIsoWitness& fwd,
                                    const PartialIsoWitness& inv, Nat horizon) {
  PartialIsoWitness out;
  out.source = fwd.source;
  out.target = fwd.target;
  std::map<Nat, Nat> merged;
  for (const auto& [x, y] : fwd.table) {
    auto back = inv.theta(y);
    if (back && *back != x)
      throw ScenarioError("claimed inverse disagrees at " + std::to_string(y));
    merged.emplace(x, y);
  }
  for (const auto& [y, x] : inv.table) {
    auto it = merged.find(x);
    if (it != merged.end()) {
      if (it->second != y)
        throw ScenarioError("merge conflict at " + std::to_string(x));
      continue;
    }
    merged.emplace(x, y);
  }
  std::vector<std::pair<Nat, Nat>> table(merged.begin(), merged.end());
  fill_witness_tables(out, std::move(table), horizon,
                      fwd.domain_profile.tolerance);
  return out;
}

WeakCoarseWitness coarse_iso_char1(const EqStructure& A, const EqStructure& B,
                                   Nat horizon, Rat tol) {
  if (horizon < 16) throw ValidationError("coarse_iso_char1: horizon too small");

  // classes below the horizon per side, singles separated out
  auto gather = [horizon](const EqStructure& S, std::vector<bool>& singles,
                          std::map<Nat, std::vector<std::vector<Nat>>>& by_size,
                          Nat& stranded) {
    singles.assign(horizon, false);
    for (const auto& c : classes_below(S, horizon)) {
      if (!c.complete) {
        stranded += c.below.size();
        continue;
      }
      if (c.below.size() == 1)
        singles[c.below.front()] = true;
      else
        by_size[c.below.size()].push_back(c.below);
    }
  };
  std::vector<bool> ua, ub;
  std::map<Nat, std::vector<std::vector<Nat>>> acls, bcls;
  Nat stranded = 0;
  gather(A, ua, acls, stranded);
  gather(B, ub, bcls, stranded);

  Nat na = 0, nb = 0;
  for (Nat x = 0; x < horizon; ++x) {
    if (ua[x]) ++na;
    if (ub[x]) ++nb;
  }
  if (Rat::ratio(na, horizon) < Rat(1) - tol ||
      Rat::ratio(nb, horizon) < Rat(1) - tol)
    throw ValidationError(
        "coarse_iso_char1: a singleton part measures too far from density one");

  WeakCoarseWitness w;
  w.source = A;
  w.target = B;
  w.horizon = horizon;
  w.theta = [](Nat x) { return x; };

  // U = singles on both sides; V = U minus the trim
  w.C.assign(horizon, false);
  std::vector<Nat> only_a, only_b, both;
  for (Nat x = 0; x < horizon; ++x) {
    if (ua[x] && ub[x]) {
      both.push_back(x);
      w.C[x] = true;
    } else if (ua[x]) {
      only_a.push_back(x);
    } else if (ub[x]) {
      only_b.push_back(x);
    }
  }
  Nat trim = only_a.size() > only_b.size() ? only_a.size() - only_b.size()
                                           : only_b.size() - only_a.size();
  trim = std::min<Nat>(trim, both.size());
  for (Nat t = 0; t < trim; ++t) {
    Nat v = both[both.size() - 1 - t];  // largest elements of U leave C
    w.C[v] = false;
    only_a.push_back(v);
    only_b.push_back(v);
  }
  if (trim > 0)
    w.warnings.push_back("trimmed " + std::to_string(trim) +
                         " elements off the agreement set");
  std::sort(only_a.begin(), only_a.end());
  std::sort(only_b.begin(), only_b.end());

  auto fwd = std::make_shared<Table>();
  for (Nat x = 0; x < horizon; ++x)
    if (w.C[x]) fwd->emplace(x, x);
  // free singles, least to least
  Nat matched_singles = std::min(only_a.size(), only_b.size());
  for (Nat t = 0; t < matched_singles; ++t) fwd->emplace(only_a[t], only_b[t]);
  stranded += (only_a.size() - matched_singles) +
              (only_b.size() - matched_singles);
  // larger classes, size by size, least min to least min, members ascending
  for (auto& [size, list] : acls) {
    auto bit = bcls.find(size);
    std::size_t pairs_here =
        bit == bcls.end() ? 0 : std::min(list.size(), bit->second.size());
    for (std::size_t t = 0; t < pairs_here; ++t)
      for (Nat m = 0; m < size; ++m)
        fwd->emplace(list[t][m], bit->second[t][m]);
    stranded += (list.size() - pairs_here) * size;
  }
  for (auto& [size, list] : bcls) {
    std::size_t used = acls.count(size)
                           ? std::min(list.size(), acls[size].size())
                           : 0;
    stranded += (list.size() - used) * size;
  }
  if (Rat::ratio(stranded, horizon) > tol)
    throw ScenarioError("coarse_iso_char1: " + std::to_string(stranded) +
                        " elements below the horizon have no class match");

  w.unmatched = stranded;
  w.f = lookup_fn(fwd);

  std::vector<Nat> cvals, ivals;
  for (Nat x = 0; x < horizon; ++x)
    if (w.C[x]) {
      cvals.push_back(x);
      ivals.push_back(x);  // identity on C
    }
  w.c_profile = profile_of(cvals, horizon, tol);
  w.image_profile = profile_of(ivals, horizon, tol);
  return w;
}

namespace {

// Lazily extended partner layout for the exact-density schedule. Slots pair
// with partner[x]; -1 marks a singleton.
struct ScheduleBuilder {
  std::vector<std::int64_t> partner;
  Rat q_cur;
  Nat s_cur = 0;
  Nat count_cur = 0;  // type-one elements below s_cur
  std::vector<Rat> plan;
  std::size_t pos = 0;  // next plan entry

  void append_singles(Nat c) {
    for (Nat t = 0; t < c; ++t) partner.push_back(-1);
  }
  void append_pairs(Nat elems) {
    for (Nat t = 0; t + 1 < elems; t += 2) {
      std::int64_t a = static_cast<std::int64_t>(partner.size());
      partner.push_back(a + 1);
      partner.push_back(a);
    }
  }

  void step(Rat q_next, bool from_plan) {
    Nat i = static_cast<Nat>(q_next.num());
    Nat j = static_cast<Nat>(q_next.den());
    Nat s_next = j * s_cur;
    if (s_next > 100000000)
      throw ValidationError("density schedule grows past the supported range");
    Nat target = i * s_cur;  // q_next * s_next
    if (target <= count_cur) {
      if (from_plan)
        throw ValidationError("density schedule: singleton increment not positive");
      throw Error("schedule step lost positivity off-plan");
    }
    Nat singles = target - count_cur;
    Nat pair_elems = (s_next - s_cur) - singles;
    if (pair_elems == 0 || singles >= s_next - s_cur) {
      if (from_plan)
        throw ValidationError("density schedule: pair increment not positive");
      throw Error("schedule step lost positivity off-plan");
    }
    if (singles % 2 != 0 || pair_elems % 2 != 0)
      throw Error("schedule step parity broke");
    append_singles(singles);
    append_pairs(pair_elems);
    q_cur = q_next;
    s_cur = s_next;
    count_cur = target;
  }

  void extend() {
    if (pos < plan.size())
      step(plan[pos++], true);
    else
      step(q_cur, false);
  }

  void ensure(Nat x) {
    while (partner.size() <= x) extend();
  }
};

}  // namespace

Build12 build_12_density_q(const DyadicSchedule& sched) {
  if (sched.q.empty())
    throw ValidationError("build_12_density_q: empty schedule");
  for (const Rat& q : sched.q)
    if (!(q > Rat(0)) || !(q < Rat(1)))
      throw ValidationError("build_12_density_q: schedule entry " + q.str() +
                            " is not strictly inside (0,1)");

  auto b = std::make_shared<ScheduleBuilder>();
  b->plan = sched.q;
  Rat q0 = b->plan[0];
  Nat i = static_cast<Nat>(q0.num());
  Nat j = static_cast<Nat>(q0.den());
  b->q_cur = q0;
  b->s_cur = 2 * j;
  b->count_cur = 2 * i;
  b->append_singles(2 * i);
  b->append_pairs(2 * (j - i));
  b->pos = 1;

  Build12 out;
  out.checkpoints.push_back(b->s_cur);
  out.type1_counts.push_back(b->count_cur);
  while (b->pos < b->plan.size()) {
    b->extend();
    out.checkpoints.push_back(b->s_cur);
    out.type1_counts.push_back(b->count_cur);
  }
  for (std::size_t n = 0; n < out.checkpoints.size(); ++n) {
    Rat q = sched.q[n];
    if (Rat(static_cast<std::int64_t>(out.type1_counts[n])) !=
        q * Rat(static_cast<std::int64_t>(out.checkpoints[n])))
      throw Error("checkpoint count drifted from the schedule");
  }

  out.E.note = "staged layout with scheduled singleton density";
  out.E.related = [b](Nat x, Nat y) {
    if (x == y) return true;
    b->ensure(std::max(x, y));
    return b->partner[x] == static_cast<std::int64_t>(y);
  };
  out.E.members_of = [b](Nat x) -> std::optional<std::vector<Nat>> {
    b->ensure(x + 1);
    if (b->partner[x] < 0) return std::vector<Nat>{x};
    Nat p = static_cast<Nat>(b->partner[x]);
    return std::vector<Nat>{std::min(x, p), std::max(x, p)};
  };
  return out;
}

StagedSubrelation staged_subrelation(const EqStructure& A,
                                     const std::function<Rat(Nat)>& q,
                                     Nat budget, Nat stages) {
  if (budget < 8) throw ValidationError("staged_subrelation: budget too small");

  auto pm = partner_map(A, budget);
  auto P = std::make_shared<std::vector<Nat>>(budget);
  for (Nat x = 0; x < budget; ++x)
    (*P)[x] = pm[x] == x ? kNone : pm[x];

  // prefix counts of budget-horizon singles, for the divergence records
  std::vector<Nat> singles_prefix(budget + 1, 0);
  for (Nat x = 0; x < budget; ++x)
    singles_prefix[x + 1] = singles_prefix[x] + ((*P)[x] == kNone ? 1 : 0);

  // flip buckets: flip_at[v] = elements whose partner equals v
  std::vector<std::vector<Nat>> flip_at(budget + 1);
  for (Nat x = 0; x < budget; ++x)
    if ((*P)[x] != kNone) flip_at[(*P)[x]].push_back(x);

  StagedSubrelation out;
  auto state = std::make_shared<std::vector<std::uint8_t>>(budget, 0);

  auto decide = [&](Nat x, bool single, B1Rule rule, Nat stage) {
    (*state)[x] = single ? 1 : 2;
    out.log.push_back({x, single, rule, stage});
  };

  auto assemble = [&]() {
    out.frontier = out.pairs.back().n;
    Nat frontier = out.frontier;
    for (Nat x = 0; x < frontier; ++x)
      if ((*state)[x] == 1 && (*P)[x] != kNone) out.b1_minus_a1.push_back(x);

    out.B.note = "staged computable subrelation";
    out.B.in_universe = [frontier](Nat x) { return x < frontier; };
    out.B.related = [P, state, frontier](Nat x, Nat y) {
      if (x >= frontier || y >= frontier) return false;
      if (x == y) return true;
      return (*P)[x] == y && (*state)[x] != 1 && (*state)[y] != 1;
    };
    out.B.members_of = [P, state,
                        frontier](Nat x) -> std::optional<std::vector<Nat>> {
      if (x >= frontier) return std::nullopt;
      if ((*state)[x] == 1) return std::vector<Nat>{x};
      Nat p = (*P)[x];
      if (p == kNone || p >= frontier || (*state)[p] == 1)
        return std::vector<Nat>{x};
      return std::vector<Nat>{std::min(x, p), std::max(x, p)};
    };
    out.b1 = [state](Nat x) -> std::optional<bool> {
      if (x >= state->size() || (*state)[x] == 0) return std::nullopt;
      return (*state)[x] == 1;
    };
  };

  out.pairs.push_back({1, 1});
  decide(0, true, B1Rule::Seed, 0);

  for (Nat i = 0;; ++i) {
    if (stages > 0 && i >= stages) break;
    if (i > 60) break;
    Rat thr = q(i) + Rat::pow2(-static_cast<int>(i));
    Nat n_prev = out.pairs.back().n;
    Nat s_prev = out.pairs.back().s;
    Nat n_min = std::max(n_prev + 1, Nat(1) << (i + 1));

    bool found = false;
    Nat fn = 0, fs = 0, fcnt = 0;
    if (n_min <= budget) {
      // invisible = partner strictly above the stage; count below n_min
      // maintained across stages, the rest scanned per stage
      Nat base = 0;
      for (Nat x = 0; x < std::min(n_min, budget); ++x)
        if ((*P)[x] > s_prev + 1) ++base;
      for (Nat s = s_prev + 1; s <= budget && !found; ++s) {
        Nat cnt = base;
        for (Nat n = n_min; n <= s && n <= budget; ++n) {
          if (Rat::ratio(cnt, n) < thr) {
            found = true;
            fn = n;
            fs = s;
            fcnt = cnt;
            break;
          }
          if (n < budget && (*P)[n] > s) ++cnt;
        }
        if (!found && s + 1 <= budget)
          for (Nat x : flip_at[s + 1])
            if (x < n_min) --base;
      }
    }
    if (!found) {
      if (stages > 0) {
        assemble();
        throw StagedExhausted(
            "staged_subrelation: stage " + std::to_string(i + 1) +
                " found no pair inside the budget",
            std::move(out));
      }
      break;
    }

    out.pairs.push_back({fn, fs});
    Nat idx = out.pairs.size() - 1;

    // window decisions, committed in order: the scan then the echo
    for (Nat x = n_prev; x < fn; ++x) {
      if ((*state)[x] != 0) continue;
      Nat p = (*P)[x];
      bool paired = p != kNone && p < fs && (*state)[p] != 1;
      decide(x, !paired, B1Rule::WindowScan, idx);
    }
    for (Nat y = s_prev; y < fs && y < budget; ++y) {
      if ((*state)[y] != 0) continue;
      Nat p = (*P)[y];
      if (p != kNone && (*state)[p] == 1)
        decide(y, true, B1Rule::PartnerEcho, idx);
    }

    DivergenceRecord d;
    d.index = idx;
    d.exponent = i;
    d.n = fn;
    d.s = fs;
    d.stage_density = Rat::ratio(fcnt, fn);
    d.true_density = Rat::ratio(singles_prefix[fn], fn);
    d.e = d.stage_density - d.true_density;
    d.bound = thr - d.true_density;
    d.ok = d.e < d.bound;
    out.divergence.push_back(d);
  }

  assemble();
  return out;
}

InterleavedBijection interleaved_bijection(const std::vector<Nat>& A,
                                           const std::vector<Nat>& B,
                                           const std::vector<Nat>& C,
                                           const std::vector<Nat>& D,
                                           Nat horizon) {
  for (std::size_t t = 1; t < A.size(); ++t)
    if (A[t] <= A[t - 1])
      throw ValidationError("interleaved_bijection: first set must ascend");
  for (std::size_t t = 1; t < B.size(); ++t)
    if (B[t] <= B[t - 1])
      throw ValidationError("interleaved_bijection: second set must ascend");
  std::unordered_set<Nat> aset(A.begin(), A.end()), bset(B.begin(), B.end());
  std::unordered_set<Nat> cset, dset;
  for (Nat c : C) {
    if (!aset.count(c))
      throw ValidationError("interleaved_bijection: routed element " +
                            std::to_string(c) + " is outside its host set");
    if (!cset.insert(c).second)
      throw ValidationError("interleaved_bijection: repeated enumeration");
  }
  for (Nat d : D) {
    if (!bset.count(d))
      throw ValidationError("interleaved_bijection: routed element " +
                            std::to_string(d) + " is outside its host set");
    if (!dset.insert(d).second)
      throw ValidationError("interleaved_bijection: repeated enumeration");
  }

  InterleavedBijection out;
  auto fwd = std::make_shared<Table>();
  auto inv = std::make_shared<Table>();
  std::unordered_set<Nat> used_img;
  std::size_t bptr = 0, dptr = 0;
  bool c_open = true, a_open = true;

  auto assign = [&](Nat x, Nat y) {
    fwd->emplace(x, y);
    inv->emplace(y, x);
    used_img.insert(y);
    out.table.emplace_back(x, y);
  };

  std::size_t top = std::max(A.size(), C.size());
  for (std::size_t s = 0; s < top && (c_open || a_open); ++s) {
    if (c_open && s < C.size() && !fwd->count(C[s])) {
      while (dptr < D.size() && used_img.count(D[dptr])) ++dptr;
      if (dptr == D.size()) {
        out.warnings.push_back("routed pool ran dry at stage " +
                               std::to_string(s));
        c_open = false;
      } else {
        assign(C[s], D[dptr]);
      }
    }
    if (s < A.size() && !fwd->count(A[s])) {
      while (bptr < B.size() && used_img.count(B[bptr])) ++bptr;
      if (bptr == B.size()) {
        out.warnings.push_back("image pool ran dry at stage " +
                               std::to_string(s));
        a_open = false;
        break;
      }
      assign(A[s], B[bptr]);
    }
  }
  out.matched = out.table.size();
  out.f = lookup_fn(fwd);
  out.f_inv = lookup_fn(inv);

  // exact prefix bounds: strays against the routed masses
  std::vector<Nat> image_stray, preimage_stray, cvals(C.begin(), C.end()),
      dvals(D.begin(), D.end());
  for (const auto& [x, y] : *fwd) {
    if (cset.count(x) && !dset.count(y)) image_stray.push_back(y);
    if (dset.count(y) && !cset.count(x)) preimage_stray.push_back(x);
  }
  std::sort(image_stray.begin(), image_stray.end());
  std::sort(preimage_stray.begin(), preimage_stray.end());
  std::sort(cvals.begin(), cvals.end());
  std::sort(dvals.begin(), dvals.end());
  auto below = [](const std::vector<Nat>& v, Nat bound) -> Nat {
    return std::lower_bound(v.begin(), v.end(), bound) - v.begin();
  };
  for (std::size_t n = 0; n < std::min(A.size(), B.size()); ++n) {
    if (A[n] >= horizon || B[n] >= horizon) break;
    BijectionBound bd;
    bd.n = n;
    bd.a_n = A[n];
    bd.b_n = B[n];
    bd.image_stray = below(image_stray, B[n]);
    bd.c_mass = below(cvals, A[n]);
    bd.preimage_stray = below(preimage_stray, A[n]);
    bd.d_mass = below(dvals, B[n]);
    bd.ok = bd.image_stray <= bd.c_mass && bd.preimage_stray <= bd.d_mass;
    out.bounds.push_back(bd);
  }
  return out;
}

WeakCoarse12 weak_coarse_iso_12(const EqStructure& A, const EqStructure& B,
                                const std::function<Rat(Nat)>& q, Nat budget,
                                Rat tol) {
  auto pm_a = partner_map(A, budget);
  auto pm_b = partner_map(B, budget);
  Nat sa = 0, sb = 0;
  for (Nat x = 0; x < budget; ++x) {
    if (pm_a[x] == x) ++sa;
    if (pm_b[x] == x) ++sb;
  }
  Rat da = Rat::ratio(sa, budget), db = Rat::ratio(sb, budget);
  Rat declared = q(10);
  auto gap = [](Rat a, Rat b) { return a > b ? a - b : b - a; };
  if (gap(da, db) > tol || gap(da, declared) > tol || gap(db, declared) > tol)
    throw ValidationError(
        "weak_coarse_iso_12: singleton densities " + da.str() + " and " +
        db.str() + " do not both sit within tolerance of " + declared.str());

  WeakCoarse12 out;
  out.C = staged_subrelation(A, q, budget);
  out.D = staged_subrelation(B, q, budget);
  Nat h = std::min(out.C.frontier, out.D.frontier);
  out.work_horizon = h;

  auto single_in = [](const StagedSubrelation& S, Nat x) {
    auto v = S.b1(x);
    return v && *v;
  };

  // pair parts wholly below the work horizon, ascending by least member
  auto pair_part = [&](const StagedSubrelation& S, const std::vector<Nat>& pm) {
    std::vector<std::pair<Nat, Nat>> out_pairs;
    for (Nat x = 0; x < h; ++x) {
      if (single_in(S, x)) continue;
      Nat p = pm[x];
      if (p > x && p < h && !single_in(S, p)) out_pairs.emplace_back(x, p);
    }
    return out_pairs;
  };
  auto c2 = pair_part(out.C, pm_a);
  auto d2 = pair_part(out.D, pm_b);
  std::size_t matched_pairs = std::min(c2.size(), d2.size());

  std::vector<Nat> c1, d1, c1_minus_a1, d1_minus_b1;
  for (Nat x = 0; x < h; ++x) {
    if (single_in(out.C, x)) {
      c1.push_back(x);
      if (pm_a[x] != x) c1_minus_a1.push_back(x);
    }
    if (single_in(out.D, x)) {
      d1.push_back(x);
      if (pm_b[x] != x) d1_minus_b1.push_back(x);
    }
  }
  out.g1 = interleaved_bijection(c1, d1, c1_minus_a1, d1_minus_b1, h);

  std::vector<std::optional<Nat>> f(h);
  std::vector<bool> in_c2(h, false);
  for (std::size_t t = 0; t < matched_pairs; ++t) {
    out.g2.emplace_back(c2[t].first, d2[t].first);
    f[c2[t].first] = d2[t].first;
    f[c2[t].second] = d2[t].second;
    in_c2[c2[t].first] = true;
    in_c2[c2[t].second] = true;
  }
  if (matched_pairs < c2.size() || matched_pairs < d2.size())
    out.witness.warnings.push_back(
        "pair parts matched on " + std::to_string(matched_pairs) +
        " classes; the longer side keeps " +
        std::to_string(std::max(c2.size(), d2.size()) - matched_pairs) +
        " unmatched");
  for (Nat x : c1) {
    auto y = out.g1.f(x);
    if (y) f[x] = *y;
  }

  out.E.assign(h, false);
  Nat e_count = 0;
  for (Nat x = 0; x < h; ++x) {
    bool member = false;
    if (in_c2[x]) {
      member = true;
    } else if (single_in(out.C, x) && pm_a[x] == x) {
      auto y = out.g1.f(x);
      member = y && pm_b[*y] == *y;
    }
    out.E[x] = member;
    if (member) ++e_count;
  }
  out.e_density = Rat::ratio(e_count, h);

  // exhaustive three-case isomorphism check on E
  std::vector<Nat> emembers;
  for (Nat x = 0; x < h; ++x)
    if (out.E[x]) emembers.push_back(x);
  for (std::size_t i = 0; i < emembers.size() && out.cases.ok; ++i) {
    Nat x = emembers[i];
    for (std::size_t j = i + 1; j < emembers.size(); ++j) {
      Nat y = emembers[j];
      bool a_rel = pm_a[x] == y;
      bool b_rel = pm_b[*f[x]] == *f[y];
      if (in_c2[x] && in_c2[y])
        ++out.cases.case1;
      else if (!in_c2[x] && !in_c2[y])
        ++out.cases.case3;
      else
        ++out.cases.case2;
      if (a_rel != b_rel) {
        out.cases.ok = false;
        out.cases.detail = "relation mismatch between " + std::to_string(x) +
                           " and " + std::to_string(y);
        break;
      }
    }
  }

  // complement identity on the boundary-clean region
  std::unordered_set<Nat> c1a1(c1_minus_a1.begin(), c1_minus_a1.end());
  out.complement_mismatches = 0;
  Nat clean = 0;
  for (Nat x = 0; x < h; ++x) {
    bool c_single = single_in(out.C, x);
    if (!c_single && !in_c2[x]) continue;  // pair cut by the horizon or unmatched
    if (c_single && !out.g1.f(x)) continue;
    ++clean;
    bool rhs = false;
    if (c_single) {
      if (c1a1.count(x)) {
        rhs = true;
      } else {
        auto y = out.g1.f(x);
        rhs = y && single_in(out.D, *y) && pm_b[*y] != *y;
      }
    }
    if (rhs != !out.E[x]) ++out.complement_mismatches;
  }
  out.complement_identity = clean > 0 && out.complement_mismatches == 0;

  auto farr = std::make_shared<std::vector<std::optional<Nat>>>(std::move(f));
  out.witness.source = A;
  out.witness.target = B;
  out.witness.horizon = h;
  out.witness.theta = [farr, h](Nat x) {
    if (x < h && (*farr)[x]) return *(*farr)[x];
    return x;
  };
  out.witness.C = out.E;
  out.witness.f = [farr, h](Nat x) -> std::optional<Nat> {
    if (x >= h) return std::nullopt;
    return (*farr)[x];
  };
  Nat unmatched = 0;
  std::vector<Nat> cvals, ivals;
  for (Nat x = 0; x < h; ++x) {
    if (!(*farr)[x]) ++unmatched;
    if (out.E[x]) {
      cvals.push_back(x);
      ivals.push_back(*(*farr)[x]);
    }
  }
  std::sort(ivals.begin(), ivals.end());
  out.witness.unmatched = unmatched;
  out.witness.c_profile = profile_of(cvals, h, tol);
  out.witness.image_profile = profile_of(ivals, h, tol);
  return out;
}

SparseSimple sparse_simple_set(const OracleRegistry<EnumerationOracle>& reg,
                               Nat budget) {
  SparseSimple out;
  std::vector<std::pair<Nat, Nat>> plan;
  std::unordered_set<Nat> chosen;
  for (std::size_t e = 0; e < reg.size(); ++e) {
    SimpleCert cert;
    cert.e = e;
    if (e < 62) {
      Nat threshold = Nat(1) << e;
      for (const auto& [stage, value] : reg.at(e).entries()) {
        if (stage > budget) break;
        if (value > threshold) {
          cert.element = value;
          cert.stage = stage;
          if (chosen.insert(value).second) plan.emplace_back(stage, value);
          break;
        }
      }
    }
    out.hits.push_back(cert);
  }
  std::sort(plan.begin(), plan.end());
  out.S = EnumerationOracle("sparse simple set", budget, plan);
  for (Nat k = 0; k < 62 && (Nat(1) << k) <= 2 * budget; ++k) {
    DensityCert dc;
    dc.k = k;
    dc.count = 0;
    for (const auto& [stage, value] : plan)
      if (value < (Nat(1) << k)) ++dc.count;
    dc.ok = dc.count <= k;
    out.density.push_back(dc);
  }
  return out;
}

}  // namespace eqd
