#include "eqdensity/density.hpp"

#include <algorithm>

namespace eqd {

Rat prefix_density(const SetPred& member, Nat n) {
  Nat count = 0;
  for (Nat x = 0; x <= n; ++x)
    if (member(x)) ++count;
  return Rat::ratio(count, n + 1);
}

DensityProfile density_profile(const SetPred& member, Nat points, Nat window,
                               Rat tolerance) {
  if (points == 0) throw ValidationError("density_profile: no points");
  if (window == 0 || window > points)
    throw ValidationError("density_profile: window must be in [1, points]");
  DensityProfile p;
  p.window = window;
  p.tolerance = tolerance;
  p.values.reserve(points);
  Nat count = 0;
  for (Nat n = 0; n < points; ++n) {
    if (member(n)) ++count;
    p.values.push_back(Rat::ratio(count, n + 1));
  }
  p.liminf_est = p.values[points - window];
  p.limsup_est = p.values[points - window];
  for (Nat n = points - window; n < points; ++n) {
    if (p.values[n] < p.liminf_est) p.liminf_est = p.values[n];
    if (p.values[n] > p.limsup_est) p.limsup_est = p.values[n];
  }
  p.converged = (p.limsup_est - p.liminf_est) <= tolerance;
  return p;
}

namespace {

// Segment condition for step k: |A_s ∩ [base, n)| / (n - base) >= 1 - 2^-k.
// Stated as (len - count) * 2^k <= len to stay exact for every k.
bool segment_ok(Nat len, Nat count, Nat k) {
  Nat gap = len - count;
  if (gap == 0) return true;
  if (k >= 62) return false;  // gap >= 1 needs len >= 2^k, out of desk range
  __int128 lhs = static_cast<__int128>(gap) << k;
  return lhs <= static_cast<__int128>(len);
}

// Least n in (base, s) whose segment meets the step-k bound at stage s.
std::optional<Nat> least_checkpoint(const EnumerationOracle& A, Nat base,
                                    Nat s, Nat k) {
  Nat count = 0;
  for (Nat n = base + 1; n < s; ++n) {
    if (A.contains_at(n - 1, s)) ++count;  // element n-1 joins [base, n)
    if (segment_ok(n - base, count, k)) return n;
  }
  return std::nullopt;
}

}  // namespace

DenseSubset extract_dense_subset(const EnumerationOracle& A, Nat budget,
                                 Nat target_coverage) {
  if (budget > A.budget())
    throw BudgetExceeded("extract_dense_subset: budget past the oracle's");
  if (target_coverage == 0) target_coverage = budget / 2;
  if (target_coverage >= budget)
    throw ValidationError(
        "extract_dense_subset: checkpoints sit strictly below stages, "
        "target_coverage must be under the budget");
  DenseSubset out;
  Nat base = 0;
  Nat k = 0;
  while (base < target_coverage) {
    ++k;
    // The least certifying stage lives in [base+2, budget]; the condition is
    // monotone in s, so probe by doubling and then binary search.
    std::optional<Nat> found_s;
    Nat lo = base + 2;
    Nat span = 1;
    Nat probe = lo;
    Nat last_fail = lo - 1;
    while (probe <= budget) {
      if (least_checkpoint(A, base, probe, k)) {
        found_s = probe;
        break;
      }
      last_fail = probe;
      if (probe == budget) break;
      probe = std::min(budget, probe + span);
      span *= 2;
    }
    if (found_s && *found_s > last_fail + 1) {
      Nat hi = *found_s;
      lo = last_fail + 1;
      while (lo < hi) {
        Nat mid = lo + (hi - lo) / 2;
        if (least_checkpoint(A, base, mid, k))
          hi = mid;
        else
          lo = mid + 1;
      }
      found_s = lo;
    }
    if (!found_s) {
      out.certificate.coverage = base;
      throw DenseExtractionExhausted(
          A.label() + ": step " + std::to_string(k) +
              " found no certifying stage within budget " +
              std::to_string(budget),
          out);
    }
    Nat s_k = *found_s;
    Nat n_k = *least_checkpoint(A, base, s_k, k);
    SegmentCertificate seg;
    seg.k = k;
    seg.n_k = n_k;
    seg.s_k = s_k;
    seg.seg_begin = base;
    seg.seg_len = n_k - base;
    for (Nat x = base; x < n_k; ++x) {
      bool in = A.contains_at(x, s_k);
      out.member.push_back(in);
      if (in) ++seg.seg_count;
    }
    seg.bound_met = segment_ok(seg.seg_len, seg.seg_count, k);
    out.certificate.segments.push_back(seg);
    base = n_k;
  }
  out.certificate.coverage = base;
  return out;
}

std::pair<Rat, Rat> square_density_check(const SetPred& member, Nat n) {
  if (n == 0) throw ValidationError("square_density_check: n must be positive");
  Nat count = 0;
  for (Nat x = 0; x < n; ++x)
    if (member(x)) ++count;
  Rat d = Rat::ratio(count, n);
  return {d, d * d};
}

std::vector<std::pair<Rat, Rat>> square_density_sweep(const SetPred& member,
                                                      Nat n_max) {
  std::vector<std::pair<Rat, Rat>> out;
  out.reserve(n_max);
  Nat count = 0;
  for (Nat n = 1; n <= n_max; ++n) {
    if (member(n - 1)) ++count;
    Rat d = Rat::ratio(count, n);
    out.emplace_back(d, d * d);
  }
  return out;
}

DiagonalComplement::DiagonalComplement(
    const OracleRegistry<EnumerationOracle>& reg)
    : reg_(&reg) {
  diag_.resize(reg.size());
  for (std::size_t e = 0; e < reg.size(); ++e) {
    if (e >= 63) break;  // 2^e past any desk-scale element
    Nat threshold = Nat(1) << e;
    for (const auto& [stage, value] : reg.at(e).entries()) {
      if (value > threshold) {
        diag_[e] = {true, value, stage};
        break;
      }
    }
  }
}

std::optional<Nat> DiagonalComplement::diagonal_value(std::size_t e,
                                                      Nat stage) const {
  if (e >= diag_.size()) return std::nullopt;
  const Diag& d = diag_[e];
  if (!d.defined || d.stage > stage) return std::nullopt;
  return d.value;
}

bool DiagonalComplement::contains(Nat a, Nat b) const {
  Nat m = std::max(a, b);
  std::size_t bound = std::min<std::size_t>(diag_.size(), m);
  for (std::size_t e = 0; e < bound; ++e) {
    const Diag& d = diag_[e];
    if (d.defined && d.stage <= m && (a == d.value || b == d.value))
      return false;
  }
  return true;
}

Nat DiagonalComplement::count_in_square(Nat side) const {
  // Walk shells of constant max-coordinate m, maintaining the set of
  // excluded values visible at m. A diagonal value v_e becomes visible at
  // m = max(e+1, its entry stage).
  std::vector<std::pair<Nat, Nat>> events;  // (first visible m, value)
  for (std::size_t e = 0; e < diag_.size(); ++e) {
    if (!diag_[e].defined) continue;
    events.emplace_back(std::max<Nat>(e + 1, diag_[e].stage), diag_[e].value);
  }
  std::sort(events.begin(), events.end());
  std::size_t next_event = 0;
  std::vector<Nat> visible;
  Nat total = 0;
  for (Nat m = 0; m < side; ++m) {
    while (next_event < events.size() && events[next_event].first <= m)
      visible.push_back(events[next_event++].second);
    Nat shell = 2 * m + 1;
    bool m_excluded = false;
    Nat below = 0;
    for (Nat v : visible) {
      if (v == m) m_excluded = true;
      if (v < m) ++below;
    }
    total += m_excluded ? 0 : shell - 2 * below;
  }
  return total;
}

std::vector<DiagonalComplement::Witness> DiagonalComplement::witnesses(
    Nat horizon) const {
  std::vector<Witness> out;
  for (std::size_t e = 0; e < reg_->size(); ++e) {
    Witness w;
    w.oracle = e;
    if (e < diag_.size() && diag_[e].defined && diag_[e].value < horizon) {
      Nat v = diag_[e].value;
      const auto& oracle = reg_->at(e);
      for (Nat b : oracle.snapshot(oracle.budget())) {
        if (b >= horizon) break;
        if (!contains(v, b)) {
          w.found = true;
          w.a = v;
          w.b = b;
          break;
        }
      }
    }
    out.push_back(w);
  }
  return out;
}

TransferReport density_transfer_check(const SetPred& A, const SetPred& C,
                                      Nat N, Nat window, Rat tolerance) {
  std::vector<Nat> a;  // increasing enumeration of A below N
  Nat c_below = 0;     // |C ∩ [0, x)| maintained along the scan
  std::vector<Rat> relative, prefixes;
  for (Nat x = 0; x < N; ++x) {
    if (C(x) && !A(x))
      throw ContainmentError("density_transfer_check: C is not inside A");
    if (A(x)) {
      Nat n = a.size();
      if (n >= 1) {
        relative.push_back(Rat::ratio(c_below, n));
        prefixes.push_back(Rat::ratio(c_below, x));  // |C ∩ a_n| / a_n
      }
      a.push_back(x);
    }
    if (C(x)) ++c_below;
  }
  if (relative.size() < window || window == 0)
    throw ValidationError("density_transfer_check: window too large");
  TransferReport r;
  r.points = relative.size();
  r.relative_tail_max = relative[relative.size() - window];
  r.prefix_tail_max = prefixes[prefixes.size() - window];
  for (Nat i = relative.size() - window; i < relative.size(); ++i) {
    if (relative[i] > r.relative_tail_max) r.relative_tail_max = relative[i];
    if (prefixes[i] > r.prefix_tail_max) r.prefix_tail_max = prefixes[i];
  }
  r.consistent =
      !(r.relative_tail_max <= tolerance) || (r.prefix_tail_max <= tolerance);
  Nat count = c_below;
  r.c_density_at_horizon = Rat::ratio(count, N);
  return r;
}

}  // namespace eqd
