#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "eqdensity/oracles.hpp"
#include "eqdensity/rational.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

using SetPred = std::function<bool(Nat)>;

// rho_n(S) = |S ∩ {0..n}| / (n+1). This is the definition-level, inclusive
// prefix density. The square-density identity below uses the exclusive
// |S ∩ {0..n-1}| / n count instead; both conventions are deliberate.
Rat prefix_density(const SetPred& member, Nat n);

struct DensityProfile {
  std::vector<Rat> values;  // values[n] = rho_n for n < points
  Nat window = 0;
  Rat tolerance;
  Rat liminf_est;  // min over the trailing window
  Rat limsup_est;  // max over the trailing window
  bool converged = false;
};

DensityProfile density_profile(const SetPred& member, Nat points, Nat window,
                               Rat tolerance);

// One certified step of the dense-subset extraction. Segment k covers
// [n_{k-1}, n_k) and claims density at least (2^k - 1)/2^k there; B equals
// the oracle's stage-s_k snapshot on that segment.
struct SegmentCertificate {
  Nat k = 0;
  Nat n_k = 0;
  Nat s_k = 0;
  Nat seg_begin = 0;
  Nat seg_len = 0;
  Nat seg_count = 0;  // members of B in the segment
  bool bound_met = false;

  // (2^k - 1)/2^k; only representable for k <= 61, larger k mean the
  // segment had to be completely full and bound_met carries the check.
  std::optional<Rat> claimed() const {
    if (k > 61) return std::nullopt;
    return Rat((std::int64_t(1) << k) - 1, std::int64_t(1) << k);
  }
  Rat measured() const { return Rat::ratio(seg_count, seg_len); }
};

struct CheckpointCertificate {
  std::vector<SegmentCertificate> segments;
  Nat coverage = 0;  // B is decided on [0, coverage)
};

struct DenseSubset {
  std::vector<bool> member;  // decided on [0, coverage)
  CheckpointCertificate certificate;
};

struct DenseExtractionExhausted : BudgetExhausted {
  DenseExtractionExhausted(const std::string& msg, DenseSubset partial_in)
      : BudgetExhausted(msg), partial(std::move(partial_in)) {}
  DenseSubset partial;
};

// Stagewise extraction of a computable B inside a c.e. A of upper density
// one. Each step searches the least certifying stage s (then the least
// checkpoint n) with segment density at least (2^k - 1)/2^k, and decides B
// on the segment as membership in A at that certifying stage. Runs until B
// is decided past target_coverage (0 means budget/2; the target must sit
// below the budget since checkpoints are strictly below stages); a step
// that cannot certify within the budget throws, carrying the partial result.
DenseSubset extract_dense_subset(const EnumerationOracle& A, Nat budget,
                                 Nat target_coverage = 0);

// Exclusive densities (delta(n) = |A ∩ {0..n-1}|/n) for a decidable A and
// the induced product square: the second component is exactly the square of
// the first. The sweep form evaluates all prefixes up to n in one pass.
std::pair<Rat, Rat> square_density_check(const SetPred& member, Nat n);
std::vector<std::pair<Rat, Rat>> square_density_sweep(const SetPred& member,
                                                      Nat n_max);

// Diagonal complement against a registry standing in for W_0, W_1, ...
// A pair (a,b) with m = max(a,b) is excluded exactly when some e < m has its
// first enumerated element n_e > 2^e visible by stage m and a or b equals it.
class DiagonalComplement {
 public:
  explicit DiagonalComplement(const OracleRegistry<EnumerationOracle>& reg);

  bool contains(Nat a, Nat b) const;
  std::optional<Nat> diagonal_value(std::size_t e, Nat stage) const;

  // |C ∩ (side x side)|, computed incrementally over max-coordinate shells.
  Nat count_in_square(Nat side) const;

  struct Witness {
    std::size_t oracle = 0;
    bool found = false;
    Nat a = 0;
    Nat b = 0;
  };
  // Per registered oracle, a pair of its members outside C below the horizon
  // (absent for oracles too sparse or finite to produce one).
  std::vector<Witness> witnesses(Nat horizon) const;

 private:
  struct Diag {
    bool defined = false;
    Nat value = 0;
    Nat stage = 0;
  };
  const OracleRegistry<EnumerationOracle>* reg_;
  std::vector<Diag> diag_;
};

// Density transfer along the increasing enumeration a_0 < a_1 < ... of a
// decidable A: compares |C ∩ a_n|/n with the plain prefix density of C.
struct TransferReport {
  Nat points = 0;              // usable indices n (1..points)
  Rat relative_tail_max;       // max over trailing window of |C ∩ a_n|/n
  Rat prefix_tail_max;         // max over trailing window of |C ∩ a_n|/a_n
  bool consistent = false;     // prefix tail vanishes whenever relative does
  Rat c_density_at_horizon;    // inclusive prefix density of C at N-1
};

TransferReport density_transfer_check(const SetPred& A, const SetPred& C,
                                      Nat N, Nat window, Rat tolerance);

}  // namespace eqd
