#pragma once

// Isomorphism builders for (1,2)-structures: the pair-table partial
// isomorphism, the identity-based coarse witness, the exact-density
// schedule constructor, the staged computable subrelation, the interleaved
// zero-density bijection, their composition into a weak coarse isomorphism,
// and the sparse simple set feeding the obstruction demonstration.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqdensity/density.hpp"
#include "eqdensity/generic.hpp"
#include "eqdensity/oracles.hpp"
#include "eqdensity/structures.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

// Partial map theta between two structures with its domain kept explicit.
// Injective on the domain; density profiles of domain and range attached.
struct PartialIsoWitness {
  EqStructure source;
  EqStructure target;
  std::vector<std::pair<Nat, Nat>> table;  // assignment order
  std::function<std::optional<Nat>(Nat)> theta;
  std::function<std::optional<Nat>(Nat)> theta_inv;
  std::vector<Nat> domain;  // sorted
  std::vector<Nat> range;   // sorted
  DensityProfile domain_profile;
  DensityProfile range_profile;
  std::vector<std::string> warnings;
};

// Injectivity plus relation preservation, exhaustive on domain pairs below
// the horizon.
WitnessCheck verify_partial_iso(const PartialIsoWitness& w, Nat horizon);

// theta total below the horizon, agreeing with the set-bijection f on C;
// f extends theta off C by greedy class matching.
struct WeakCoarseWitness {
  EqStructure source;
  EqStructure target;
  Nat horizon = 0;
  std::function<Nat(Nat)> theta;
  std::vector<bool> C;  // membership below horizon
  std::function<std::optional<Nat>(Nat)> f;  // nullopt = unmatched leftover
  Nat unmatched = 0;    // elements below horizon without an image
  DensityProfile c_profile;
  DensityProfile image_profile;  // of f[C]
  std::vector<std::string> warnings;
};

// Pair table onto the dense canonical layout: the n-th enumerated size-2
// class of A lands on the n-th canonical pair, min to min. The input pair
// enumeration may arrive in any order; the table follows it. Requires the
// measured density of A's pair part to sit within tol of one. A pair the
// relation disowns is a scenario error; pair material running out before
// the canonical pairs at the horizon only warns.
PartialIsoWitness generic_iso_char2(const EqStructure& A,
                                    const PairEnumerationOracle& pairs,
                                    Nat horizon, Rat tol = Rat(1, 20));

// theta_inv of w as a witness in its own right (domain and range swap).
PartialIsoWitness invert_partial_iso(const PartialIsoWitness& w, Nat horizon);

// Composition second-after-first where both legs are defined. The middle
// structures must be the same object in spirit; no structural check beyond
// the relation agreement that verify_partial_iso performs on the result.
PartialIsoWitness compose_partial_iso(const PartialIsoWitness& first,
                                      const PartialIsoWitness& second,
                                      Nat horizon);

// One witness deciding x by whichever leg converges first: forward theta if
// defined, otherwise the preimage under the claimed-inverse witness. Domain
// is the union; a disagreement where both speak is a scenario error.
PartialIsoWitness merge_partial_iso(const PartialIsoWitness& fwd,
                                    const PartialIsoWitness& inv, Nat horizon);

// Identity-based witness between two structures whose singleton parts both
// have measured density within tol of one. U = both-sides-singletons; when
// the free singleton counts differ, the largest elements of U leave C (the
// trim), and f extends the identity by matching leftover classes size by
// size, least to least. Leftover material beyond tol of the horizon is a
// scenario error.
WeakCoarseWitness coarse_iso_char1(const EqStructure& A, const EqStructure& B,
                                   Nat horizon, Rat tol = Rat(1, 20));

// Dyadic density schedule; every entry strictly inside (0,1).
struct DyadicSchedule {
  std::vector<Rat> q;
  Rat limit;
};

struct Build12 {
  EqStructure E;                  // lazily extended past the schedule,
                                  // repeating the last ratio forever
  std::vector<Nat> checkpoints;   // s_n per schedule entry
  std::vector<Nat> type1_counts;  // exactly q_n * s_n, asserted during build
};

// Staged (1,2)-structure whose type-one count below s_n is exactly q_n s_n.
// q_0 = i/j opens with s_0 = 2j, singletons {0..2i-1}, pairs to 2j; each
// later entry i/j multiplies s by j, appending the singleton and pair
// elements the arithmetic demands. Entries violating the positivity of
// either increment are schedule errors.
Build12 build_12_density_q(const DyadicSchedule& sched);

struct StagePair {
  Nat n = 0;
  Nat s = 0;
};

enum class B1Rule {
  Seed,         // the initial window below n_0
  WindowScan,   // x in [n_i, n_{i+1}): no eligible visible partner below s_{i+1}
  PartnerEcho,  // y in [s_i, s_{i+1}): partner already committed single
};

struct B1Decision {
  Nat element = 0;
  bool single = false;
  B1Rule rule = B1Rule::WindowScan;
  Nat stage = 0;  // index of the (n, s) pair in force
};

// Certificate for one accepted pair: the stage-view singleton density that
// passed the threshold, the density at the budget horizon, and their gap.
struct DivergenceRecord {
  Nat index = 0;     // which (n_i, s_i) this certifies
  Nat exponent = 0;  // the 2^{-i} used in its search
  Nat n = 0;
  Nat s = 0;
  Rat stage_density;  // |A^s(1) cap n| / n
  Rat true_density;   // singleton density of A below n at the budget
  Rat e;              // stage_density - true_density
  Rat bound;          // q(exponent) + 2^{-exponent} - true_density
  bool ok = false;    // e < bound, exact
};

struct StagedSubrelation {
  EqStructure B;  // universe = the decided prefix [0, frontier)
  Nat frontier = 0;
  std::vector<StagePair> pairs;  // includes the seed (1, 1)
  std::vector<B1Decision> log;   // append-only, in decision order
  // decided? then singleton?; nullopt outside the decided region
  std::function<std::optional<bool>(Nat)> b1;
  std::vector<DivergenceRecord> divergence;
  std::vector<Nat> b1_minus_a1;  // declared singles with a real partner
};

class StagedExhausted : public BudgetExhausted {
 public:
  StagedExhausted(const std::string& what, StagedSubrelation p)
      : BudgetExhausted(what), partial(std::move(p)) {}
  StagedSubrelation partial;
};

// Computable subrelation of A dropping pairs the stage view reveals too
// late. The (n_{i+1}, s_{i+1}) search takes the least stage pair whose
// singleton count below n falls under q(i) + 2^{-i}; singleton decisions
// are final once logged. With stages = 0 the loop runs until the search
// fails inside the budget and returns what was built; a positive stages
// count throws StagedExhausted if not reached.
StagedSubrelation staged_subrelation(const EqStructure& A,
                                     const std::function<Rat(Nat)>& q,
                                     Nat budget, Nat stages = 0);

struct BijectionBound {
  Nat n = 0;
  Nat a_n = 0;
  Nat b_n = 0;
  Nat image_stray = 0;   // |(f[C] setminus D) cap b_n|
  Nat c_mass = 0;        // |C cap a_n|
  Nat preimage_stray = 0;  // |(f^{-1}[D] setminus C) cap a_n|
  Nat d_mass = 0;        // |D cap b_n|
  bool ok = false;       // both strays under their masses
};

struct InterleavedBijection {
  std::vector<std::pair<Nat, Nat>> table;  // assignment order
  std::function<std::optional<Nat>(Nat)> f;
  std::function<std::optional<Nat>(Nat)> f_inv;
  Nat matched = 0;  // assignments made before any pool ran dry
  std::vector<BijectionBound> bounds;
  std::vector<std::string> warnings;
};

// Alternating-stage bijection between the sets A and B that routes the
// enumerated zero-density subsets C into D: c_s maps to the least unused
// D-element, then a_s to the least unused B-element. C and D arrive in
// enumeration order (any order, no repeats); A and B ascend. The counting
// bounds are checked exactly at every prefix below the horizon.
InterleavedBijection interleaved_bijection(const std::vector<Nat>& A,
                                           const std::vector<Nat>& B,
                                           const std::vector<Nat>& C,
                                           const std::vector<Nat>& D,
                                           Nat horizon);

struct CaseTally {
  Nat case1 = 0;  // both in the pair part
  Nat case2 = 0;  // mixed
  Nat case3 = 0;  // both singles
  bool ok = true;
  std::string detail;
};

struct WeakCoarse12 {
  StagedSubrelation C;  // staged copy of A
  StagedSubrelation D;  // staged copy of B
  InterleavedBijection g1;
  std::vector<std::pair<Nat, Nat>> g2;  // pair mins, n-th to n-th
  WeakCoarseWitness witness;
  std::vector<bool> E;  // membership below the work horizon
  Nat work_horizon = 0;
  CaseTally cases;
  // exact equality of omega minus E with (C(1) minus A(1)) union
  // g1-preimage of (D(1) minus B(1)), over the boundary-clean region
  bool complement_identity = false;
  Nat complement_mismatches = 0;
  Rat e_density;
};

// Full pipeline: staged subrelations on both sides, pair parts matched in
// order, singleton parts joined by the interleaved bijection, and the
// density-one set E assembled and verified case by case. Both singleton
// parts must measure within tol of the declared density q.
WeakCoarse12 weak_coarse_iso_12(const EqStructure& A, const EqStructure& B,
                                const std::function<Rat(Nat)>& q, Nat budget,
                                Rat tol = Rat(1, 20));

struct SimpleCert {
  Nat e = 0;
  std::optional<Nat> element;  // first enumerated value above 2^e
  Nat stage = 0;               // enumeration stage it appeared at
};

struct DensityCert {
  Nat k = 0;
  Nat count = 0;  // |S cap 2^k|
  bool ok = false;  // count <= k
};

struct SparseSimple {
  EnumerationOracle S;
  std::vector<SimpleCert> hits;
  std::vector<DensityCert> density;
};

// One element per registered enumeration: the first value it produces above
// 2^e, e the registry position. At most k elements land below 2^k, which
// the density certificates record.
SparseSimple sparse_simple_set(const OracleRegistry<EnumerationOracle>& reg,
                               Nat budget);

}  // namespace eqd
