#pragma once

// Copies decidable on a dense carrier: the three-case copy construction, its
// faithful refinement, restriction of a witness to an extracted dense set,
// and the coarse-side set constructions (size-doubling partition, diagonal
// dense K, and the staged removal that defeats coverage density one).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqdensity/density.hpp"
#include "eqdensity/oracles.hpp"
#include "eqdensity/s1.hpp"
#include "eqdensity/structures.hpp"
#include "eqdensity/types.hpp"

namespace eqd {

// No structural hypothesis applies; nothing of the requested kind exists to
// build. Distinct from ScenarioError, which flags declarations the input
// visibly contradicts.
class UnsupportedStructure : public Error {
 public:
  using Error::Error;
};

enum class CaseTag { InfiniteClass, RepeatedSize, S1Subset, None };

// The hypotheses driving the case split are undecidable, so scenarios
// declare them; constructions spot-check the declarations at the horizon and
// refuse on visible contradiction.
struct ScenarioMetadata {
  CaseTag tag = CaseTag::None;
  Nat repeated_size = 0;           // k for CaseTag::RepeatedSize
  std::vector<Nat> infinite_reps;  // representatives of declared infinite classes
  bool positive_density_size = false;  // some class size has positive density
};

// Partial decision procedure phi for a target relation, with its domain kept
// explicit and a dense c.e. set A whose square sits inside that domain.
struct GenericWitness {
  EqStructure target;
  std::function<bool(Nat, Nat)> dom;
  std::function<bool(Nat, Nat)> phi;
  EnumerationOracle A;
  bool faithful = false;  // claim about A inside target; checked separately
};

struct WitnessCheck {
  bool ok = true;
  std::string detail;
  Nat pairs_checked = 0;
};

// Exhaustive below the horizon: phi agrees with the target wherever dom
// holds, and A x A (members at A's budget) lies inside dom.
WitnessCheck verify_generic_witness(const GenericWitness& w, Nat horizon);

struct GenericCopy {
  int case_used = 0;  // 1: infinite class, 2: repeated size k, 3: transversal
  EqStructure copy;
  EqStructure cmp;  // computable relation agreeing with copy on carrier pairs
  std::vector<Nat> carrier;  // the dense computable set A below the horizon
  std::function<bool(Nat)> carrier_member;
  EnumerationOracle A;  // prompt enumeration of the carrier
  // pi[x] realizes copy -> input on [0, matched_horizon); injective where
  // assigned, carrier slots always assigned, leftover slots (material ran
  // out inside the probe window) left out of the copy's universe.
  std::vector<Nat> pi;
  Nat matched_horizon = 0;
  GenericWitness witness;
};

// Copy of S decidable on a dense computable carrier. Case picked by the
// metadata tag: a declared infinite class rides on the carrier itself, a
// repeated size k tiles it with consecutive blocks, an unbounded character
// puts one transversal point per chosen class on it. The default carrier is
// the complement of the perfect squares.
GenericCopy strongly_generic_copy(const EqStructure& S, const ScenarioMetadata& md,
                                  Nat horizon,
                                  const std::function<bool(Nat)>& carrier = {});

struct FaithfulCopy {
  GenericCopy base;
  // Transversal-case refinement only: the structure grown from the declared
  // character, living entirely on the carrier.
  std::optional<BuiltStructure> grown;
  FaithfulReport faithfulness;  // of the carrier inside the copy
};

// Same case split, but the carrier is arranged to be faithful in every case.
// The first two tags delegate wholesale; the third grows a concrete
// structure from (K, f) on the carrier and matches its classes to input
// classes of equal size. Tag None refuses: no faithful copy is promised.
FaithfulCopy faithful_generic_copy(const EqStructure& S, const ScenarioMetadata& md,
                                   const CharacterApprox& K, const S1Table& f,
                                   Nat horizon);

struct RestrictedWitness {
  DenseSubset Y;
  EqStructure restricted;
  std::function<bool(Nat, Nat)> decide;  // phi, now total on Y x Y
};

// Extracts a computable dense Y inside w.A and restricts the target to it;
// on Y x Y the inherited phi is a total decision procedure. Extraction
// exhaustion propagates.
RestrictedWitness restrict_generic_witness(const GenericWitness& w, Nat budget);

struct FaithfulCoarse {
  AKSet a_k;
  EqStructure R;
  Character character;          // counts bounded by 2 per size
  bool agreement_exact = false; // R matches the canonical relation on A_K
  Nat carved_classes = 0;       // complete classes placed outside A_K
  FaithfulReport faithful_R;
  FaithfulReport faithful_E;
};

// Keeps the canonical classes with size in K and repartitions the leftover
// numbers into one fresh class per size in K, ascending. Every size then
// appears at most twice. K must miss infinitely many sizes for the leftover
// pool to exist; a pool empty below the horizon is a scenario error.
FaithfulCoarse build_faithful_coarse(const std::function<bool(Nat)>& K, Nat horizon);

struct DiagonalDenseK {
  // one entry per registered oracle i (1-based arithmetic: oracle at
  // registry position p gets i = p + 1), absent when nothing past 2^i showed
  std::vector<std::optional<Nat>> omitted;
  std::function<bool(Nat)> member;
  struct Checkpoint {
    Nat i = 0;
    Nat count = 0;  // |K ∩ [0, 2^i)|
    Rat density;
    Rat bound;  // (2^i - i) / 2^i
    bool ok = false;
  };
  std::vector<Checkpoint> checkpoints;
};

// Removes, per registered limit oracle, the least value above 2^i the oracle
// affirms at its budget. At most i - 1 removals land below 2^i, so every
// checkpoint density clears (2^i - i)/2^i.
DiagonalDenseK diagonal_dense_K(const OracleRegistry<LimitApproxOracle>& reg,
                                Nat horizon);

enum class AntiCoarseAction { Removed, Nested, NoActionPositiveDensity, Stalled };

struct AntiCoarseLogEntry {
  Nat requirement = 0;  // e, also the registry position
  AntiCoarseAction action = AntiCoarseAction::Stalled;
  Nat modulus = 0;        // 2^{e+2}
  Nat residue = 0;        // chosen j
  Nat preserved = 0;      // 2^{e+2} + j, kept in K
  Nat checkpoint = 0;     // prefix achieving the selection density
  Rat selection_density;  // measured density of the chosen size class there
  Rat threshold;          // 2^{-e-2}
};

struct AntiCoarseWitness {
  Nat requirement = 0;
  Nat checkpoint = 0;
  Rat coverage;  // density of {x : |[x]_e| in K} at the checkpoint
  Rat bound;     // 1 - 2^{-e-2}
  Rat epsilon;   // preserved-size mass + truncated-class mass there
  bool ok = false;
};

struct AntiCoarseK {
  std::function<bool(Nat)> member;  // final K
  // member_at(m, e): K after the first e requirements have been handled
  std::function<bool(Nat, Nat)> member_at;
  std::vector<AntiCoarseLogEntry> log;
  std::vector<Nat> preserved;  // one element per acted requirement
  std::vector<AntiCoarseWitness> witnesses;
};

// Stage loop over the registry: requirement e targets the structure at
// position e with modulus 2^{e+2}. Unless the scenario grants a
// positive-density size (no action), pick the least residue j whose size
// class reaches density 2^{-e-2} at some power-of-two checkpoint and remove
// the numbers congruent to j, keeping 2^{e+2} + j and everything previously
// preserved. A residue class nested inside an earlier removal changes
// nothing and is logged as such; no residue reaching the bound logs a stall.
AntiCoarseK anti_coarse_K(const OracleRegistry<PairEnumerationOracle>& reg,
                          const std::vector<ScenarioMetadata>& metadata,
                          Nat budget);

}  // namespace eqd
