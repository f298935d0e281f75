#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "eqdensity/generic.hpp"

using namespace eqd;

namespace {

// Evens collapsed into one declared-infinite class, odds singletons.
EqStructure infinite_evens() {
  EqStructure s;
  s.note = "one infinite class on the evens";
  s.related = [](Nat x, Nat y) {
    return x == y || (x % 2 == 0 && y % 2 == 0);
  };
  s.members_of = [](Nat x) -> std::optional<std::vector<Nat>> {
    if (x % 2 == 0) return std::nullopt;  // infinite, not enumerable here
    return std::vector<Nat>{x};
  };
  s.declared_infinite = [](Nat x) { return x % 2 == 0; };
  return s;
}

EqStructure blocks(Nat k) {
  EqStructure s;
  s.note = "blocks of " + std::to_string(k);
  s.related = [k](Nat x, Nat y) { return x / k == y / k; };
  s.members_of = [k](Nat x) -> std::optional<std::vector<Nat>> {
    std::vector<Nat> cls;
    for (Nat m = (x / k) * k; m < (x / k) * k + k; ++m) cls.push_back(m);
    return cls;
  };
  return s;
}

ScenarioMetadata md_infinite() {
  ScenarioMetadata md;
  md.tag = CaseTag::InfiniteClass;
  md.infinite_reps = {0};
  return md;
}

ScenarioMetadata md_repeated(Nat k) {
  ScenarioMetadata md;
  md.tag = CaseTag::RepeatedSize;
  md.repeated_size = k;
  return md;
}

ScenarioMetadata md_s1() {
  ScenarioMetadata md;
  md.tag = CaseTag::S1Subset;
  return md;
}

}  // namespace

TEST_CASE("case one rides the declared infinite class on the carrier") {
  auto S = infinite_evens();
  auto g = strongly_generic_copy(S, md_infinite(), 500);
  CHECK(g.case_used == 1);
  CHECK(verify_generic_witness(g.witness, 500).ok);
  CHECK(verify_equivalence(g.copy, 400).ok);

  // The carrier is dense and decidable, and cmp agrees with the copy there.
  CHECK(Rat::ratio(g.carrier.size(), 500) >= Rat(1) - Rat(1, 10));
  for (Nat i = 0; i < g.carrier.size(); i += 7)
    for (Nat j = i; j < g.carrier.size(); j += 11) {
      Nat a = g.carrier[i], b = g.carrier[j];
      CHECK(g.cmp.related(a, b) == g.copy.related(a, b));
    }

  auto faith = is_faithful(g.carrier_member, g.copy, 500);
  CHECK(faith.faithful);
}

TEST_CASE("case two tiles the carrier with blocks of the repeated size") {
  auto S = blocks(2);
  auto g = strongly_generic_copy(S, md_repeated(2), 600);
  CHECK(g.case_used == 2);
  CHECK(verify_generic_witness(g.witness, 600).ok);
  CHECK(verify_equivalence(g.copy, 400).ok);
  CHECK(is_faithful(g.carrier_member, g.copy, 600).faithful);

  // pi realizes copy -> input on the matched region.
  for (Nat x = 0; x + 1 < g.matched_horizon; ++x)
    for (Nat y = x + 1; y < std::min<Nat>(g.matched_horizon, x + 40); ++y) {
      if (!g.copy.universe(x) || !g.copy.universe(y)) continue;
      CHECK(g.copy.related(x, y) == S.related(g.pi[x], g.pi[y]));
    }
}

TEST_CASE("case three puts one transversal point per chosen class") {
  auto S = canonical_all_sizes();
  auto g = strongly_generic_copy(S, md_s1(), 700);
  CHECK(g.case_used == 3);
  CHECK(verify_generic_witness(g.witness, 700).ok);

  // The transversal meets each class at most once, so the carrier splits
  // classes: the copy restricted to it cannot be faithful.
  auto faith = is_faithful(g.carrier_member, g.copy, 700);
  CHECK_FALSE(faith.faithful);
}

TEST_CASE("undeclared scenarios are refused") {
  ScenarioMetadata none;
  auto S = canonical_all_sizes();
  CHECK_THROWS_AS(strongly_generic_copy(S, none, 200), ScenarioError);

  CharacterApprox K;
  K.budget = 4;
  K.guess = [](Nat, Nat, Nat) { return false; };
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 3);
  CHECK_THROWS_AS(faithful_generic_copy(S, none, K, t, 200),
                  UnsupportedStructure);
}

TEST_CASE("faithful copy delegates the first two cases") {
  CharacterApprox K;
  K.budget = 4;
  K.guess = [](Nat, Nat, Nat) { return false; };
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 3);

  auto f1 = faithful_generic_copy(infinite_evens(), md_infinite(), K, t, 400);
  CHECK(f1.base.case_used == 1);
  CHECK(f1.faithfulness.faithful);
  CHECK_FALSE(f1.grown.has_value());

  auto f2 = faithful_generic_copy(blocks(3), md_repeated(3), K, t, 400);
  CHECK(f2.base.case_used == 2);
  CHECK(f2.faithfulness.faithful);
}

TEST_CASE("faithful copy grows the declared character in the third case") {
  auto S = canonical_all_sizes();
  CharacterApprox K;
  K.budget = 16;
  K.candidates = {{16, 1}, {20, 1}};
  K.guess = [](Nat, Nat, Nat) { return true; };
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 12);

  auto f = faithful_generic_copy(S, md_s1(), K, t, 2000);
  CHECK(f.base.case_used == 3);
  REQUIRE(f.grown.has_value());
  CHECK(f.faithfulness.faithful);
  CHECK(verify_generic_witness(f.base.witness, 1000).ok);

  // Every grown class lives on the carrier.
  for (const auto& cls : f.grown->classes)
    for (Nat x : cls) CHECK(f.base.carrier_member(x));
}

TEST_CASE("restriction of a witness is total on a dense computable set") {
  auto g = strongly_generic_copy(blocks(2), md_repeated(2), 600);
  // The extraction certifies blocks-of-2 prefixes at 8, 16, 32, 288, 800, ...;
  // a budget of 512 aims at 256 and lands on 288, the 800 milestone would
  // need stages past 800.
  auto r = restrict_generic_witness(g.witness, 512);
  CHECK(r.Y.certificate.coverage == 288);

  // Y sits inside the witness carrier set.
  for (Nat x = 0; x < r.Y.certificate.coverage; ++x)
    if (r.Y.member[x]) CHECK(g.witness.A.contains_at(x, g.witness.A.budget()));

  // decide is total and matches the copy on Y pairs.
  Nat cap = std::min<Nat>(r.Y.certificate.coverage, 300);
  for (Nat x = 0; x < cap; ++x) {
    if (!r.Y.member[x]) continue;
    for (Nat y = x; y < cap; y += 3) {
      if (!r.Y.member[y]) continue;
      CHECK(r.decide(x, y) == g.copy.related(x, y));
    }
  }
}

TEST_CASE("faithful coarse build matches the canonical relation on A_K") {
  auto out = build_faithful_coarse(
      [](Nat k) {
        Nat r = 0;
        while (r * r < k) ++r;
        return r * r != k;  // keep the non-square sizes
      },
      3000);
  CHECK(out.agreement_exact);
  CHECK(out.carved_classes > 0);
  for (const auto& cp : out.a_k.checkpoints) CHECK(cp.ok);
}

TEST_CASE("faithful coarse build needs a co-infinite size set") {
  CHECK_THROWS_AS(build_faithful_coarse([](Nat) { return true; }, 500),
                  ScenarioError);
}

TEST_CASE("diagonal dense K skips one size per registered approximation") {
  OracleRegistry<LimitApproxOracle> reg;
  reg.add(LimitApproxOracle("always", 64, [](Nat, Nat) { return true; }));
  auto out = diagonal_dense_K(reg, 64);
  REQUIRE(out.omitted.size() == 1);
  CHECK(out.omitted[0] == Nat(3));  // least affirmed size above 2^1
  CHECK_FALSE(out.member(3));
  CHECK(out.member(1));
  CHECK(out.member(2));
  CHECK(out.member(4));
  for (const auto& cp : out.checkpoints) {
    CHECK(cp.ok);
    CHECK(cp.density >= cp.bound);
  }
}

TEST_CASE("diagonal dense K with an empty registry omits nothing") {
  OracleRegistry<LimitApproxOracle> reg;
  auto out = diagonal_dense_K(reg, 32);
  CHECK(out.omitted.empty());
  for (Nat k = 1; k < 32; ++k) CHECK(out.member(k));
}

TEST_CASE("anti-coarse K removes the dominant residue and keeps one size") {
  // All classes of size five: the size class of residue 1 mod 4 has
  // density one, so requirement zero removes it except its anchor 5.
  std::vector<PairEnumerationOracle::Entry> plan;
  Nat stage = 1;
  for (Nat b = 0; b < 60; b += 5)
    for (Nat a = b; a < b + 5; ++a)
      for (Nat c = a + 1; c < b + 5; ++c) plan.push_back({stage++, a, c});
  OracleRegistry<PairEnumerationOracle> reg;
  reg.add(PairEnumerationOracle("fives", 400, plan));
  std::vector<ScenarioMetadata> mds(1);

  auto out = anti_coarse_K(reg, mds, 400);
  REQUIRE(out.log.size() == 1);
  CHECK(out.log[0].action == AntiCoarseAction::Removed);
  CHECK(out.log[0].modulus == 4);
  CHECK(out.log[0].residue == 1);
  CHECK(out.log[0].preserved == 5);
  CHECK(out.preserved == std::vector<Nat>{5});

  CHECK(out.member(5));
  CHECK_FALSE(out.member(1));
  CHECK_FALSE(out.member(9));
  CHECK(out.member(2));
  CHECK(out.member(4));

  for (const auto& w : out.witnesses) {
    CHECK(w.ok);
    CHECK(w.coverage <= w.bound + w.epsilon);
  }
}

TEST_CASE("a declared positive-density size blocks the removal") {
  std::vector<PairEnumerationOracle::Entry> plan;
  Nat stage = 1;
  for (Nat b = 0; b < 30; b += 3)
    for (Nat a = b; a < b + 3; ++a)
      for (Nat c = a + 1; c < b + 3; ++c) plan.push_back({stage++, a, c});
  OracleRegistry<PairEnumerationOracle> reg;
  reg.add(PairEnumerationOracle("threes", 200, plan));
  std::vector<ScenarioMetadata> mds(1);
  mds[0].positive_density_size = true;

  auto out = anti_coarse_K(reg, mds, 200);
  REQUIRE(out.log.size() == 1);
  CHECK(out.log[0].action == AntiCoarseAction::NoActionPositiveDensity);
  for (Nat k = 1; k < 40; ++k) CHECK(out.member(k));
}

TEST_CASE("witness verification notices a lying phi") {
  auto g = strongly_generic_copy(blocks(2), md_repeated(2), 300);
  GenericWitness bad = g.witness;
  auto phi = bad.phi;
  bad.phi = [phi](Nat x, Nat y) {
    if (x == 2 && y == 3) return !phi(x, y);
    return phi(x, y);
  };
  auto check = verify_generic_witness(bad, 300);
  CHECK_FALSE(check.ok);
  CHECK(!check.detail.empty());
}
