#include <algorithm>
#include <set>
#include <vector>

#include "doctest.h"
#include "eqdensity/iso.hpp"

using namespace eqd;

namespace {

// Pair enumeration of a (1,2) structure's complete pairs below the horizon,
// one per stage, ordered by larger member.
PairEnumerationOracle pairs_of(const EqStructure& S, Nat horizon, Nat budget) {
  std::vector<std::pair<Nat, Nat>> found;
  for (Nat x = 0; x < horizon; ++x) {
    auto cls = S.exact_class(x);
    if (cls && cls->size() == 2 && cls->back() == x && cls->back() < horizon)
      found.emplace_back((*cls)[0], (*cls)[1]);
  }
  std::vector<PairEnumerationOracle::Entry> plan;
  Nat stage = 1;
  for (auto [a, b] : found) plan.push_back({stage++, a, b});
  return PairEnumerationOracle(S.note + " pairs", budget, plan);
}

Build12 half() { return build_12_density_q({{Rat(1, 2)}, Rat(1, 2)}); }

}  // namespace

TEST_CASE("the dyadic build opens with the advertised block") {
  auto b = half();
  CHECK(b.checkpoints == std::vector<Nat>{4});
  CHECK(b.type1_counts == std::vector<Nat>{2});
  CHECK(b.E.exact_class(0) == std::vector<Nat>{0});
  CHECK(b.E.exact_class(1) == std::vector<Nat>{1});
  CHECK(b.E.exact_class(2) == std::vector<Nat>{2, 3});
  // Lazy extension repeats the last ratio: next block is {4,5} single,
  // {6,7} paired.
  CHECK(b.E.exact_class(4) == std::vector<Nat>{4});
  CHECK(b.E.exact_class(6) == std::vector<Nat>{6, 7});
  CHECK(verify_equivalence(b.E, 256).ok);
}

TEST_CASE("each schedule entry is hit exactly at its checkpoint") {
  auto b = build_12_density_q({{Rat(1, 2), Rat(3, 8)}, Rat(3, 8)});
  CHECK(b.checkpoints == std::vector<Nat>{4, 32});
  CHECK(b.type1_counts == std::vector<Nat>{2, 12});
  for (Nat n = 0; n < b.checkpoints.size(); ++n) {
    Nat singles = 0;
    for (Nat x = 0; x < b.checkpoints[n]; ++x)
      if (b.E.exact_class(x)->size() == 1) ++singles;
    CHECK(singles == b.type1_counts[n]);
  }
  CHECK(b.E.exact_class(13) == std::vector<Nat>{13});
  CHECK(b.E.exact_class(14) == std::vector<Nat>{14, 15});
}

TEST_CASE("non-dyadic ratios work as long as they sit inside (0,1)") {
  auto b = build_12_density_q({{Rat(2, 3)}, Rat(2, 3)});
  CHECK(b.checkpoints == std::vector<Nat>{6});
  CHECK(b.type1_counts == std::vector<Nat>{4});
  CHECK(b.E.exact_class(3) == std::vector<Nat>{3});
  CHECK(b.E.exact_class(4) == std::vector<Nat>{4, 5});
}

TEST_CASE("degenerate schedules are refused") {
  CHECK_THROWS_AS(build_12_density_q({{}, Rat(1, 2)}), ValidationError);
  CHECK_THROWS_AS(build_12_density_q({{Rat(0)}, Rat(0)}), ValidationError);
  CHECK_THROWS_AS(build_12_density_q({{Rat(1)}, Rat(1)}), ValidationError);
  CHECK_THROWS_AS(build_12_density_q({{Rat(3, 2)}, Rat(3, 2)}),
                  ValidationError);
}

TEST_CASE("staged subrelation only ever drops pairs") {
  auto b = half();
  auto st = staged_subrelation(b.E, [](Nat) { return Rat(1, 2); }, 2048);
  CHECK(st.frontier > 0);
  REQUIRE(!st.pairs.empty());
  CHECK(st.pairs[0].n == 1);
  CHECK(st.pairs[0].s == 1);
  for (Nat i = 1; i < st.pairs.size(); ++i) {
    CHECK(st.pairs[i].n > st.pairs[i - 1].n);
    CHECK(st.pairs[i].s > st.pairs[i - 1].s);
  }

  Nat cap = std::min<Nat>(st.frontier, 600);
  for (Nat x = 0; x < cap; ++x)
    for (Nat y = x + 1; y < cap; ++y)
      if (st.B.related(x, y)) CHECK(b.E.related(x, y));

  // Singleton verdicts are final and logged in decision order.
  for (Nat i = 1; i < st.log.size(); ++i)
    CHECK(st.log[i].stage >= st.log[i - 1].stage);
  for (const auto& rec : st.divergence) {
    CHECK(rec.ok);
    CHECK(rec.e < rec.bound);
  }
  // Every dropped pair is a declared single whose real partner exists.
  for (Nat x : st.b1_minus_a1) {
    auto v = st.b1(x);
    REQUIRE(v.has_value());
    CHECK(*v);
    CHECK(b.E.exact_class(x)->size() == 2);
  }
}

TEST_CASE("staged subrelation throws when the stage quota is unreachable") {
  auto b = half();
  try {
    staged_subrelation(b.E, [](Nat) { return Rat(1, 2); }, 64, 30);
    FAIL("expected exhaustion");
  } catch (const StagedExhausted& e) {
    CHECK(!e.partial.pairs.empty());
    CHECK(e.partial.frontier > 0);
  }
}

TEST_CASE("interleaved bijection routes the listed elements and keeps count") {
  std::vector<Nat> A, B;
  for (Nat x = 0; x < 100; ++x) {
    A.push_back(x);
    B.push_back(x);
  }
  auto out = interleaved_bijection(A, B, {3, 5}, {10, 20}, 100);
  CHECK(out.f(3) == Nat(10));
  CHECK(out.f(5) == Nat(20));
  CHECK(out.f_inv(10) == Nat(3));

  std::set<Nat> image;
  for (Nat x : A) {
    auto y = out.f(x);
    REQUIRE(y.has_value());
    CHECK(image.insert(*y).second);  // injective
  }
  for (const auto& bd : out.bounds) {
    CHECK(bd.ok);
    CHECK(bd.image_stray <= bd.c_mass);
    CHECK(bd.preimage_stray <= bd.d_mass);
  }
}

TEST_CASE("with nothing to route the bijection is the order isomorphism") {
  std::vector<Nat> A, B;
  for (Nat x = 0; x < 64; ++x) {
    A.push_back(2 * x);      // evens
    B.push_back(2 * x + 1);  // odds
  }
  auto out = interleaved_bijection(A, B, {}, {}, 128);
  for (Nat i = 0; i < 64; ++i) CHECK(out.f(2 * i) == Nat(2 * i + 1));
}

TEST_CASE("routed elements must come from their carrier sets") {
  std::vector<Nat> A{0, 1, 2}, B{0, 1, 2};
  CHECK_THROWS_AS(interleaved_bijection(A, B, {9}, {0}, 10), ValidationError);
  CHECK_THROWS_AS(interleaved_bijection(A, B, {0}, {9}, 10), ValidationError);
  CHECK_THROWS_AS(interleaved_bijection({1, 0}, B, {}, {}, 10),
                  ValidationError);
}

TEST_CASE("pair matching onto the dense layout starts min to min") {
  auto D = canonical_12(PairLayout::DensePairs);
  auto E = pairs_of(D, 400, 400);
  auto w = generic_iso_char2(D, E, 400);
  REQUIRE(w.table.size() >= 2);
  CHECK(w.table[0] == std::pair<Nat, Nat>{2, 2});
  CHECK(w.table[1] == std::pair<Nat, Nat>{3, 3});
  CHECK(w.theta(2) == Nat(2));
  CHECK(verify_partial_iso(w, 400).ok);
  CHECK(w.domain_profile.liminf_est >= Rat(1) - Rat(1, 10));

  auto inv = invert_partial_iso(w, 400);
  CHECK(inv.theta(2) == Nat(2));
  CHECK(verify_partial_iso(inv, 400).ok);

  auto comp = compose_partial_iso(w, inv, 400);
  for (Nat x : w.domain)
    if (auto y = comp.theta(x)) CHECK(*y == x);

  auto merged = merge_partial_iso(w, inv, 400);
  CHECK(verify_partial_iso(merged, 400).ok);
}

TEST_CASE("a pair the relation disowns stops the matching") {
  auto D = canonical_12(PairLayout::DensePairs);
  PairEnumerationOracle bad("bad", 16, {{1, 0, 2}});
  CHECK_THROWS_AS(generic_iso_char2(D, bad, 400), ScenarioError);
}

TEST_CASE("sparse pair parts fail the density gate") {
  auto S = canonical_12(PairLayout::SparsePairs);
  auto E = pairs_of(S, 400, 400);
  CHECK_THROWS_AS(generic_iso_char2(S, E, 400), ValidationError);
}

TEST_CASE("coarse matching on singleton-heavy structures is the identity") {
  auto A = canonical_12(PairLayout::SparsePairs);
  auto B = structure_from_classes("two pairs", {{50, 51}, {200, 201}});
  auto w = coarse_iso_char1(A, B, 400);
  CHECK(w.horizon == 400);
  for (Nat x = 0; x < 400; x += 13) CHECK(w.theta(x) == x);
  CHECK(w.c_profile.liminf_est >= Rat(4, 5));
  CHECK(w.unmatched <= 400 / 20);

  // On C the map is a relation isomorphism onto its image.
  Nat checked = 0;
  for (Nat x = 0; x < 400; ++x) {
    if (!w.C[x]) continue;
    for (Nat y = x + 1; y < 400; y += 17) {
      if (!w.C[y]) continue;
      auto fx = w.f(x), fy = w.f(y);
      if (!fx || !fy) continue;
      CHECK(A.related(x, y) == B.related(*fx, *fy));
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("coarse matching refuses pair-heavy structures") {
  auto D = canonical_12(PairLayout::DensePairs);
  auto S = canonical_12(PairLayout::SparsePairs);
  CHECK_THROWS_AS(coarse_iso_char1(D, S, 400), ValidationError);
}

TEST_CASE("weak coarse pipeline composes and covers most of the line") {
  auto A = build_12_density_q({{Rat(1, 2)}, Rat(1, 2)});
  auto B = build_12_density_q(
      {{Rat(3, 8), Rat(7, 16), Rat(1, 2)}, Rat(1, 2)});
  auto out =
      weak_coarse_iso_12(A.E, B.E, [](Nat) { return Rat(1, 2); }, 2048);
  CHECK(out.cases.ok);
  CHECK(out.complement_identity);
  CHECK(out.complement_mismatches == 0);
  CHECK(out.e_density >= Rat(4, 5));
  CHECK(out.work_horizon > 0);
  REQUIRE(!out.g2.empty());
  CHECK(out.g2[0] == std::pair<Nat, Nat>{2, 6});

  // E really is a subset of the agreement set of the assembled map.
  Nat hits = 0;
  for (Nat x = 0; x < out.work_horizon && hits < 50; ++x)
    if (out.E[x]) ++hits;
  CHECK(hits == 50);
}

TEST_CASE("weak coarse pipeline rejects a misdeclared density") {
  auto A = build_12_density_q({{Rat(1, 2)}, Rat(1, 2)});
  auto B = build_12_density_q({{Rat(1, 8)}, Rat(1, 8)});
  CHECK_THROWS_AS(
      weak_coarse_iso_12(A.E, B.E, [](Nat) { return Rat(1, 2); }, 1024),
      ValidationError);
}

TEST_CASE("sparse simple set takes the first large member of each oracle") {
  OracleRegistry<EnumerationOracle> reg;
  reg.add(gen::identity(64));
  reg.add(gen::evens(64));
  reg.add(gen::squares(64));
  auto out = sparse_simple_set(reg, 64);
  REQUIRE(out.hits.size() == 3);
  CHECK(out.hits[0].element == Nat(2));  // first identity value above 1
  CHECK(out.hits[1].element == Nat(4));  // first even above 2
  CHECK(out.hits[2].element == Nat(9));  // first square above 4
  CHECK(out.S.snapshot(64) == std::vector<Nat>{2, 4, 9});
  for (const auto& d : out.density) {
    CHECK(d.ok);
    CHECK(d.count <= d.k);
  }
}

TEST_CASE("sparse simple set dodges its own earlier picks") {
  OracleRegistry<EnumerationOracle> reg;
  reg.add(gen::identity(64));
  reg.add(gen::identity(64));
  auto out = sparse_simple_set(reg, 64);
  REQUIRE(out.hits.size() == 2);
  CHECK(out.hits[0].element == Nat(2));
  CHECK(out.hits[1].element == Nat(3));
  auto snap = out.S.snapshot(64);
  CHECK(std::set<Nat>(snap.begin(), snap.end()).size() == snap.size());
}
