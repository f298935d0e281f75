#include <algorithm>
#include <map>
#include <vector>

#include "doctest.h"
#include "eqdensity/s1.hpp"

using namespace eqd;

namespace {

// Pair plan growing one class per triangular block, pairs in block order:
// class j gains its members one pair per stage. Mirrors the canonical
// all-sizes structure as a c.e. presentation.
PairEnumerationOracle all_sizes_pairs(Nat budget) {
  std::vector<PairEnumerationOracle::Entry> plan;
  Nat stage = 1;
  Nat base = 0;
  for (Nat size = 1; base + size < 4 * budget; ++size) {
    for (Nat a = base; a < base + size; ++a)
      for (Nat b = a + 1; b < base + size; ++b)
        plan.push_back({stage++, a, b});
    base += size;
  }
  return PairEnumerationOracle("all-sizes pairs", budget, plan);
}

}  // namespace

TEST_CASE("monotone rows with strictly increasing limits validate") {
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 8);
  auto v = validate_s1(t);
  CHECK(v.ok);
  CHECK(v.stable_limits == std::vector<Nat>{1, 2, 3, 4, 5, 6, 7, 8});
  // Constant rows settle the moment they start.
  for (Nat i = 0; i < 8; ++i) CHECK(v.settled_at[i] == i);
}

TEST_CASE("a row that dips is a monotonicity violation") {
  auto t = S1Table::from_function(
      [](Nat i, Nat s) {
        if (i == 0) return s == 0 ? Nat(2) : Nat(1);
        return i + 1;
      },
      4);
  auto v = validate_s1(t);
  CHECK_FALSE(v.ok);
  CHECK(v.detail.find("row 0") != std::string::npos);
}

TEST_CASE("equal limits break the strict increase") {
  auto t = S1Table::from_function(
      [](Nat i, Nat) { return i < 2 ? Nat(3) : Nat(i + 5); }, 5);
  auto v = validate_s1(t);
  CHECK_FALSE(v.ok);
}

TEST_CASE("rows still moving at the last stage end the settled prefix") {
  auto t = S1Table::from_function(
      [](Nat i, Nat s) { return i == 2 ? s + 1 : i + 1; }, 6);
  auto v = validate_s1(t);
  CHECK(v.ok);
  CHECK(v.stable_limits == std::vector<Nat>{1, 2});
}

TEST_CASE("table csv is deterministic") {
  auto t = S1Table::from_function([](Nat i, Nat s) { return i + s; }, 3);
  CHECK(t.to_csv() == t.to_csv());
  CHECK(t.to_csv().rfind("i,s,f\n", 0) == 0);
  CHECK(t.f(1, 2) == 3);
  CHECK_FALSE(t.defined(2, 1));
}

TEST_CASE("extraction finds the staged anchors on the all-sizes input") {
  auto E = all_sizes_pairs(64);
  auto x = extract_s1(E, 64, 4);
  REQUIRE(x.checkpoints.size() >= 5);
  CHECK(x.checkpoints[1] == 2);
  CHECK(x.checkpoints[2] == 5);
  for (const auto& a : x.anchors) {
    REQUIRE(!a.empty());
    CHECK(a[0] == 0);  // b_0 pinned
  }
  // Checkpoints strictly increase.
  for (Nat s = 1; s < x.checkpoints.size(); ++s)
    CHECK(x.checkpoints[s] > x.checkpoints[s - 1]);

  auto v = validate_s1(x.table);
  CHECK(v.ok);

  // The realized classes of the final anchors carry the stabilized sizes.
  auto sizes = realized_class_sizes(E, x);
  REQUIRE(sizes.size() >= v.stable_limits.size());
  for (Nat i = 0; i < v.stable_limits.size(); ++i)
    CHECK(sizes[i] == v.stable_limits[i]);
  for (Nat i = 0; i + 1 < sizes.size(); ++i) CHECK(sizes[i] < sizes[i + 1]);
}

TEST_CASE("extraction dies honestly when every class is small") {
  // Three classes of size 2 and nothing else: no third anchor level exists.
  PairEnumerationOracle E(
      "pairs only", 32,
      {{1, 0, 1}, {2, 2, 3}, {3, 4, 5}});
  try {
    extract_s1(E, 32, 4);
    FAIL("expected exhaustion");
  } catch (const S1Exhausted& e) {
    CHECK(e.partial.checkpoints.size() >= 1);
    CHECK(e.partial.checkpoints.size() < 5);
  }
}

TEST_CASE("stages=0 runs to the first failed search and returns the build") {
  auto E = all_sizes_pairs(48);
  auto x = extract_s1(E, 48);
  CHECK(!x.checkpoints.empty());
  CHECK(validate_s1(x.table).ok);
}

TEST_CASE("building from a character grows one class per row plus the quota") {
  CharacterApprox K;
  K.budget = 32;
  K.guess = [](Nat, Nat, Nat) { return true; };
  K.candidates = {};  // table only, no extra quota
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 8);
  auto b = build_from_character(K, t, 400);
  REQUIRE(b.classes.size() == 8);
  auto ch = character_of(b.structure, 400);
  for (Nat k = 1; k <= 8; ++k) CHECK(ch.counts.at(k) == 1);
  CHECK(verify_equivalence(b.structure, 100).ok);
}

TEST_CASE("ramp and constant tables agree on the settled limits") {
  // min(i+1, s) climbs to the same limit i+1 the constant table states
  // outright; at a finite stage count only the settled prefix is comparable.
  auto con = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 10);
  auto ramp = S1Table::from_function(
      [](Nat i, Nat s) { return std::min(i + 1, s); }, 10);
  auto vc = validate_s1(con);
  auto vr = validate_s1(ramp);
  CHECK(vc.ok);
  CHECK(vr.ok);
  REQUIRE(vr.stable_limits.size() <= vc.stable_limits.size());
  CHECK(!vr.stable_limits.empty());
  for (Nat i = 0; i < vr.stable_limits.size(); ++i)
    CHECK(vr.stable_limits[i] == vc.stable_limits[i]);
}

TEST_CASE("affirmed character pairs force fresh classes") {
  CharacterApprox K;
  K.budget = 16;
  K.candidates = {{3, 2}, {9, 1}};
  K.guess = [](Nat k, Nat, Nat) { return k == 3 || k == 9; };
  CHECK(K.affirmed().size() == 2);

  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 4);
  auto b = build_from_character(K, t, 600);
  auto ch = character_of(b.structure, 600);
  // Two classes of size 3 (one from the table, one fresh) and one of nine.
  CHECK(ch.counts.at(3) == 2);
  CHECK(ch.counts.at(9) == 1);
}

TEST_CASE("non-monotone tables are refused by the builder") {
  auto bad = S1Table::from_function(
      [](Nat i, Nat s) {
        if (i == 0) return s == 0 ? Nat(2) : Nat(1);
        return i + 1;
      },
      4);
  CharacterApprox K;
  K.budget = 4;
  K.guess = [](Nat, Nat, Nat) { return false; };
  CHECK_THROWS_AS(build_from_character(K, bad, 100), ValidationError);
}

TEST_CASE("allocation past the horizon is refused") {
  CharacterApprox K;
  K.budget = 8;
  K.candidates = {{50, 3}};
  K.guess = [](Nat, Nat, Nat) { return true; };
  auto t = S1Table::from_function([](Nat i, Nat) { return i + 1; }, 4);
  CHECK_THROWS_AS(build_from_character(K, t, 60), ValidationError);
}

TEST_CASE("growth events never shrink a class") {
  auto t = S1Table::from_function(
      [](Nat i, Nat s) { return std::min<Nat>(i + 1, s + 1); }, 8);
  CharacterApprox K;
  K.budget = 8;
  K.guess = [](Nat, Nat, Nat) { return false; };
  auto b = build_from_character(K, t, 400);
  std::map<Nat, Nat> size_now;
  for (const auto& ev : b.growth) {
    auto it = size_now.find(ev.class_id);
    if (it != size_now.end()) CHECK(ev.new_size >= it->second);
    size_now[ev.class_id] = ev.new_size;
  }
}
