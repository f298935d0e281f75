#include <set>
#include <vector>

#include "doctest.h"
#include "eqdensity/structures.hpp"

using namespace eqd;

TEST_CASE("all-sizes structure lays out triangular blocks") {
  auto S = canonical_all_sizes();
  CHECK(S.exact_class(0) == std::vector<Nat>{0});
  CHECK(S.exact_class(4) == std::vector<Nat>{3, 4, 5});
  CHECK(S.exact_class(6) == std::vector<Nat>{6, 7, 8, 9});
  CHECK(S.related(3, 5));
  CHECK_FALSE(S.related(5, 6));
  CHECK(verify_equivalence(S, 500).ok);
}

TEST_CASE("type sets split by exact size below the horizon") {
  auto S = canonical_all_sizes();
  auto t6 = type_sets(S, 6);
  CHECK(t6.by_size.at(1) == std::vector<Nat>{0});
  CHECK(t6.by_size.at(2) == std::vector<Nat>{1, 2});
  CHECK(t6.by_size.at(3) == std::vector<Nat>{3, 4, 5});
  CHECK(t6.undetermined.empty());

  // {6,7} is half of a size-4 class: no size is attributable at 8.
  auto t8 = type_sets(S, 8);
  CHECK(t8.undetermined == std::vector<Nat>{6, 7});
  CHECK(t8.by_size.count(4) == 0);
}

TEST_CASE("character counts complete classes per size") {
  auto S = canonical_all_sizes();
  auto ch = character_of(S, 6);
  CHECK(ch.counts == std::map<Nat, Nat>{{1, 1}, {2, 1}, {3, 1}});
  CHECK(ch.truncated_classes == 0);

  auto ch8 = character_of(S, 8);
  CHECK(ch8.counts == std::map<Nat, Nat>{{1, 1}, {2, 1}, {3, 1}});
  CHECK(ch8.truncated_classes == 1);

  auto idrel = structure_from_classes("singletons", {});
  auto chi = character_of(idrel, 5);
  CHECK(chi.counts == std::map<Nat, Nat>{{1, 5}});
}

TEST_CASE("faithfulness means closure under the relation") {
  auto S = canonical_all_sizes();
  std::set<Nat> abc{0, 1, 2};
  auto ok = is_faithful([&](Nat x) { return abc.count(x) > 0; }, S, 10);
  CHECK(ok.faithful);
  CHECK_FALSE(ok.counterexample.has_value());

  auto bad = is_faithful([](Nat x) { return x == 1; }, S, 10);
  CHECK_FALSE(bad.faithful);
  REQUIRE(bad.counterexample.has_value());
  CHECK(bad.counterexample->first == 1);
  CHECK(bad.counterexample->second == 2);

  auto empty = is_faithful([](Nat) { return false; }, S, 10);
  CHECK(empty.faithful);
}

TEST_CASE("dense pair layout: singletons at squares, pairs between") {
  auto D = canonical_12(PairLayout::DensePairs);
  CHECK(D.exact_class(0) == std::vector<Nat>{0});
  CHECK(D.exact_class(4) == std::vector<Nat>{4});
  CHECK(D.exact_class(5) == std::vector<Nat>{5, 6});
  CHECK(D.exact_class(6) == std::vector<Nat>{5, 6});
  CHECK(verify_equivalence(D, 800).ok);

  auto t = type_sets(D, 200);
  for (const auto& [size, _] : t.by_size) CHECK(size <= 2);

  // Below n^2 exactly n squares are singletons, everything else paired.
  for (Nat n = 2; n <= 30; ++n) {
    Nat pairs = 0;
    for (Nat x = 0; x < n * n; ++x)
      if (D.exact_class(x)->size() == 2) ++pairs;
    CHECK(pairs == n * n - n);
    CHECK(Rat::ratio(pairs, n * n) >=
          Rat(1) - Rat::ratio(n + 1, n * n));
  }
}

TEST_CASE("sparse pair layout keeps pairs at the squares only") {
  auto S = canonical_12(PairLayout::SparsePairs);
  CHECK(S.exact_class(4) == std::vector<Nat>{4, 5});
  CHECK(S.exact_class(0) == std::vector<Nat>{0});
  CHECK(S.exact_class(1) == std::vector<Nat>{1, 2});
  CHECK(S.exact_class(3) == std::vector<Nat>{3});
  CHECK(verify_equivalence(S, 800).ok);

  for (Nat n = 2; n <= 30; ++n) {
    Nat paired = 0;
    for (Nat x = 0; x < n * n; ++x)
      if (S.exact_class(x)->size() == 2) ++paired;
    CHECK(Rat::ratio(paired, n * n) <= Rat::ratio(2 * n, n * n));
  }
}

TEST_CASE("A_K keeps the classes whose size lands in K") {
  auto ak = build_A_K([](Nat k) { return k == 2; }, 64);
  std::vector<Nat> low;
  for (Nat x : ak.elements)
    if (x < 6) low.push_back(x);
  CHECK(low == std::vector<Nat>{1, 2});
  CHECK(ak.member(1));
  CHECK_FALSE(ak.member(0));
  CHECK_FALSE(ak.member(3));

  auto full = build_A_K([](Nat) { return true; }, 64);
  CHECK(full.elements.size() == 64);
  for (const auto& cp : full.checkpoints) {
    CHECK(cp.missing == 0);
    CHECK(cp.deficit == Rat(0));
    CHECK(cp.ok);
  }
}

TEST_CASE("A_K deficit stays under 2m/n at every checkpoint") {
  // Omit sizes 3 and 5: m freezes at 2, so the bound shrinks like 4/n.
  auto ak = build_A_K([](Nat k) { return k != 3 && k != 5; }, 2100);
  CHECK(!ak.checkpoints.empty());
  for (const auto& cp : ak.checkpoints) {
    CHECK(cp.ok);
    CHECK(cp.deficit <= cp.bound);
    if (cp.classes >= 5) CHECK(cp.missing == 2);
  }
}

TEST_CASE("restriction keeps the relation on the surviving elements") {
  auto S = canonical_all_sizes();
  auto R = restrict_structure(S, [](Nat x) { return x != 4; }, "minus 4");
  CHECK(R.universe(3));
  CHECK_FALSE(R.universe(4));
  CHECK(R.related(3, 5));
  CHECK_FALSE(R.related(3, 4));

  auto cls = R.exact_class(3);
  REQUIRE(cls.has_value());
  CHECK(*cls == std::vector<Nat>{3, 5});
}

TEST_CASE("partner map handles (1,2) structures and refuses triples") {
  auto D = canonical_12(PairLayout::DensePairs);
  auto partner = partner_map(D, 20);
  CHECK(partner[0] == 0);
  CHECK(partner[4] == 4);
  CHECK(partner[5] == 6);
  CHECK(partner[6] == 5);
  for (Nat x = 0; x < 20; ++x) CHECK(partner[partner[x]] == x);

  CHECK_THROWS_AS(partner_map(canonical_all_sizes(), 20), ValidationError);
}

TEST_CASE("explicit class lists build a checkable structure") {
  auto S = structure_from_classes("demo", {{1, 5}, {2, 3, 7}});
  CHECK(S.related(1, 5));
  CHECK(S.related(2, 7));
  CHECK_FALSE(S.related(1, 2));
  CHECK(S.related(4, 4));
  CHECK(S.exact_class(4) == std::vector<Nat>{4});
  CHECK(S.exact_class(3) == std::vector<Nat>{2, 3, 7});
  CHECK(verify_equivalence(S, 50).ok);

  CHECK_THROWS_AS(structure_from_classes("overlap", {{1, 2}, {2, 3}}),
                  ValidationError);
}

TEST_CASE("classes_below reports completeness honestly") {
  auto S = canonical_all_sizes();
  auto cls = classes_below(S, 8);
  REQUIRE(cls.size() == 4);
  CHECK(cls[0].below == std::vector<Nat>{0});
  CHECK(cls[0].complete);
  CHECK(cls[3].below == std::vector<Nat>{6, 7});
  CHECK_FALSE(cls[3].complete);
}

TEST_CASE("declared infinite classes are never size-attributed") {
  auto S = canonical_all_sizes();
  S.declared_infinite = [](Nat x) { return x == 0; };
  auto t = type_sets(S, 6);
  CHECK(t.by_size.count(1) == 0);
  CHECK(t.undetermined == std::vector<Nat>{0});
}
