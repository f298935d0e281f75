#include <vector>

#include "doctest.h"
#include "eqdensity/density.hpp"

using namespace eqd;

namespace {

bool is_square(Nat x) {
  Nat r = 0;
  while (r * r < x) ++r;
  return r * r == x;
}

}  // namespace

TEST_CASE("prefix density counts inclusively") {
  SetPred evens = [](Nat x) { return x % 2 == 0; };
  SetPred all = [](Nat) { return true; };
  CHECK(prefix_density(evens, 9) == Rat(1, 2));
  CHECK(prefix_density(all, 123) == Rat(1));
  CHECK(prefix_density(is_square, 99) == Rat(10, 100));
  CHECK(prefix_density([](Nat) { return false; }, 5) == Rat(0));
}

TEST_CASE("prefix density equals the naive tally") {
  std::vector<SetPred> fams = {
      [](Nat x) { return x % 2 == 0; },
      [](Nat x) { return x % 3 == 1; },
      is_square,
      [](Nat x) { return x < 37; },
      [](Nat x) { return (x / 8) % 2 == 0; },
  };
  for (const auto& f : fams) {
    for (Nat n = 0; n < 300; n += 7) {
      Nat count = 0;
      for (Nat x = 0; x <= n; ++x)
        if (f(x)) ++count;
      CHECK(prefix_density(f, n) == Rat::ratio(count, n + 1));
    }
  }
}

TEST_CASE("density profile settles exactly when the tail is flat enough") {
  SetPred evens = [](Nat x) { return x % 2 == 0; };
  auto p = density_profile(evens, 2000, 200, Rat(1, 50));
  CHECK(p.converged);
  CHECK(p.liminf_est >= Rat(1, 2) - Rat(1, 50));
  CHECK(p.limsup_est <= Rat(1, 2) + Rat(1, 50));
  CHECK(p.values.size() == 2000);
  CHECK(p.values[9] == prefix_density(evens, 9));

  auto sparse = density_profile(is_square, 10000, 500, Rat(1, 50));
  CHECK(sparse.converged);
  CHECK(sparse.limsup_est <= Rat(1, 20));

  // Blocks [2^k, 2^{k+1}) alternately full and empty keep the prefix
  // density swinging between 1/3 and 2/3; no window this wide goes quiet.
  SetPred osc = [](Nat x) {
    Nat k = 0;
    while ((Nat(2) << k) <= x) ++k;  // x in [2^k, 2^{k+1})
    return k % 2 == 0;
  };
  auto wild = density_profile(osc, 4096, 2048, Rat(1, 10));
  CHECK_FALSE(wild.converged);

  CHECK_THROWS_AS(density_profile(evens, 10, 11, Rat(1, 2)), ValidationError);
  CHECK_THROWS_AS(density_profile(evens, 0, 1, Rat(1, 2)), ValidationError);
}

TEST_CASE("dense subset extraction logs the certifying checkpoints") {
  auto A = gen::identity(64);
  auto out = extract_dense_subset(A, 64, 32);
  REQUIRE_FALSE(out.certificate.segments.empty());
  const auto& first = out.certificate.segments.front();
  CHECK(first.k == 1);
  CHECK(first.n_k == 1);
  CHECK(first.s_k == 2);
  CHECK(out.certificate.coverage >= 32);
  CHECK(out.member.size() == out.certificate.coverage);

  Nat base = 0;
  for (const auto& seg : out.certificate.segments) {
    CHECK(seg.seg_begin == base);
    CHECK(seg.seg_len == seg.n_k - base);
    CHECK(seg.bound_met);
    // Claimed bound: at least (2^k - 1)/2^k of the segment is in B.
    if (auto c = seg.claimed())
      CHECK(Rat::ratio(seg.seg_count, seg.seg_len) >= *c);
    base = seg.n_k;
  }

  // B sits inside A at the oracle's own budget.
  for (Nat x = 0; x < out.certificate.coverage; ++x)
    if (out.member[x]) CHECK(A.contains_at(x, A.budget()));
}

TEST_CASE("extraction works on bursty and delayed enumerations") {
  // The bursty blocks leave a hole at [24, 120), so the third segment cannot
  // close until the [5040, 40320) block is in reach; a 4096 budget strands it.
  for (auto A : {gen::block_bursty(65536), gen::delayed(2, 4096)}) {
    auto out = extract_dense_subset(A, A.budget(), 512);
    CHECK(out.certificate.coverage >= 512);
    for (const auto& seg : out.certificate.segments) CHECK(seg.bound_met);
    for (Nat x = 0; x < out.certificate.coverage; ++x)
      if (out.member[x]) CHECK(A.contains_at(x, A.budget()));
  }
}

TEST_CASE("extraction on a finite set runs out and reports its progress") {
  auto A = gen::from_values("ten", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 64);
  try {
    extract_dense_subset(A, 64, 32);
    FAIL("expected exhaustion");
  } catch (const DenseExtractionExhausted& e) {
    CHECK(e.partial.certificate.coverage < 32);
  }
}

TEST_CASE("extraction refuses a target at or past the budget") {
  auto A = gen::identity(16);
  CHECK_THROWS_AS(extract_dense_subset(A, 16, 16), ValidationError);
  CHECK_THROWS_AS(extract_dense_subset(A, 17, 4), BudgetExceeded);
}

TEST_CASE("square density pairs the prefix with its product square") {
  SetPred evens = [](Nat x) { return x % 2 == 0; };
  auto [d, dd] = square_density_check(evens, 10);
  CHECK(d == Rat(1, 2));
  CHECK(dd == Rat(1, 4));

  SetPred tiny = [](Nat x) { return x < 3; };
  auto [t, tt] = square_density_check(tiny, 10);
  CHECK(t == Rat(3, 10));
  CHECK(tt == Rat(9, 100));

  CHECK_THROWS_AS(square_density_check(evens, 0), ValidationError);
}

TEST_CASE("square density sweep tallies the product set exactly") {
  std::vector<SetPred> fams = {
      [](Nat x) { return x % 2 == 0; },
      is_square,
      [](Nat x) { return x % 5 < 2; },
      [](Nat) { return true; },
  };
  for (const auto& f : fams) {
    auto sweep = square_density_sweep(f, 400);
    REQUIRE(sweep.size() == 400);
    Nat count = 0;
    Nat pairs = 0;  // |A x A| restricted to the n-square, kept incrementally
    for (Nat n = 1; n <= 400; ++n) {
      if (f(n - 1)) {
        pairs += 2 * count + 1;
        ++count;
      }
      CHECK(sweep[n - 1].first == Rat::ratio(count, n));
      CHECK(sweep[n - 1].second == Rat::ratio(pairs, n * n));
    }
  }
}

TEST_CASE("diagonal complement dodges the first large member of each oracle") {
  OracleRegistry<EnumerationOracle> reg;
  reg.add(gen::identity(64));
  auto C = DiagonalComplement(reg);

  // The first identity value past 2^0 is 2, visible from stage 3.
  CHECK(C.diagonal_value(0, 64) == Nat(2));
  CHECK_FALSE(C.contains(2, 5));
  CHECK_FALSE(C.contains(5, 2));
  CHECK(C.contains(1, 5));
  CHECK(C.contains(0, 0));

  // Before the diagonal value is visible nothing is excluded.
  CHECK(C.count_in_square(2) == 4);

  auto ws = C.witnesses(64);
  REQUIRE(ws.size() == 1);
  CHECK(ws[0].found);
  CHECK(C.contains(ws[0].a, ws[0].b));
  CHECK(reg.at(0).contains_at(ws[0].a, 64));
  CHECK(reg.at(0).contains_at(ws[0].b, 64));
}

TEST_CASE("empty registry excludes nothing") {
  OracleRegistry<EnumerationOracle> reg;
  auto C = DiagonalComplement(reg);
  for (Nat a = 0; a < 8; ++a)
    for (Nat b = 0; b < 8; ++b) CHECK(C.contains(a, b));
  CHECK(C.count_in_square(8) == 64);
}

TEST_CASE("diagonal complement density clears the advertised bound") {
  OracleRegistry<EnumerationOracle> reg;
  reg.add(gen::identity(1024));
  reg.add(gen::evens(1024));
  reg.add(gen::squares(1024));
  auto C = DiagonalComplement(reg);
  for (Nat i = 1; i <= 10; ++i) {
    Nat side = Nat(1) << i;
    Rat measured = Rat::ratio(C.count_in_square(side), side * side);
    Rat bound = Rat(static_cast<std::int64_t>(side - i)) *
                Rat(static_cast<std::int64_t>(side - i)) /
                Rat(static_cast<std::int64_t>(side * side));
    CHECK(measured >= bound);
  }
}

TEST_CASE("density transfer agrees between relative and prefix readings") {
  SetPred A = [](Nat x) { return x % 2 == 0; };
  SetPred C = [](Nat x) { return x % 2 == 0 && is_square(x / 2); };
  auto rep = density_transfer_check(A, C, 4000, 400, Rat(1, 10));
  CHECK(rep.consistent);
  CHECK(rep.relative_tail_max <= Rat(1, 10));
  CHECK(rep.prefix_tail_max <= Rat(1, 10));

  SetPred none = [](Nat) { return false; };
  auto empty = density_transfer_check(A, none, 2000, 200, Rat(1, 10));
  CHECK(empty.consistent);
  CHECK(empty.relative_tail_max == Rat(0));

  SetPred notin = [](Nat x) { return x == 1; };
  CHECK_THROWS_AS(density_transfer_check(A, notin, 2000, 200, Rat(1, 10)),
                  ContainmentError);
}
