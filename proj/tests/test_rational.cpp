#include "doctest.h"
#include "eqdensity/rational.hpp"

using eqd::Rat;

TEST_CASE("rational arithmetic is exact and normalized") {
  CHECK(Rat(2, 4) == Rat(1, 2));
  CHECK(Rat(1, 2) + Rat(1, 3) == Rat(5, 6));
  CHECK(Rat(1, 2) - Rat(1, 3) == Rat(1, 6));
  CHECK(Rat(2, 3) * Rat(3, 4) == Rat(1, 2));
  CHECK(Rat(1, 2) / Rat(1, 4) == Rat(2));
  CHECK(Rat(-2, 4) == Rat(-1, 2));
  CHECK(Rat(1, -2) == Rat(-1, 2));
  CHECK(-Rat(1, 2) == Rat(-1, 2));
  CHECK(Rat(0, 7) == Rat(0));
}

TEST_CASE("rational comparisons survive large cross products") {
  // 2^31-ish numerators force the __int128 path in operator<.
  Rat a(2147483647, 2147483646);
  Rat b(2147483646, 2147483645);
  CHECK(a < b);
  CHECK(b > a);
  CHECK(a <= a);
  CHECK(a >= a);
  CHECK(a != b);
  CHECK(Rat(1, 3) < Rat(1, 2));
  CHECK(Rat(-1, 2) < Rat(1, 3));
}

TEST_CASE("ratio, pow2, parse, str") {
  CHECK(Rat::ratio(5, 10) == Rat(1, 2));
  CHECK(Rat::ratio(0, 3) == Rat(0));
  CHECK_THROWS_AS(Rat::ratio(1, 0), eqd::Error);

  CHECK(Rat::pow2(3) == Rat(8));
  CHECK(Rat::pow2(0) == Rat(1));
  CHECK(Rat::pow2(-3) == Rat(1, 8));
  CHECK_THROWS_AS(Rat::pow2(63), eqd::Error);

  CHECK(Rat::parse("3/8") == Rat(3, 8));
  CHECK(Rat::parse("2") == Rat(2));
  CHECK(Rat::parse("10/100") == Rat(1, 10));
  CHECK_THROWS_AS(Rat::parse("1/0"), eqd::Error);
  CHECK_THROWS_AS(Rat::parse("x"), eqd::Error);

  CHECK(Rat(1, 2).str() == "1/2");
  CHECK(Rat(3).str() == "3/1");
  CHECK(Rat(10, 100).str() == "1/10");
  CHECK((Rat(1, 2) - Rat(3, 4)).str() == "-1/4");
}

TEST_CASE("division by zero throws") {
  CHECK_THROWS_AS(Rat(1, 2) / Rat(0), eqd::Error);
  CHECK_THROWS_AS(Rat(1, 0), eqd::Error);
}
