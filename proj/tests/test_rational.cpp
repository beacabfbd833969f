#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "tatum/errors.hpp"
#include "tatum/rational.hpp"

using namespace tatum;

TEST_CASE("construction normalizes sign and gcd") {
    CHECK(Rational(4, 8) == Rational(1, 2));
    CHECK(Rational(-4, 8) == Rational(-1, 2));
    CHECK(Rational(4, -8) == Rational(-1, 2));
    CHECK(Rational(-4, -8) == Rational(1, 2));
    CHECK(Rational(0, 7) == Rational(0));
    CHECK(Rational(0, 7).den == 1);
    CHECK_THROWS_AS(Rational(1, 0), DimensionError);
}

TEST_CASE("arithmetic is exact") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 2) - Rational(1, 3) == Rational(1, 6));
    CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
    CHECK(-Rational(1, 2) == Rational(-1, 2));
    // would overflow naive cross multiplication only at much larger values;
    // spot-check a moderately large exact sum
    CHECK(Rational(1, 1000000) + Rational(1, 1000000) == Rational(1, 500000));
}

TEST_CASE("ordering is dense and usable as a map key") {
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(-1, 2) < Rational(0));
    CHECK(Rational(7, 3) > Rational(2));
    std::map<Rational, int> m;
    m[Rational(1, 2)] = 1;
    m[Rational(2, 4)] = 2; // same key
    m[Rational(1, 3)] = 3;
    CHECK(m.size() == 2);
    CHECK(m[Rational(1, 2)] == 2);
}

TEST_CASE("floor and mod1") {
    CHECK(Rational(7, 2).floor() == 3);
    CHECK(Rational(-1, 2).floor() == -1);
    CHECK(Rational(3).floor() == 3);
    CHECK(Rational(7, 2).mod1() == Rational(1, 2));
    CHECK(Rational(-1, 4).mod1() == Rational(3, 4));
    CHECK(Rational(5).mod1() == Rational(0));
    CHECK(Rational(2, 3).is_integer() == false);
    CHECK(Rational(6, 3).is_integer() == true);
}

TEST_CASE("value") {
    CHECK(Rational(1, 4).value() == doctest::Approx(0.25));
    CHECK(Rational(-3, 2).value() == doctest::Approx(-1.5));
}

TEST_CASE("str and parse round-trip") {
    CHECK(Rational(3, 4).str() == "3/4");
    CHECK(Rational(5).str() == "5");
    CHECK(Rational(-1, 2).str() == "-1/2");
    CHECK(parse_rational("3/4") == Rational(3, 4));
    CHECK(parse_rational("-7/2") == Rational(-7, 2));
    CHECK(parse_rational("12") == Rational(12));
    CHECK(parse_rational(Rational(9, 32).str()) == Rational(9, 32));
}

TEST_CASE("parse rejects junk") {
    CHECK_THROWS_AS(parse_rational(""), FormatError);
    CHECK_THROWS_AS(parse_rational("1/"), FormatError);
    CHECK_THROWS_AS(parse_rational("/2"), FormatError);
    CHECK_THROWS_AS(parse_rational("1.5"), FormatError);
    CHECK_THROWS_AS(parse_rational("a"), FormatError);
    CHECK_THROWS_AS(parse_rational("1/0"), FormatError);
    CHECK_THROWS_AS(parse_rational("1 /2"), FormatError);
}
