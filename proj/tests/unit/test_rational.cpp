#include "cfsat/errors.hpp"
#include "cfsat/rational.hpp"

#include "doctest.h"

#include <limits>

using namespace cfsat;

TEST_CASE("decimal, fraction and exponent forms parse exactly")
{
    CHECK(parse_rational("12") == 12);
    CHECK(parse_rational("-0.125") == Rational(-1, 8));
    CHECK(parse_rational("1.5e-3") == Rational(3, 2000));
    CHECK(parse_rational("3/4") == Rational(3, 4));
    CHECK(parse_rational("+2.50") == Rational(5, 2));
    CHECK(parse_rational("1E2") == 100);
}

TEST_CASE("malformed numbers are rejected")
{
    for (const char* bad : {"", "abc", "1/0", "1.2.3", "--1", "1e", "nan", "inf", "3/"})
        CHECK_THROWS_AS(parse_rational(bad), ParseError);
}

TEST_CASE("binary doubles convert without rounding")
{
    CHECK(rational_from_double(0.1) == Rational(3602879701896397, Integer("36028797018963968")));
    CHECK(rational_from_double(-2.5) == Rational(-5, 2));
    CHECK(rational_from_double(0.0) == 0);
    CHECK_THROWS_AS(rational_from_double(std::numeric_limits<double>::infinity()), ParseError);
}

TEST_CASE("to_string round-trips")
{
    CHECK(to_string(Rational(1, 8)) == "0.125");
    CHECK(to_string(Rational(-3, 2)) == "-1.5");
    CHECK(to_string(Rational(1, 3)) == "1/3");
    CHECK(to_string(Rational(7)) == "7");
    for (auto v : {Rational(1, 3), Rational(-22, 7), Rational(1, 1024), Rational(123456789, 1000)})
        CHECK(parse_rational(to_string(v)) == v);
}

TEST_CASE("floor and ceil follow the mathematical definition on negatives")
{
    CHECK(cfsat::floor(Rational(-1, 2)) == -1);
    CHECK(cfsat::ceil(Rational(-1, 2)) == 0);
    CHECK(cfsat::floor(Rational(7, 2)) == 3);
    CHECK(cfsat::ceil(Rational(7, 2)) == 4);
    CHECK(cfsat::floor(Rational(4)) == 4);
    CHECK(is_integer(Rational(6, 3)));
    CHECK_FALSE(is_integer(Rational(1, 3)));
}
