#include "cfsat/distance.hpp"
#include "cfsat/errors.hpp"
#include "cfsat/solver.hpp"

#include "../support/fixtures.hpp"

#include "doctest.h"

using namespace cfsat;
using namespace cfsat::testing;

namespace {

Assignment encoded_values(const FeatureSchema& s, const RawInstance& x)
{
    EncodedVector e = encode_instance(s, x);
    Assignment a;
    for (std::size_t i = 0; i < e.size(); ++i)
        a[s.encoded()[i].var.name] = e[i];
    return a;
}

// phi_d(x, delta) with x fixed, auxiliaries left to the solver.
bool within(const Formula& phi, const FeatureSchema& s, const RawInstance& x)
{
    return check_sat(substitute(phi, encoded_values(s, x))).sat();
}

FeatureSchema three_reals()
{
    return FeatureSchema({FeatureSpec{"a", FeatureKind::Real, 0, 10}, FeatureSpec{"b", FeatureKind::Real, 0, 10},
                          FeatureSpec{"c", FeatureKind::Real, 0, 10}});
}

} // namespace

TEST_CASE("per-feature distances")
{
    CHECK(feature_distance(FeatureSpec{"n", FeatureKind::Real, 10, 60}, 30, 40) == Rational(1, 5));
    FeatureSpec deg{"deg", FeatureKind::Categorical, 0, 2, {"graduate", "some", "none"}};
    CHECK(feature_distance(deg, 0, 1) == 1);
    CHECK(feature_distance(deg, 1, 1) == 0);
    FeatureSpec ord{"o", FeatureKind::Ordinal, 1, 4, {}, 4};
    CHECK(feature_distance(ord, 3, 1) == Rational(2, 3));
    CHECK(feature_distance(FeatureSpec{"k", FeatureKind::Real, 5, 5}, 5, 5) == 0);
    CHECK(feature_distance(FeatureSpec{"i", FeatureKind::Integer, 0, 8}, 2, 6) == Rational(1, 2));
}

TEST_CASE("distance values")
{
    FeatureSchema s = three_reals();
    RawInstance x{1, 2, 3};
    for (NormPreset p : {NormPreset::L0, NormPreset::L1, NormPreset::Linf, NormPreset::Combined})
        CHECK(distance_value(DistanceConfig::preset(p), s, x, x) == 0);
    CHECK(distance_value(DistanceConfig::preset(NormPreset::L0), s, {1, 2, 9}, x) == Rational(1, 3));

    FeatureSchema two({FeatureSpec{"a", FeatureKind::Real, 0, 2}, FeatureSpec{"b", FeatureKind::Real, 0, 2}});
    CHECK(distance_value(DistanceConfig::preset(NormPreset::Combined), two, {1, 0}, {0, 0}) == Rational(5, 12));
}

TEST_CASE("weights normalise and presets isolate one norm")
{
    DistanceConfig w = DistanceConfig::weights(2, 1, 1);
    CHECK(w.alpha == Rational(1, 2));
    CHECK(w.alpha + w.beta + w.gamma == 1);
    CHECK_THROWS_AS(DistanceConfig::weights(-1, 1, 1), ValidationError);
    CHECK_THROWS_AS(DistanceConfig::weights(0, 0, 0), ValidationError);
    auto l0 = DistanceConfig::preset(NormPreset::L0);
    CHECK((l0.alpha > 0 && l0.beta == 0 && l0.gamma == 0));
    auto l1 = DistanceConfig::preset(NormPreset::L1);
    CHECK((l1.beta > 0 && l1.alpha == 0 && l1.gamma == 0));
    auto linf = DistanceConfig::preset(NormPreset::Linf);
    CHECK((linf.gamma > 0 && linf.alpha == 0 && linf.beta == 0));
    CHECK(parse_norm("linf") == NormPreset::Linf);
    CHECK_THROWS_AS(parse_norm("l2"), ParseError);
}

TEST_CASE("maximal change reaches distance one")
{
    FeatureSpec cat{"c", FeatureKind::Categorical, 0, 2, {"a", "b", "c"}, 0, Encoding::OneHot};
    FeatureSpec ord{"o", FeatureKind::Ordinal, 1, 3, {}, 3, Encoding::Thermometer};
    FeatureSchema s({FeatureSpec{"r", FeatureKind::Real, -1, 1}, cat, ord, FeatureSpec{"b", FeatureKind::Binary, 0, 1}});
    RawInstance lo{-1, 0, 1, 0}, hi{1, 2, 3, 1};
    for (NormPreset p : {NormPreset::L0, NormPreset::L1, NormPreset::Linf, NormPreset::Combined})
        CHECK(distance_value(DistanceConfig::preset(p), s, lo, hi) == 1);
}

TEST_CASE("l0 threshold counts changed features")
{
    FeatureSchema s = three_reals();
    RawInstance xhat{5, 5, 5};
    Formula phi = distance_formula(DistanceConfig::preset(NormPreset::L0), s, xhat, Rational(2, 5));
    CHECK(within(phi, s, {5, 5, 5}));
    CHECK(within(phi, s, {9, 5, 5}));
    CHECK(within(phi, s, {5, 0, 5}));
    CHECK_FALSE(within(phi, s, {9, 0, 5}));
    CHECK_FALSE(within(phi, s, {9, 0, 1}));
}

TEST_CASE("zero threshold pins every feature")
{
    FeatureSchema s = three_reals();
    Formula phi = distance_formula(DistanceConfig::preset(NormPreset::L1), s, {5, 5, 5}, Rational(0));
    CHECK(within(phi, s, {5, 5, 5}));
    CHECK_FALSE(within(phi, s, {5, 5, Rational(51, 10)}));
}

TEST_CASE("l1 on one numerical feature")
{
    FeatureSchema s({FeatureSpec{"x", FeatureKind::Real, 0, 10}});
    Formula phi = distance_formula(DistanceConfig::preset(NormPreset::L1), s, {5}, Rational(1, 5));
    CHECK(within(phi, s, {6}));
    CHECK(within(phi, s, {3}));
    CHECK_FALSE(within(phi, s, {8}));
}

TEST_CASE("threshold outside the unit interval is rejected")
{
    FeatureSchema s = three_reals();
    CHECK_THROWS_AS(distance_formula(DistanceConfig::preset(NormPreset::L1), s, {1, 1, 1}, Rational(3, 2)),
                    ValidationError);
    CHECK_THROWS_AS(distance_formula(DistanceConfig::preset(NormPreset::L1), s, {1, 1, 1}, Rational(-1)),
                    ValidationError);
}

TEST_CASE("a one-hot switch counts once")
{
    FeatureSpec cat{"c", FeatureKind::Categorical, 0, 2, {"a", "b", "c"}, 0, Encoding::OneHot};
    FeatureSchema s({cat, FeatureSpec{"r", FeatureKind::Real, 0, 1}});
    Formula phi = distance_formula(DistanceConfig::preset(NormPreset::L0), s, {0, 0}, Rational(1, 2));
    CHECK(within(phi, s, {2, 0}));
    CHECK_FALSE(within(phi, s, {2, 1}));
}

TEST_CASE("the formula agrees with the value on random triples")
{
    Gen g(31);
    std::vector<DistanceConfig> configs{DistanceConfig::preset(NormPreset::L0), DistanceConfig::preset(NormPreset::L1),
                                        DistanceConfig::preset(NormPreset::Linf),
                                        DistanceConfig::preset(NormPreset::Combined),
                                        DistanceConfig::weights(1, 2, 3)};
    int checked = 0;
    for (int round = 0; round < 20; ++round) {
        FeatureSchema s = random_schema(g, {g.integer(0, 2), g.integer(0, 1), g.integer(0, 1), g.integer(0, 1),
                                            g.integer(0, 1)});
        for (int i = 0; i < 50; ++i) {
            RawInstance x = random_instance(g, s, 4);
            RawInstance xhat = random_instance(g, s, 4);
            const DistanceConfig& cfg = g.pick(configs);
            Rational d = distance_value(cfg, s, x, xhat);
            REQUIRE(d >= 0);
            REQUIRE(d <= 1);
            // Thresholds at, just below and at random points of [0, 1].
            for (Rational delta : std::vector<Rational>{d, Rational(d - Rational(1, 97)), q(g.integer(0, 20), 20)}) {
                if (delta < 0 || delta > 1)
                    continue;
                auto enc = g.coin() ? DistanceEncoding::Auxiliary : DistanceEncoding::Program;
                Formula phi = distance_formula(cfg, s, xhat, delta, enc);
                INFO("x=", s.format_value(0, x[0]), " delta=", to_string(delta), " d=", to_string(d));
                REQUIRE(within(phi, s, x) == (d <= delta));
                ++checked;
            }
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("the distance program computes the distance")
{
    Gen g(32);
    for (int round = 0; round < 10; ++round) {
        FeatureSchema s = random_schema(g, {2, 1, 1, 1, 1});
        RawInstance xhat = random_instance(g, s);
        DistanceConfig cfg = DistanceConfig::weights(g.integer(0, 3), g.integer(0, 3), g.integer(1, 3));
        Program p = distance_program(cfg, s, xhat);
        for (int i = 0; i < 20; ++i) {
            RawInstance x = random_instance(g, s);
            EncodedVector e = encode_instance(s, x);
            CHECK(evaluate_program(p, std::span<const Rational>(e)) == distance_value(cfg, s, x, xhat));
        }
    }
}
