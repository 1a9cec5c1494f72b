#include "cfsat/errors.hpp"
#include "cfsat/solver.hpp"

#include "../support/formulae.hpp"

#include "doctest.h"

#include <functional>

using namespace cfsat;
using namespace cfsat::testing;

namespace {

LinearExpr v(const std::string& name, Sort s = Sort::Real) { return LinearExpr::variable({name, s}); }

} // namespace

TEST_CASE("trivial formulae")
{
    CHECK(check_sat(Formula::truth()).sat());
    CHECK_FALSE(check_sat(Formula::falsity()).sat());
    Formula contradiction = lt(v("x"), 0) && gt(v("x"), 0);
    CHECK_FALSE(check_sat(contradiction).sat());
}

TEST_CASE("strict bounds on a real")
{
    SolveOutcome o = check_sat(gt(v("x"), 0) && lt(v("x"), 1));
    REQUIRE(o.sat());
    CHECK(o.witness.at("x") > 0);
    CHECK(o.witness.at("x") < 1);
    CHECK_FALSE(check_sat(gt(v("x"), 0) && le(v("x"), 0)).sat());
}

TEST_CASE("integrality")
{
    LinearExpr x = v("x", Sort::Int);
    CHECK_FALSE(check_sat(gt(x, 0) && lt(x, 1)).sat());
    CHECK_FALSE(check_sat(eq(x * Rational(2), 1)).sat());
    SolveOutcome o = check_sat(eq(x * Rational(2) + v("y", Sort::Int) * Rational(4), 6) && ge(x, 2));
    REQUIRE(o.sat());
    CHECK(is_integer(o.witness.at("x")));
    LinearExpr b = v("b", Sort::Bool);
    CHECK_FALSE(check_sat(gt(b, 0) && lt(b, 1)).sat());
    CHECK_FALSE(check_sat(eq(b, 2)).sat());
}

TEST_CASE("disequalities")
{
    LinearExpr b = v("b", Sort::Bool);
    SolveOutcome o = check_sat(ne(b, 0));
    REQUIRE(o.sat());
    CHECK(o.witness.at("b") == 1);
    CHECK_FALSE(check_sat(ne(b, 0) && ne(b, 1)).sat());
    SolveOutcome r = check_sat(ne(v("x"), 0) && ge(v("x"), 0));
    REQUIRE(r.sat());
    CHECK(r.witness.at("x") > 0);
    CHECK_FALSE(check_sat(ne(v("x"), 0) && ge(v("x"), 0) && le(v("x"), 0)).sat());
}

TEST_CASE("the first tree witness")
{
    ModelSpec m = toy_tree();
    CompiledModel c = compile_model(m);
    Formula f = substitute(c.phi, {{"y", 1}, {"x1", 1}});
    SolveOutcome o = check_sat(f);
    REQUIRE(o.sat());
    CHECK(o.witness.at("x3") <= 0);
    CHECK(witness_satisfies(f, o.witness));
}

TEST_CASE("witness checking is exact")
{
    Formula f = ge(v("x", Sort::Int), 1);
    CHECK(witness_satisfies(f, {{"x", 1}}));
    CHECK_FALSE(witness_satisfies(f, {{"x", Rational(3, 2)}}));
    CHECK_FALSE(witness_satisfies(f, {}));
    CHECK_FALSE(witness_satisfies(ge(v("b", Sort::Bool), 0), {{"b", 2}}));
}

TEST_CASE("sort clash")
{
    CHECK_THROWS_AS(check_sat(eq(v("x", Sort::Int), 1) && eq(v("x", Sort::Real), 1)), SortClash);
}

TEST_CASE("budgets")
{
    std::vector<Formula> parts;
    for (int i = 0; i < 12; ++i)
        parts.push_back(Formula::disj({eq(v("x" + std::to_string(i)), 0), eq(v("x" + std::to_string(i)), 1)}));
    LinearExpr sum;
    for (int i = 0; i < 12; ++i)
        sum += v("x" + std::to_string(i));
    parts.push_back(eq(sum, q(13, 2)));
    SolverOptions tight;
    tight.max_branches = 3;
    CHECK_THROWS_AS(check_sat(Formula::conj(parts), tight), BudgetExceeded);
}

TEST_CASE("determinism")
{
    Gen g(5);
    std::vector<Var> vars{{"a", Sort::Real}, {"b", Sort::Real}, {"c", Sort::Real}};
    for (int i = 0; i < 50; ++i) {
        Formula f = random_formula(g, vars, true, 3);
        SolveOutcome x = check_sat(f), y = check_sat(f);
        CHECK(x.verdict == y.verdict);
        CHECK(x.witness == y.witness);
    }
}

TEST_CASE("agreement with enumeration over integers")
{
    Gen g(11);
    std::vector<Var> vars{{"i", Sort::Int}, {"j", Sort::Int}, {"b", Sort::Bool}};
    std::vector<Rational> grid = integer_grid(12);
    int sat = 0;
    for (int n = 0; n < 300; ++n) {
        // Box the integers so enumeration is complete.
        Formula f = boxed(random_formula(g, vars, false, 3), {vars[0], vars[1]}, -12, 12);
        SolveOutcome o = check_sat(f);
        bool expected = brute_sat(f, vars, grid);
        REQUIRE(o.sat() == expected);
        if (o.sat()) {
            ++sat;
            CHECK(witness_satisfies(f, o.witness));
        }
    }
    CHECK(sat > 30);
    CHECK(sat < 290);
}

TEST_CASE("agreement with enumeration over difference constraints")
{
    Gen g(12);
    std::vector<Var> vars{{"a", Sort::Real}, {"b", Sort::Real}, {"c", Sort::Real}};
    std::vector<Rational> grid = quarter_grid(3);
    for (int n = 0; n < 300; ++n) {
        Formula f = boxed(random_formula(g, vars, true, 3), vars, -3, 3);
        SolveOutcome o = check_sat(f);
        REQUIRE(o.sat() == brute_sat(f, vars, grid));
        if (o.sat())
            CHECK(witness_satisfies(f, o.witness));
    }
}

TEST_CASE("unsat certificates replay")
{
    Gen g(13);
    SolverOptions opts;
    opts.record_certificate = true;
    std::vector<Var> vars{{"a", Sort::Real}, {"b", Sort::Real}, {"i", Sort::Int}};
    int replayed = 0;
    for (int n = 0; n < 200; ++n) {
        Formula f = random_formula(g, vars, false, 3);
        SolveOutcome o = check_sat(f, opts);
        if (o.sat())
            continue;
        REQUIRE(o.certificate);
        CHECK(replay_certificate(*o.certificate));
        ++replayed;
    }
    CHECK(replayed > 10);
}

TEST_CASE("a tampered certificate fails")
{
    SolverOptions opts;
    opts.record_certificate = true;
    SolveOutcome o = check_sat(gt(v("x"), 1) && lt(v("x"), 0), opts);
    REQUIRE_FALSE(o.sat());
    REQUIRE(o.certificate);
    UnsatTrace t = *o.certificate;
    std::function<bool(UnsatTrace&)> tamper = [&](UnsatTrace& n) {
        if (!n.branch && !n.multipliers.empty()) {
            for (auto& m : n.multipliers)
                m = 0;
            return true;
        }
        for (auto& c : n.children)
            if (tamper(c))
                return true;
        return false;
    };
    REQUIRE(tamper(t));
    CHECK_FALSE(replay_certificate(t));
}
