#pragma once

#include "cfsat/rational.hpp"
#include "cfsat/var.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cfsat {

using Assignment = std::map<std::string, Rational, std::less<>>;

struct Term {
    Var var;
    Rational coeff;

    friend bool operator==(const Term&, const Term&) = default;
};

// Sum of coefficient * variable plus a constant. Terms are kept sorted by
// variable name with no zero coefficients, so equal expressions compare equal.
class LinearExpr {
public:
    LinearExpr() = default;
    LinearExpr(Rational constant); // NOLINT(google-explicit-constructor)
    LinearExpr(int constant) : LinearExpr(Rational(constant)) {} // NOLINT
    static LinearExpr variable(Var v, Rational coeff = 1);

    const std::vector<Term>& terms() const { return terms_; }
    const Rational& constant() const { return constant_; }
    bool is_constant() const { return terms_.empty(); }
    Rational coefficient(std::string_view name) const;

    LinearExpr& operator+=(const LinearExpr& other);
    LinearExpr& operator-=(const LinearExpr& other);
    LinearExpr& operator*=(const Rational& k);

    friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
    friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
    friend LinearExpr operator*(LinearExpr a, const Rational& k) { return a *= k; }
    friend LinearExpr operator*(const Rational& k, LinearExpr a) { return a *= k; }
    friend LinearExpr operator-(LinearExpr a) { return a *= Rational(-1); }
    friend bool operator==(const LinearExpr&, const LinearExpr&) = default;

    // Throws EvaluationError if a variable is missing.
    Rational evaluate(const Assignment& values) const;

    std::string str() const;

private:
    std::vector<Term> terms_;
    Rational constant_;
};

enum class Relation { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view relation_symbol(Relation r);
Relation negate_relation(Relation r);
bool compare(const Rational& lhs, Relation r, const Rational& rhs);

struct Atom {
    LinearExpr lhs;
    Relation rel = Relation::Eq;
    LinearExpr rhs;

    friend bool operator==(const Atom&, const Atom&) = default;
    // lhs - rhs
    LinearExpr difference() const { return lhs - rhs; }
};

// Immutable quantifier-free formula over linear atoms. Nodes are shared, so
// copies are cheap and safe to hand to concurrent readers.
class Formula {
public:
    enum class Kind { True, False, Atom, And, Or, Not };

    Formula(); // true

    static Formula truth();
    static Formula falsity();
    // Atoms whose two sides differ by a constant fold to true/false.
    static Formula atom(LinearExpr lhs, Relation rel, LinearExpr rhs);
    static Formula atom(Atom a);
    // Flattens nested conjunctions, drops `true`, short-circuits on `false`.
    static Formula conj(std::vector<Formula> parts);
    static Formula disj(std::vector<Formula> parts);
    static Formula negation(Formula f);

    Kind kind() const;
    const Atom& as_atom() const;
    const std::vector<Formula>& children() const;

    bool is_true() const { return kind() == Kind::True; }
    bool is_false() const { return kind() == Kind::False; }

    // Same node (not structural equality).
    bool same(const Formula& other) const { return node_ == other.node_; }
    friend bool operator==(const Formula& a, const Formula& b);

    std::string str() const;

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

Formula operator&&(Formula a, Formula b);
Formula operator||(Formula a, Formula b);
Formula operator!(Formula a);

// Convenience atom builders.
Formula eq(LinearExpr a, LinearExpr b);
Formula ne(LinearExpr a, LinearExpr b);
Formula lt(LinearExpr a, LinearExpr b);
Formula le(LinearExpr a, LinearExpr b);
Formula gt(LinearExpr a, LinearExpr b);
Formula ge(LinearExpr a, LinearExpr b);

// Negation of an atom as an atom. On a lone Bool variable compared with 0 or 1
// the result is again an equality (not (b = 1) gives b = 0).
Atom negate_atom(const Atom& a);

// Negation normal form: only atoms under And/Or, no Not nodes. Free variables
// are unchanged.
Formula to_nnf(const Formula& f);

// Sort of every free variable; throws SortClash when one name has two sorts.
std::map<std::string, Sort, std::less<>> free_variables(const Formula& f);

// Exact truth value; Bool/Int sorted variables are not checked for
// integrality here (see solver witness checks).
bool evaluate(const Formula& f, const Assignment& values);

// Replaces variables by constants and folds.
Formula substitute(const Formula& f, const Assignment& values);

// Renames variables (and may change their sort).
Formula rename(const Formula& f, const std::map<std::string, Var, std::less<>>& renaming);

// Number of nodes, for statistics.
std::size_t formula_size(const Formula& f);

} // namespace cfsat
