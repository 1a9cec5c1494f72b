#include "cfsat/formula.hpp"

#include "cfsat/errors.hpp"

#include <algorithm>
#include <sstream>

namespace cfsat {

std::string_view sort_name(Sort s)
{
    switch (s) {
    case Sort::Bool: return "Bool";
    case Sort::Int: return "Int";
    case Sort::Real: return "Real";
    }
    return "?";
}

// ---------------------------------------------------------------- LinearExpr

LinearExpr::LinearExpr(Rational constant) : constant_(std::move(constant)) {}

LinearExpr LinearExpr::variable(Var v, Rational coeff)
{
    LinearExpr e;
    if (coeff != 0)
        e.terms_.push_back(Term{std::move(v), std::move(coeff)});
    return e;
}

Rational LinearExpr::coefficient(std::string_view name) const
{
    auto it = std::lower_bound(terms_.begin(), terms_.end(), name,
                               [](const Term& t, std::string_view n) { return t.var.name < n; });
    if (it != terms_.end() && it->var.name == name)
        return it->coeff;
    return 0;
}

namespace {

void merge_terms(std::vector<Term>& into, const std::vector<Term>& other, const Rational& scale)
{
    std::vector<Term> out;
    out.reserve(into.size() + other.size());
    auto a = into.begin();
    auto b = other.begin();
    while (a != into.end() || b != other.end()) {
        if (b == other.end() || (a != into.end() && a->var.name < b->var.name)) {
            out.push_back(std::move(*a++));
        } else if (a == into.end() || b->var.name < a->var.name) {
            out.push_back(Term{b->var, b->coeff * scale});
            ++b;
        } else {
            if (a->var.sort != b->var.sort)
                throw SortClash("variable '" + a->var.name + "' used as " +
                                std::string(sort_name(a->var.sort)) + " and " +
                                std::string(sort_name(b->var.sort)));
            Rational c = a->coeff + b->coeff * scale;
            if (c != 0)
                out.push_back(Term{std::move(a->var), std::move(c)});
            ++a;
            ++b;
        }
    }
    into = std::move(out);
}

} // namespace

LinearExpr& LinearExpr::operator+=(const LinearExpr& other)
{
    merge_terms(terms_, other.terms_, Rational(1));
    constant_ += other.constant_;
    return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& other)
{
    merge_terms(terms_, other.terms_, Rational(-1));
    constant_ -= other.constant_;
    return *this;
}

LinearExpr& LinearExpr::operator*=(const Rational& k)
{
    if (k == 0) {
        terms_.clear();
        constant_ = 0;
        return *this;
    }
    for (auto& t : terms_)
        t.coeff *= k;
    constant_ *= k;
    return *this;
}

Rational LinearExpr::evaluate(const Assignment& values) const
{
    Rational r = constant_;
    for (const auto& t : terms_) {
        auto it = values.find(t.var.name);
        if (it == values.end())
            throw EvaluationError("no value for variable '" + t.var.name + "'");
        r += t.coeff * it->second;
    }
    return r;
}

std::string LinearExpr::str() const
{
    std::ostringstream os;
    bool first = true;
    for (const auto& t : terms_) {
        Rational c = t.coeff;
        if (first) {
            if (c < 0) {
                os << "-";
                c = -c;
            }
        } else {
            os << (c < 0 ? " - " : " + ");
            if (c < 0)
                c = -c;
        }
        if (c != 1)
            os << to_string(c) << "*";
        os << t.var.name;
        first = false;
    }
    if (first)
        os << to_string(constant_);
    else if (constant_ > 0)
        os << " + " << to_string(constant_);
    else if (constant_ < 0)
        os << " - " << to_string(Rational(-constant_));
    return os.str();
}

// ---------------------------------------------------------------- Relations

std::string_view relation_symbol(Relation r)
{
    switch (r) {
    case Relation::Eq: return "=";
    case Relation::Ne: return "!=";
    case Relation::Lt: return "<";
    case Relation::Le: return "<=";
    case Relation::Gt: return ">";
    case Relation::Ge: return ">=";
    }
    return "?";
}

Relation negate_relation(Relation r)
{
    switch (r) {
    case Relation::Eq: return Relation::Ne;
    case Relation::Ne: return Relation::Eq;
    case Relation::Lt: return Relation::Ge;
    case Relation::Le: return Relation::Gt;
    case Relation::Gt: return Relation::Le;
    case Relation::Ge: return Relation::Lt;
    }
    return r;
}

bool compare(const Rational& lhs, Relation r, const Rational& rhs)
{
    switch (r) {
    case Relation::Eq: return lhs == rhs;
    case Relation::Ne: return lhs != rhs;
    case Relation::Lt: return lhs < rhs;
    case Relation::Le: return lhs <= rhs;
    case Relation::Gt: return lhs > rhs;
    case Relation::Ge: return lhs >= rhs;
    }
    return false;
}

// ---------------------------------------------------------------- Formula

struct Formula::Node {
    Kind kind = Kind::True;
    Atom atom;
    std::vector<Formula> children;
};

Formula::Formula() : Formula(truth()) {}

Formula Formula::truth()
{
    static const auto node = std::make_shared<const Node>(Node{Kind::True, {}, {}});
    return Formula(node);
}

Formula Formula::falsity()
{
    static const auto node = std::make_shared<const Node>(Node{Kind::False, {}, {}});
    return Formula(node);
}

Formula Formula::atom(LinearExpr lhs, Relation rel, LinearExpr rhs)
{
    return atom(Atom{std::move(lhs), rel, std::move(rhs)});
}

Formula Formula::atom(Atom a)
{
    LinearExpr diff = a.difference();
    if (diff.is_constant())
        return compare(diff.constant(), a.rel, Rational(0)) ? truth() : falsity();
    return Formula(std::make_shared<const Node>(Node{Kind::Atom, std::move(a), {}}));
}

Formula Formula::conj(std::vector<Formula> parts)
{
    std::vector<Formula> flat;
    flat.reserve(parts.size());
    for (auto& p : parts) {
        switch (p.kind()) {
        case Kind::True: break;
        case Kind::False: return falsity();
        case Kind::And:
            for (const auto& c : p.children())
                flat.push_back(c);
            break;
        default: flat.push_back(std::move(p));
        }
    }
    if (flat.empty())
        return truth();
    if (flat.size() == 1)
        return flat.front();
    return Formula(std::make_shared<const Node>(Node{Kind::And, {}, std::move(flat)}));
}

Formula Formula::disj(std::vector<Formula> parts)
{
    std::vector<Formula> flat;
    flat.reserve(parts.size());
    for (auto& p : parts) {
        switch (p.kind()) {
        case Kind::False: break;
        case Kind::True: return truth();
        case Kind::Or:
            for (const auto& c : p.children())
                flat.push_back(c);
            break;
        default: flat.push_back(std::move(p));
        }
    }
    if (flat.empty())
        return falsity();
    if (flat.size() == 1)
        return flat.front();
    return Formula(std::make_shared<const Node>(Node{Kind::Or, {}, std::move(flat)}));
}

Formula Formula::negation(Formula f)
{
    switch (f.kind()) {
    case Kind::True: return falsity();
    case Kind::False: return truth();
    case Kind::Not: return f.children().front();
    case Kind::Atom: return atom(negate_atom(f.as_atom()));
    default: return Formula(std::make_shared<const Node>(Node{Kind::Not, {}, {std::move(f)}}));
    }
}

Formula::Kind Formula::kind() const { return node_->kind; }
const Atom& Formula::as_atom() const { return node_->atom; }
const std::vector<Formula>& Formula::children() const { return node_->children; }

bool operator==(const Formula& a, const Formula& b)
{
    if (a.node_ == b.node_)
        return true;
    if (a.kind() != b.kind())
        return false;
    if (a.kind() == Formula::Kind::Atom)
        return a.as_atom() == b.as_atom();
    return a.children() == b.children();
}

namespace {

void print(std::ostream& os, const Formula& f, bool nested)
{
    using K = Formula::Kind;
    switch (f.kind()) {
    case K::True: os << "true"; return;
    case K::False: os << "false"; return;
    case K::Atom: {
        const auto& a = f.as_atom();
        os << a.lhs.str() << " " << relation_symbol(a.rel) << " " << a.rhs.str();
        return;
    }
    case K::Not:
        os << "not (";
        print(os, f.children().front(), false);
        os << ")";
        return;
    case K::And:
    case K::Or: {
        const char* sep = f.kind() == K::And ? " and " : " or ";
        if (nested)
            os << "(";
        bool first = true;
        for (const auto& c : f.children()) {
            if (!first)
                os << sep;
            print(os, c, true);
            first = false;
        }
        if (nested)
            os << ")";
        return;
    }
    }
}

} // namespace

std::string Formula::str() const
{
    std::ostringstream os;
    print(os, *this, false);
    return os.str();
}

Formula operator&&(Formula a, Formula b) { return Formula::conj({std::move(a), std::move(b)}); }
Formula operator||(Formula a, Formula b) { return Formula::disj({std::move(a), std::move(b)}); }
Formula operator!(Formula a) { return Formula::negation(std::move(a)); }

Formula eq(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Eq, std::move(b)); }
Formula ne(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Ne, std::move(b)); }
Formula lt(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Lt, std::move(b)); }
Formula le(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Le, std::move(b)); }
Formula gt(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Gt, std::move(b)); }
Formula ge(LinearExpr a, LinearExpr b) { return Formula::atom(std::move(a), Relation::Ge, std::move(b)); }

Atom negate_atom(const Atom& a)
{
    if (a.rel == Relation::Eq || a.rel == Relation::Ne) {
        LinearExpr d = a.difference();
        if (d.terms().size() == 1 && d.terms().front().var.sort == Sort::Bool) {
            // c*b + k = 0  <=>  b = -k/c
            Rational value = -d.constant() / d.terms().front().coeff;
            if (value == 0 || value == 1) {
                Rational other = a.rel == Relation::Eq ? Rational(1 - value) : value;
                return Atom{LinearExpr::variable(d.terms().front().var), Relation::Eq, LinearExpr(other)};
            }
        }
    }
    return Atom{a.lhs, negate_relation(a.rel), a.rhs};
}

namespace {

Formula nnf(const Formula& f, bool negated)
{
    using K = Formula::Kind;
    switch (f.kind()) {
    case K::True: return negated ? Formula::falsity() : f;
    case K::False: return negated ? Formula::truth() : f;
    case K::Atom: return negated ? Formula::atom(negate_atom(f.as_atom())) : f;
    case K::Not: return nnf(f.children().front(), !negated);
    case K::And:
    case K::Or: {
        std::vector<Formula> parts;
        parts.reserve(f.children().size());
        for (const auto& c : f.children())
            parts.push_back(nnf(c, negated));
        bool make_and = (f.kind() == K::And) != negated;
        return make_and ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    }
    return f;
}

void collect_vars(const Formula& f, std::map<std::string, Sort, std::less<>>& out)
{
    using K = Formula::Kind;
    auto add = [&](const LinearExpr& e) {
        for (const auto& t : e.terms()) {
            auto [it, inserted] = out.emplace(t.var.name, t.var.sort);
            if (!inserted && it->second != t.var.sort)
                throw SortClash("variable '" + t.var.name + "' declared as " +
                                std::string(sort_name(it->second)) + " and " +
                                std::string(sort_name(t.var.sort)));
        }
    };
    if (f.kind() == K::Atom) {
        add(f.as_atom().lhs);
        add(f.as_atom().rhs);
        return;
    }
    for (const auto& c : f.children())
        collect_vars(c, out);
}

LinearExpr substitute_expr(const LinearExpr& e, const Assignment& values)
{
    LinearExpr out(e.constant());
    for (const auto& t : e.terms()) {
        auto it = values.find(t.var.name);
        if (it != values.end())
            out += LinearExpr(t.coeff * it->second);
        else
            out += LinearExpr::variable(t.var, t.coeff);
    }
    return out;
}

LinearExpr rename_expr(const LinearExpr& e, const std::map<std::string, Var, std::less<>>& renaming)
{
    LinearExpr out(e.constant());
    for (const auto& t : e.terms()) {
        auto it = renaming.find(t.var.name);
        out += LinearExpr::variable(it != renaming.end() ? it->second : t.var, t.coeff);
    }
    return out;
}

template <typename AtomFn>
Formula map_atoms(const Formula& f, const AtomFn& fn)
{
    using K = Formula::Kind;
    switch (f.kind()) {
    case K::True:
    case K::False: return f;
    case K::Atom: return fn(f.as_atom());
    case K::Not: return Formula::negation(map_atoms(f.children().front(), fn));
    case K::And:
    case K::Or: {
        std::vector<Formula> parts;
        parts.reserve(f.children().size());
        for (const auto& c : f.children())
            parts.push_back(map_atoms(c, fn));
        return f.kind() == K::And ? Formula::conj(std::move(parts)) : Formula::disj(std::move(parts));
    }
    }
    return f;
}

} // namespace

Formula to_nnf(const Formula& f) { return nnf(f, false); }

std::map<std::string, Sort, std::less<>> free_variables(const Formula& f)
{
    std::map<std::string, Sort, std::less<>> out;
    collect_vars(f, out);
    return out;
}

bool evaluate(const Formula& f, const Assignment& values)
{
    using K = Formula::Kind;
    switch (f.kind()) {
    case K::True: return true;
    case K::False: return false;
    case K::Atom: {
        const auto& a = f.as_atom();
        return compare(a.lhs.evaluate(values), a.rel, a.rhs.evaluate(values));
    }
    case K::Not: return !evaluate(f.children().front(), values);
    case K::And:
        for (const auto& c : f.children())
            if (!evaluate(c, values))
                return false;
        return true;
    case K::Or:
        for (const auto& c : f.children())
            if (evaluate(c, values))
                return true;
        return false;
    }
    return false;
}

Formula substitute(const Formula& f, const Assignment& values)
{
    return map_atoms(f, [&](const Atom& a) {
        return Formula::atom(substitute_expr(a.lhs, values), a.rel, substitute_expr(a.rhs, values));
    });
}

Formula rename(const Formula& f, const std::map<std::string, Var, std::less<>>& renaming)
{
    return map_atoms(f, [&](const Atom& a) {
        return Formula::atom(rename_expr(a.lhs, renaming), a.rel, rename_expr(a.rhs, renaming));
    });
}

std::size_t formula_size(const Formula& f)
{
    std::size_t n = 1;
    for (const auto& c : f.children())
        n += formula_size(c);
    return n;
}

} // namespace cfsat
