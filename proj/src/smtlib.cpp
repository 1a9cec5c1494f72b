#include "cfsat/smtlib.hpp"

#include "cfsat/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

namespace cfsat {

namespace {

bool simple_symbol_char(char c, bool first)
{
    if (std::isalpha(static_cast<unsigned char>(c)))
        return true;
    if (!first && std::isdigit(static_cast<unsigned char>(c)))
        return true;
    return std::string_view("~!@$%^&*_-+=<>.?/").find(c) != std::string_view::npos;
}

bool reserved(std::string_view s)
{
    static constexpr std::array<std::string_view, 20> words{
        "true",  "false", "and",    "or",     "not",    "ite",    "let",   "forall", "exists", "as",
        "par",   "_",     "!",      "NUMERAL", "DECIMAL", "STRING", "distinct", "=>",  "xor",    "=",
    };
    return std::find(words.begin(), words.end(), s) != words.end();
}

std::string term(const Var& v)
{
    if (v.sort == Sort::Bool)
        return "(ite " + smt_symbol(v.name) + " 1 0)";
    return smt_symbol(v.name);
}

std::string linear(const LinearExpr& e)
{
    std::vector<std::string> parts;
    for (const auto& t : e.terms()) {
        if (t.coeff == 1)
            parts.push_back(term(t.var));
        else if (t.coeff == -1)
            parts.push_back("(- " + term(t.var) + ")");
        else
            parts.push_back("(* " + smt_numeral(t.coeff) + " " + term(t.var) + ")");
    }
    if (e.constant() != 0 || parts.empty())
        parts.push_back(smt_numeral(e.constant()));
    if (parts.size() == 1)
        return parts.front();
    std::string out = "(+";
    for (const auto& p : parts)
        out += " " + p;
    return out + ")";
}

std::string atom(const Atom& a)
{
    LinearExpr d = a.difference();
    if (d.terms().size() == 1 && d.terms()[0].var.sort == Sort::Bool && a.rel == Relation::Eq) {
        const auto& t = d.terms()[0];
        Rational value = -d.constant() / t.coeff;
        if (value == 1)
            return smt_symbol(t.var.name);
        if (value == 0)
            return "(not " + smt_symbol(t.var.name) + ")";
        return "false";
    }
    std::string l = linear(a.lhs);
    std::string r = linear(a.rhs);
    switch (a.rel) {
    case Relation::Eq: return "(= " + l + " " + r + ")";
    case Relation::Ne: return "(not (= " + l + " " + r + "))";
    case Relation::Lt: return "(< " + l + " " + r + ")";
    case Relation::Le: return "(<= " + l + " " + r + ")";
    case Relation::Gt: return "(> " + l + " " + r + ")";
    case Relation::Ge: return "(>= " + l + " " + r + ")";
    }
    return "true";
}

void formula(std::ostream& os, const Formula& f)
{
    switch (f.kind()) {
    case Formula::Kind::True: os << "true"; return;
    case Formula::Kind::False: os << "false"; return;
    case Formula::Kind::Atom: os << atom(f.as_atom()); return;
    case Formula::Kind::Not:
        os << "(not ";
        formula(os, f.children().front());
        os << ")";
        return;
    case Formula::Kind::And:
    case Formula::Kind::Or:
        os << (f.kind() == Formula::Kind::And ? "(and" : "(or");
        for (const auto& c : f.children()) {
            os << " ";
            formula(os, c);
        }
        os << ")";
        return;
    }
}

} // namespace

std::string smt_symbol(std::string_view name)
{
    if (name.empty())
        throw ValidationError("empty variable name");
    bool simple = !reserved(name);
    for (std::size_t i = 0; i < name.size() && simple; ++i)
        simple = simple_symbol_char(name[i], i == 0);
    if (simple)
        return std::string(name);
    if (name.find_first_of("|\\") != std::string_view::npos)
        throw ValidationError("variable name '" + std::string(name) + "' cannot be written as an SMT-LIB symbol");
    return "|" + std::string(name) + "|";
}

std::string smt_numeral(const Rational& q)
{
    Integer num = q.get_num();
    const Integer& den = q.get_den();
    bool negative = num < 0;
    if (negative)
        num = -num;
    std::string body = den == 1 ? num.get_str() : "(/ " + num.get_str() + " " + den.get_str() + ")";
    return negative ? "(- " + body + ")" : body;
}

std::string emit_smtlib(const Formula& f)
{
    std::ostringstream os;
    os << "(set-option :produce-models true)\n";
    os << "(set-logic QF_LIRA)\n";
    for (const auto& [name, sort] : free_variables(f))
        os << "(declare-const " << smt_symbol(name) << " " << sort_name(sort) << ")\n";
    os << "(assert ";
    formula(os, f);
    os << ")\n";
    os << "(check-sat)\n";
    os << "(get-model)\n";
    return os.str();
}

} // namespace cfsat
