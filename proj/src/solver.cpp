#include "cfsat/solver.hpp"

#include "cfsat/errors.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cfsat {

std::string TraceRow::str() const
{
    LinearExpr e(constant);
    for (const auto& t : terms)
        e += LinearExpr::variable(t.var, t.coeff);
    const char* op = this->op == RowOp::Le ? " <= 0" : this->op == RowOp::Lt ? " < 0" : " = 0";
    return e.str() + op;
}

std::size_t UnsatTrace::leaves() const
{
    if (!branch)
        return 1;
    std::size_t n = 0;
    for (const auto& c : children)
        n += c.leaves();
    return n;
}

bool replay_certificate(const UnsatTrace& trace)
{
    if (trace.branch) {
        if (trace.children.empty())
            return false;
        return std::all_of(trace.children.begin(), trace.children.end(),
                           [](const UnsatTrace& c) { return replay_certificate(c); });
    }
    if (trace.rows.empty() || trace.rows.size() != trace.multipliers.size())
        return false;
    LinearExpr sum;
    bool strict = false;
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        const auto& row = trace.rows[i];
        const Rational& k = trace.multipliers[i];
        if (row.op != RowOp::Eq && k < 0)
            return false;
        LinearExpr e(row.constant);
        for (const auto& t : row.terms)
            e += LinearExpr::variable(t.var, t.coeff);
        sum += e * k;
        if (row.op == RowOp::Lt && k > 0)
            strict = true;
    }
    if (!sum.is_constant())
        return false;
    return sum.constant() > 0 || (sum.constant() == 0 && strict);
}

bool witness_satisfies(const Formula& f, const Assignment& w)
{
    for (const auto& [name, sort] : free_variables(f)) {
        auto it = w.find(name);
        if (it == w.end())
            return false;
        if (is_integral(sort) && !is_integer(it->second))
            return false;
        if (sort == Sort::Bool && it->second != 0 && it->second != 1)
            return false;
    }
    return evaluate(f, w);
}

namespace {

using Coeffs = std::vector<std::pair<int, Rational>>;
using Origin = std::map<int, Rational>;

struct Row {
    Coeffs a;
    Rational c;
    RowOp op = RowOp::Le;
    Origin origin;
    // Input rows of the current elimination this row was combined from.
    std::vector<int> history = {};
};

Rational coeff_of(const Coeffs& a, int v)
{
    auto it = std::lower_bound(a.begin(), a.end(), v, [](const auto& t, int x) { return t.first < x; });
    return it != a.end() && it->first == v ? it->second : Rational(0);
}

// a += k * b, both sorted by variable.
void add_scaled(Coeffs& a, const Coeffs& b, const Rational& k)
{
    Coeffs out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(std::move(a[i++]));
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.emplace_back(b[j].first, Rational(k * b[j].second));
            ++j;
        } else {
            Rational s = a[i].second + k * b[j].second;
            if (s != 0)
                out.emplace_back(a[i].first, std::move(s));
            ++i;
            ++j;
        }
    }
    a = std::move(out);
}

void add_origin(Origin& a, const Origin& b, const Rational& k)
{
    for (const auto& [i, m] : b) {
        Rational& slot = a[i];
        slot += k * m;
        if (slot == 0)
            a.erase(i);
    }
}

// r1 = s * r1 + k * r2
void combine(Row& r1, const Rational& s, const Row& r2, const Rational& k, bool track)
{
    if (s != 1) {
        for (auto& t : r1.a)
            t.second *= s;
        r1.c *= s;
        if (track)
            for (auto& [i, m] : r1.origin)
                m *= s;
    }
    add_scaled(r1.a, r2.a, k);
    r1.c += k * r2.c;
    if (track)
        add_origin(r1.origin, r2.origin, k);
}

bool holds(const Rational& c, RowOp op)
{
    switch (op) {
    case RowOp::Le: return c <= 0;
    case RowOp::Lt: return c < 0;
    case RowOp::Eq: return c == 0;
    }
    return false;
}

// Positive rescaling to primitive integer coefficients.
void make_primitive(Row& r, bool track)
{
    if (r.a.empty())
        return;
    Integer l = 1;
    for (const auto& t : r.a) {
        Integer d = t.second.get_den();
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
    }
    Integer g = 0;
    for (const auto& t : r.a) {
        Rational scaled = t.second * l;
        Integer n = scaled.get_num();
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), n.get_mpz_t());
    }
    Rational s(l, g);
    s.canonicalize();
    if (s == 1)
        return;
    for (auto& t : r.a)
        t.second *= s;
    r.c *= s;
    if (track)
        for (auto& [i, m] : r.origin)
            m *= s;
}

struct Bound {
    bool finite = false;
    Rational v;
    bool strict = false;
};

struct Interval {
    Bound lo;
    Bound hi;
};

enum class Status { True, False, Unknown };

class Engine {
public:
    Engine(const Formula& f, const SolverOptions& options) : options_(options), cert_(options.record_certificate)
    {
        for (const auto& [name, sort] : free_variables(f)) {
            index_.emplace(name, static_cast<int>(names_.size()));
            names_.push_back(name);
            sorts_.push_back(sort);
        }
        root_ = build(to_nnf(f));
    }

    SolveOutcome run()
    {
        State s;
        s.box.resize(names_.size());
        for (std::size_t v = 0; v < names_.size(); ++v)
            if (sorts_[v] == Sort::Bool)
                s.box[v] = Interval{{true, 0, false}, {true, 1, false}};
        assert_node(s, root_);

        UnsatTrace trace;
        auto values = search(std::move(s), cert_ ? &trace : nullptr);

        SolveOutcome out;
        out.stats = stats_;
        if (!values) {
            out.verdict = Verdict::Unsat;
            if (cert_)
                out.certificate = std::make_shared<const UnsatTrace>(std::move(trace));
            return out;
        }
        out.verdict = Verdict::Sat;
        for (std::size_t v = 0; v < names_.size(); ++v)
            out.witness.emplace(names_[v], (*values)[v].value_or(Rational(0)));
        return out;
    }

private:
    struct Node {
        enum class Kind { True, False, Lit, And, Or } kind;
        int lit = -1;
        std::vector<int> kids;
    };

    struct State {
        std::vector<int> lits;
        std::vector<int> pending;
        std::vector<Interval> box;
        // Boolean branch decisions, variable and value.
        std::vector<std::pair<int, int>> decided;
        std::size_t checked = 0;
        bool conflict = false;
    };

    using Values = std::vector<std::optional<Rational>>;

    // ------------------------------------------------------------ building

    int add_node(Node n)
    {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int build(const Formula& f)
    {
        switch (f.kind()) {
        case Formula::Kind::True: return add_node({Node::Kind::True, -1, {}});
        case Formula::Kind::False:
            if (cert_) {
                // Keep the contradiction as a constant row so it can be cited.
                return lit_node(Row{{}, 1, RowOp::Le, {}});
            }
            return add_node({Node::Kind::False, -1, {}});
        case Formula::Kind::Atom: return build_atom(f.as_atom());
        case Formula::Kind::And:
        case Formula::Kind::Or: {
            Node n{f.kind() == Formula::Kind::And ? Node::Kind::And : Node::Kind::Or, -1, {}};
            for (const auto& c : f.children())
                n.kids.push_back(build(c));
            return add_node(std::move(n));
        }
        case Formula::Kind::Not: break;
        }
        throw std::logic_error("solver input is not in negation normal form");
    }

    int build_atom(const Atom& atom)
    {
        LinearExpr e = atom.difference();
        Coeffs a;
        for (const auto& t : e.terms())
            a.emplace_back(index_.at(t.var.name), t.coeff);
        std::sort(a.begin(), a.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        Coeffs neg = a;
        for (auto& t : neg)
            t.second = -t.second;
        Rational c = e.constant();
        switch (atom.rel) {
        case Relation::Eq: return lit_node(Row{a, c, RowOp::Eq, {}});
        case Relation::Le: return lit_node(Row{a, c, RowOp::Le, {}});
        case Relation::Lt: return lit_node(Row{a, c, RowOp::Lt, {}});
        case Relation::Ge: return lit_node(Row{neg, -c, RowOp::Le, {}});
        case Relation::Gt: return lit_node(Row{neg, -c, RowOp::Lt, {}});
        case Relation::Ne: {
            int below = lit_node(Row{a, c, RowOp::Lt, {}});
            int above = lit_node(Row{neg, -c, RowOp::Lt, {}});
            return add_node({Node::Kind::Or, -1, {below, above}});
        }
        }
        return add_node({Node::Kind::True, -1, {}});
    }

    bool integral_row(const Row& r) const
    {
        return std::all_of(r.a.begin(), r.a.end(), [&](const auto& t) { return is_integral(sorts_[t.first]); });
    }

    int lit_node(Row r)
    {
        if (r.a.empty() && !cert_)
            return add_node({holds(r.c, r.op) ? Node::Kind::True : Node::Kind::False, -1, {}});
        make_primitive(r, false);
        // Rounding is sound for integer rows but is not a linear combination,
        // so certificate mode leaves it to branch and bound.
        if (!cert_ && integral_row(r)) {
            switch (r.op) {
            case RowOp::Le: r.c = Rational(ceil(r.c)); break;
            case RowOp::Lt:
                r.c = Rational(floor(r.c) + 1);
                r.op = RowOp::Le;
                break;
            case RowOp::Eq:
                if (!is_integer(r.c))
                    return add_node({Node::Kind::False, -1, {}});
                break;
            }
        }
        lits_.push_back(std::move(r));
        return add_node({Node::Kind::Lit, static_cast<int>(lits_.size()) - 1, {}});
    }

    // ------------------------------------------------------------ bounds

    Interval range(const Row& r, const std::vector<Interval>& box) const
    {
        Interval out{{true, r.c, false}, {true, r.c, false}};
        for (const auto& [v, k] : r.a) {
            const Interval& b = box[static_cast<std::size_t>(v)];
            const Bound& for_lo = k > 0 ? b.lo : b.hi;
            const Bound& for_hi = k > 0 ? b.hi : b.lo;
            if (out.lo.finite) {
                if (!for_lo.finite) {
                    out.lo.finite = false;
                } else {
                    out.lo.v += k * for_lo.v;
                    out.lo.strict = out.lo.strict || for_lo.strict;
                }
            }
            if (out.hi.finite) {
                if (!for_hi.finite) {
                    out.hi.finite = false;
                } else {
                    out.hi.v += k * for_hi.v;
                    out.hi.strict = out.hi.strict || for_hi.strict;
                }
            }
        }
        return out;
    }

    Status row_status(const Row& r, const std::vector<Interval>& box) const
    {
        Interval e = range(r, box);
        const bool lo_pos = e.lo.finite && (e.lo.v > 0 || (e.lo.v == 0 && e.lo.strict));
        const bool hi_neg = e.hi.finite && (e.hi.v < 0 || (e.hi.v == 0 && e.hi.strict));
        switch (r.op) {
        case RowOp::Le:
            if (e.hi.finite && e.hi.v <= 0)
                return Status::True;
            if (lo_pos)
                return Status::False;
            break;
        case RowOp::Lt:
            if (hi_neg)
                return Status::True;
            if (e.lo.finite && e.lo.v >= 0)
                return Status::False;
            break;
        case RowOp::Eq:
            if (e.lo.finite && e.hi.finite && e.lo.v == 0 && e.hi.v == 0)
                return Status::True;
            if (lo_pos || hi_neg)
                return Status::False;
            break;
        }
        return Status::Unknown;
    }

    Status node_status(int n, const std::vector<Interval>& box) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(n)];
        switch (node.kind) {
        case Node::Kind::True: return Status::True;
        case Node::Kind::False: return Status::False;
        case Node::Kind::Lit: return row_status(lits_[static_cast<std::size_t>(node.lit)], box);
        case Node::Kind::And: {
            bool all = true;
            for (int k : node.kids) {
                Status s = node_status(k, box);
                if (s == Status::False)
                    return Status::False;
                all = all && s == Status::True;
            }
            return all ? Status::True : Status::Unknown;
        }
        case Node::Kind::Or: {
            bool none = true;
            for (int k : node.kids) {
                Status s = node_status(k, box);
                if (s == Status::True)
                    return Status::True;
                none = none && s == Status::False;
            }
            return none ? Status::False : Status::Unknown;
        }
        }
        return Status::Unknown;
    }

    // Tightens box[v] with v <= u (upper) or v >= u (lower). False on conflict.
    bool tighten(std::vector<Interval>& box, int v, bool upper, Rational u, bool strict, bool& changed) const
    {
        Interval& b = box[static_cast<std::size_t>(v)];
        if (is_integral(sorts_[static_cast<std::size_t>(v)])) {
            if (upper)
                u = (strict && is_integer(u)) ? Rational(u - 1) : Rational(floor(u));
            else
                u = (strict && is_integer(u)) ? Rational(u + 1) : Rational(ceil(u));
            strict = false;
        }
        Bound& target = upper ? b.hi : b.lo;
        bool better = !target.finite || (upper ? u < target.v : u > target.v) ||
                      (u == target.v && strict && !target.strict);
        if (better) {
            target = Bound{true, std::move(u), strict};
            changed = true;
        }
        if (b.lo.finite && b.hi.finite)
            if (b.lo.v > b.hi.v || (b.lo.v == b.hi.v && (b.lo.strict || b.hi.strict)))
                return false;
        return true;
    }

    // sign * (a.x + c) <= 0 (or < 0).
    bool propagate_row(const Row& r, int sign, bool strict_row, std::vector<Interval>& box, bool& changed) const
    {
        if (r.a.empty())
            return r.op == RowOp::Eq ? r.c == 0 : holds(r.c, r.op);
        Rational sum = sign * r.c;
        int infinite = 0;
        int infinite_at = -1;
        int strict_count = 0;
        std::vector<std::optional<std::pair<Rational, bool>>> mins(r.a.size());
        for (std::size_t i = 0; i < r.a.size(); ++i) {
            Rational k = sign * r.a[i].second;
            const Interval& b = box[static_cast<std::size_t>(r.a[i].first)];
            const Bound& bd = k > 0 ? b.lo : b.hi;
            if (!bd.finite) {
                ++infinite;
                infinite_at = static_cast<int>(i);
                continue;
            }
            Rational m = k * bd.v;
            sum += m;
            strict_count += bd.strict ? 1 : 0;
            mins[i] = std::make_pair(std::move(m), bd.strict);
        }
        if (infinite > 1)
            return true;
        for (std::size_t i = 0; i < r.a.size(); ++i) {
            Rational rest;
            bool rest_strict;
            if (infinite == 1) {
                if (static_cast<int>(i) != infinite_at)
                    continue;
                rest = sum;
                rest_strict = strict_count > 0;
            } else {
                rest = sum - mins[i]->first;
                rest_strict = strict_count - (mins[i]->second ? 1 : 0) > 0;
            }
            Rational k = sign * r.a[i].second;
            Rational u = -rest / k;
            bool strict = strict_row || rest_strict;
            if (!tighten(box, r.a[i].first, k > 0, std::move(u), strict, changed))
                return false;
        }
        return true;
    }

    bool propagate(State& s) const
    {
        for (int round = 0; round < 8; ++round) {
            bool changed = false;
            for (int l : s.lits) {
                const Row& r = lits_[static_cast<std::size_t>(l)];
                if (r.op == RowOp::Eq) {
                    if (!propagate_row(r, 1, false, s.box, changed) || !propagate_row(r, -1, false, s.box, changed))
                        return false;
                } else if (!propagate_row(r, 1, r.op == RowOp::Lt, s.box, changed)) {
                    return false;
                }
            }
            if (!changed)
                break;
        }
        return true;
    }

    void assert_node(State& s, int n) const
    {
        const Node& node = nodes_[static_cast<std::size_t>(n)];
        switch (node.kind) {
        case Node::Kind::True: break;
        case Node::Kind::False: s.conflict = true; break;
        case Node::Kind::Lit: s.lits.push_back(node.lit); break;
        case Node::Kind::And:
            for (int k : node.kids)
                assert_node(s, k);
            break;
        case Node::Kind::Or: s.pending.push_back(n); break;
        }
    }

    // ------------------------------------------------------------ search

    std::optional<Values> search(State s, UnsatTrace* trace)
    {
        if (++stats_.branches > options_.max_branches)
            throw BudgetExceeded("solver branch budget of " + std::to_string(options_.max_branches) + " exhausted");
        if (s.conflict || !propagate(s))
            return close(s, trace);

        for (;;) {
            bool grew = false;
            std::vector<int> current = std::move(s.pending);
            s.pending.clear();
            std::vector<int> keep;
            for (int n : current) {
                const Node& node = nodes_[static_cast<std::size_t>(n)];
                int open = 0;
                int last = -1;
                bool satisfied = false;
                for (int k : node.kids) {
                    Status st = node_status(k, s.box);
                    if (st == Status::True) {
                        satisfied = true;
                        break;
                    }
                    if (st != Status::False) {
                        ++open;
                        last = k;
                    }
                }
                if (satisfied)
                    continue;
                if (cert_) {
                    keep.push_back(n);
                    continue;
                }
                if (open == 0)
                    return std::nullopt;
                if (open == 1) {
                    assert_node(s, last);
                    grew = true;
                } else {
                    keep.push_back(n);
                }
            }
            s.pending.insert(s.pending.begin(), keep.begin(), keep.end());
            if (!grew)
                break;
            if (s.conflict || !propagate(s))
                return std::nullopt;
        }

        if (s.pending.empty()) {
            if (int v = open_bool(s); v >= 0)
                return split_bool(s, v, trace);
            return theory(rows_of(s), trace, 0);
        }

        if (!cert_ && s.lits.size() > s.checked) {
            s.checked = s.lits.size();
            if (!feasible(rows_of(s)))
                return std::nullopt;
        }

        const int chosen = s.pending.front();
        const Node& node = nodes_[static_cast<std::size_t>(chosen)];
        UnsatTrace branch;
        branch.branch = true;
        branch.label = "split on disjunction #" + std::to_string(chosen);
        for (std::size_t i = 0; i < node.kids.size(); ++i) {
            int k = node.kids[i];
            if (!cert_ && node_status(k, s.box) == Status::False)
                continue;
            State child = s;
            child.pending.erase(child.pending.begin());
            assert_node(child, k);
            UnsatTrace* sub = nullptr;
            if (cert_) {
                branch.children.emplace_back();
                branch.children.back().label = "case " + std::to_string(i + 1);
                sub = &branch.children.back();
            }
            if (auto found = search(std::move(child), sub))
                return found;
        }
        if (trace) {
            std::string label = trace->label;
            *trace = std::move(branch);
            if (!label.empty())
                trace->label = label + ": " + trace->label;
        }
        return std::nullopt;
    }

    // Lowest Boolean variable of the asserted rows that is still open.
    int open_bool(const State& s) const
    {
        int best = -1;
        for (int l : s.lits)
            for (const auto& [v, k] : lits_[static_cast<std::size_t>(l)].a) {
                if (sorts_[static_cast<std::size_t>(v)] != Sort::Bool || (best >= 0 && v >= best))
                    continue;
                if (decision(s, v) || (!cert_ && fixed(s.box[static_cast<std::size_t>(v)])))
                    continue;
                best = v;
            }
        return best;
    }

    static bool fixed(const Interval& b) { return b.lo.finite && b.hi.finite && b.lo.v == b.hi.v; }

    static std::optional<int> decision(const State& s, int v)
    {
        for (const auto& [w, value] : s.decided)
            if (w == v)
                return value;
        return std::nullopt;
    }

    std::optional<Values> split_bool(const State& s, int v, UnsatTrace* trace)
    {
        const std::string& name = names_[static_cast<std::size_t>(v)];
        UnsatTrace branch;
        branch.branch = true;
        branch.label = "split on " + name;
        for (int value : {0, 1}) {
            const Interval& b = s.box[static_cast<std::size_t>(v)];
            if (!cert_ && (b.lo.v > value || b.hi.v < value))
                continue;
            State child = s;
            child.decided.emplace_back(v, value);
            UnsatTrace* sub = nullptr;
            if (cert_) {
                branch.children.emplace_back();
                branch.children.back().label = name + " = " + std::to_string(value);
                sub = &branch.children.back();
            }
            bool changed = false;
            if (!tighten(child.box, v, true, Rational(value), false, changed) ||
                !tighten(child.box, v, false, Rational(value), false, changed)) {
                close(child, sub);
                continue;
            }
            if (auto found = search(std::move(child), sub))
                return found;
        }
        if (trace) {
            std::string label = trace->label;
            *trace = std::move(branch);
            if (!label.empty())
                trace->label = label + ": " + trace->label;
        }
        return std::nullopt;
    }

    // Closes a branch whose bounds are contradictory; certificate mode asks
    // the elimination procedure for a derivation.
    std::optional<Values> close(const State& s, UnsatTrace* trace)
    {
        if (!trace)
            return std::nullopt;
        if (s.conflict) {
            trace->rows = {TraceRow{{}, 1, RowOp::Le}};
            trace->multipliers = {1};
            return std::nullopt;
        }
        if (theory(rows_of(s), trace, 0))
            throw std::logic_error("bound propagation found a conflict that elimination does not confirm");
        return std::nullopt;
    }

    // Asserted rows plus Boolean domains: decided (or, outside certificate
    // mode, propagated) values as equalities, [0, 1] otherwise.
    std::vector<Row> rows_of(const State& s) const
    {
        std::vector<Row> rows;
        std::set<int> bools;
        for (int l : s.lits) {
            rows.push_back(lits_[static_cast<std::size_t>(l)]);
            for (const auto& t : rows.back().a)
                if (sorts_[static_cast<std::size_t>(t.first)] == Sort::Bool)
                    bools.insert(t.first);
        }
        for (int v : bools) {
            std::optional<int> value = decision(s, v);
            const Interval& b = s.box[static_cast<std::size_t>(v)];
            if (!value && !cert_ && fixed(b))
                value = b.lo.v == 0 ? 0 : 1;
            if (value) {
                rows.push_back(Row{{{v, Rational(1)}}, Rational(-*value), RowOp::Eq, {}});
                continue;
            }
            rows.push_back(Row{{{v, Rational(-1)}}, 0, RowOp::Le, {}});
            rows.push_back(Row{{{v, Rational(1)}}, -1, RowOp::Le, {}});
        }
        return rows;
    }

    // ------------------------------------------------------------ elimination

    struct Elimination {
        enum class Kind { Sat, Unsat, Split } kind = Kind::Sat;
        Values values;
        Origin farkas;
        int split_var = -1;
        Rational split_at;
    };

    int pick_pivot(const Row& r) const
    {
        for (const auto& [v, k] : r.a)
            if (sorts_[static_cast<std::size_t>(v)] == Sort::Real)
                return v;
        for (const auto& [v, k] : r.a) {
            bool ok = is_integer(Rational(r.c / k));
            for (const auto& [w, kw] : r.a)
                ok = ok && is_integral(sorts_[static_cast<std::size_t>(w)]) && is_integer(Rational(kw / k));
            if (ok)
                return v;
        }
        return -1;
    }

    Elimination eliminate(std::vector<Row> rows, bool want_witness, std::size_t max_rows)
    {
        ++stats_.theory_checks;
        Elimination out;
        if (cert_)
            for (std::size_t i = 0; i < rows.size(); ++i)
                rows[i].origin = {{static_cast<int>(i), Rational(1)}};

        auto contradiction = [&](const Row& r) {
            out.kind = Elimination::Kind::Unsat;
            out.farkas = r.origin;
            if (r.op == RowOp::Eq && r.c < 0)
                for (auto& [i, m] : out.farkas)
                    m = -m;
            return out;
        };

        // Equalities: substitute a pivot variable away.
        std::vector<std::pair<int, Row>> subs;
        for (bool progress = true; progress;) {
            progress = false;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].op != RowOp::Eq)
                    continue;
                if (rows[i].a.empty()) {
                    if (rows[i].c != 0)
                        return contradiction(rows[i]);
                    continue;
                }
                int p = pick_pivot(rows[i]);
                if (p < 0)
                    continue;
                Row eq = std::move(rows[i]);
                rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(i));
                Rational ap = coeff_of(eq.a, p);
                for (auto& r : rows) {
                    Rational k = coeff_of(r.a, p);
                    if (k != 0)
                        combine(r, 1, eq, Rational(-k / ap), cert_);
                }
                subs.emplace_back(p, std::move(eq));
                progress = true;
                break;
            }
        }

        // Remaining rows as inequalities.
        std::vector<Row> ineq;
        for (auto& r : rows) {
            if (r.a.empty()) {
                if (!holds(r.c, r.op))
                    return contradiction(r);
                continue;
            }
            make_primitive(r, cert_);
            if (r.op == RowOp::Eq) {
                Row neg = r;
                for (auto& t : neg.a)
                    t.second = -t.second;
                neg.c = -neg.c;
                for (auto& [i, m] : neg.origin)
                    m = -m;
                neg.op = RowOp::Le;
                r.op = RowOp::Le;
                ineq.push_back(std::move(r));
                ineq.push_back(std::move(neg));
            } else {
                ineq.push_back(std::move(r));
            }
        }
        ineq = dedup(std::move(ineq));
        for (std::size_t i = 0; i < ineq.size(); ++i)
            ineq[i].history = {static_cast<int>(i)};

        struct Stage {
            int var;
            std::vector<Row> rows;
        };
        std::vector<Stage> stages;
        std::size_t eliminated = 0;
        for (;;) {
            std::map<int, std::pair<std::size_t, std::size_t>> occurrences;
            for (const auto& r : ineq)
                for (const auto& [v, k] : r.a)
                    (k > 0 ? occurrences[v].first : occurrences[v].second)++;
            if (occurrences.empty())
                break;
            int best = -1;
            long best_cost = 0;
            bool best_real = false;
            for (const auto& [v, pn] : occurrences) {
                bool real = sorts_[static_cast<std::size_t>(v)] == Sort::Real;
                long p = static_cast<long>(pn.first);
                long n = static_cast<long>(pn.second);
                long cost = p * n - p - n;
                if (best < 0 || (real && !best_real) || (real == best_real && cost < best_cost)) {
                    best = v;
                    best_cost = cost;
                    best_real = real;
                }
            }
            ++stats_.eliminations;
            ++eliminated;
            std::vector<Row> pos, neg, next;
            for (auto& r : ineq) {
                Rational k = coeff_of(r.a, best);
                if (k > 0)
                    pos.push_back(std::move(r));
                else if (k < 0)
                    neg.push_back(std::move(r));
                else
                    next.push_back(std::move(r));
            }
            for (const auto& p : pos) {
                for (const auto& n : neg) {
                    // Chernikov: a combination of more than eliminated + 1
                    // input rows is implied by the rest.
                    std::vector<int> history;
                    std::set_union(p.history.begin(), p.history.end(), n.history.begin(), n.history.end(),
                                   std::back_inserter(history));
                    if (history.size() > eliminated + 1)
                        continue;
                    Row r = p;
                    r.history = std::move(history);
                    Rational kp = coeff_of(p.a, best);
                    Rational kn = coeff_of(n.a, best);
                    combine(r, Rational(-kn), n, kp, cert_);
                    r.op = (p.op == RowOp::Lt || n.op == RowOp::Lt) ? RowOp::Lt : RowOp::Le;
                    if (r.a.empty()) {
                        if (!holds(r.c, r.op))
                            return contradiction(r);
                        continue;
                    }
                    make_primitive(r, cert_);
                    next.push_back(std::move(r));
                }
            }
            next = dedup(std::move(next));
            if (next.size() > max_rows)
                throw BudgetExceeded("elimination exceeded " + std::to_string(max_rows) + " constraints");
            if (want_witness) {
                Stage st{best, std::move(pos)};
                for (auto& r : neg)
                    st.rows.push_back(std::move(r));
                stages.push_back(std::move(st));
            }
            ineq = std::move(next);
        }

        if (!want_witness)
            return out;

        Values values(names_.size());
        for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
            const int v = it->var;
            Interval iv;
            for (const auto& r : it->rows) {
                Rational k;
                Rational rest = r.c;
                for (const auto& [w, kw] : r.a) {
                    if (w == v) {
                        k = kw;
                        continue;
                    }
                    // Variables that only met v in one-sided rows were
                    // dropped with them and are unconstrained.
                    auto& value = values[static_cast<std::size_t>(w)];
                    if (!value)
                        value = Rational(0);
                    rest += kw * *value;
                }
                Rational u = -rest / k;
                bool strict = r.op == RowOp::Lt;
                Bound& b = k > 0 ? iv.hi : iv.lo;
                bool better = !b.finite || (k > 0 ? u < b.v : u > b.v) || (u == b.v && strict);
                if (better)
                    b = Bound{true, u, strict};
            }
            if (is_integral(sorts_[static_cast<std::size_t>(v)])) {
                std::optional<Integer> lo, hi;
                if (iv.lo.finite)
                    lo = iv.lo.strict && is_integer(iv.lo.v) ? Integer(iv.lo.v.get_num() + 1) : ceil(iv.lo.v);
                if (iv.hi.finite)
                    hi = iv.hi.strict && is_integer(iv.hi.v) ? Integer(iv.hi.v.get_num() - 1) : floor(iv.hi.v);
                if (lo && hi && *lo > *hi) {
                    out.kind = Elimination::Kind::Split;
                    out.split_var = v;
                    out.split_at = (iv.lo.v + iv.hi.v) / 2;
                    return out;
                }
                Integer pick = 0;
                if (lo && hi) {
                    Integer sum = *lo + *hi;
                    mpz_fdiv_q_2exp(pick.get_mpz_t(), sum.get_mpz_t(), 1);
                } else if (lo) {
                    pick = *lo;
                } else if (hi) {
                    pick = *hi;
                }
                values[static_cast<std::size_t>(v)] = Rational(pick);
            } else {
                Rational pick = 0;
                if (iv.lo.finite && iv.hi.finite) {
                    if (iv.lo.v > iv.hi.v || (iv.lo.v == iv.hi.v && (iv.lo.strict || iv.hi.strict)))
                        throw std::logic_error("empty interval during back-substitution");
                    pick = iv.lo.v == iv.hi.v ? iv.lo.v : Rational((iv.lo.v + iv.hi.v) / 2);
                } else if (iv.lo.finite) {
                    pick = iv.lo.strict ? Rational(iv.lo.v + 1) : iv.lo.v;
                } else if (iv.hi.finite) {
                    pick = iv.hi.strict ? Rational(iv.hi.v - 1) : iv.hi.v;
                }
                values[static_cast<std::size_t>(v)] = pick;
            }
        }
        std::set<int> substituted;
        for (const auto& [p, eq] : subs)
            substituted.insert(p);
        for (const auto& [p, eq] : subs)
            for (const auto& [w, k] : eq.a)
                if (!substituted.contains(w) && !values[static_cast<std::size_t>(w)])
                    values[static_cast<std::size_t>(w)] = Rational(0);
        for (auto it = subs.rbegin(); it != subs.rend(); ++it) {
            const auto& [p, eq] = *it;
            Rational ap;
            Rational rest = eq.c;
            for (const auto& [w, k] : eq.a) {
                if (w == p)
                    ap = k;
                else
                    rest += k * *values[static_cast<std::size_t>(w)];
            }
            values[static_cast<std::size_t>(p)] = Rational(-rest / ap);
        }
        out.values = std::move(values);
        return out;
    }

    // Drops rows implied by a row with the same coefficients whose history is
    // no larger, so that redundancy by history stays sound.
    std::vector<Row> dedup(std::vector<Row> rows) const
    {
        auto at_least_as_tight = [](const Row& x, const Row& y) {
            return x.c > y.c || (x.c == y.c && (x.op == RowOp::Lt || y.op != RowOp::Lt));
        };
        auto within = [](const Row& x, const Row& y) {
            return std::includes(y.history.begin(), y.history.end(), x.history.begin(), x.history.end());
        };
        std::map<Coeffs, std::vector<std::size_t>> seen;
        std::vector<std::optional<Row>> out;
        for (auto& r : rows) {
            auto& bucket = seen[r.a];
            bool implied = false;
            for (std::size_t i : bucket)
                if (out[i] && at_least_as_tight(*out[i], r) && within(*out[i], r)) {
                    implied = true;
                    break;
                }
            if (implied)
                continue;
            for (std::size_t i : bucket)
                if (out[i] && at_least_as_tight(r, *out[i]) && within(r, *out[i]))
                    out[i].reset();
            bucket.push_back(out.size());
            out.push_back(std::move(r));
        }
        std::vector<Row> kept;
        for (auto& r : out)
            if (r)
                kept.push_back(std::move(*r));
        return kept;
    }

    // Pruning check on a partial branch; a system too large to eliminate
    // cheaply counts as feasible.
    bool feasible(std::vector<Row> rows)
    {
        try {
            return eliminate(std::move(rows), false, options_.max_rows / 200).kind != Elimination::Kind::Unsat;
        } catch (const BudgetExceeded&) {
            return true;
        }
    }

    // Elimination with integer branch and bound.
    std::optional<Values> theory(std::vector<Row> rows, UnsatTrace* trace, int depth)
    {
        Elimination e = eliminate(rows, true, options_.max_rows);
        switch (e.kind) {
        case Elimination::Kind::Sat: return std::move(e.values);
        case Elimination::Kind::Unsat:
            if (trace) {
                trace->branch = false;
                for (const auto& [i, m] : e.farkas) {
                    trace->rows.push_back(trace_row(rows[static_cast<std::size_t>(i)]));
                    trace->multipliers.push_back(m);
                }
            }
            return std::nullopt;
        case Elimination::Kind::Split: break;
        }
        if (depth >= options_.max_integer_depth)
            throw BudgetExceeded("integer branch and bound exceeded depth " +
                                 std::to_string(options_.max_integer_depth));
        ++stats_.integer_splits;
        const int v = e.split_var;
        Rational fl(floor(e.split_at));
        std::vector<Row> left = rows;
        left.push_back(Row{{{v, Rational(1)}}, Rational(-fl), RowOp::Le, {}});
        std::vector<Row> right = std::move(rows);
        right.push_back(Row{{{v, Rational(-1)}}, Rational(fl + 1), RowOp::Le, {}});

        UnsatTrace branch;
        branch.branch = true;
        branch.label = "integer split on " + names_[static_cast<std::size_t>(v)];
        UnsatTrace* lt = nullptr;
        UnsatTrace* rt = nullptr;
        if (trace) {
            branch.children.resize(2);
            branch.children[0].label = names_[static_cast<std::size_t>(v)] + " <= " + to_string(fl);
            branch.children[1].label = names_[static_cast<std::size_t>(v)] + " >= " + to_string(Rational(fl + 1));
            lt = &branch.children[0];
            rt = &branch.children[1];
        }
        if (auto found = theory(std::move(left), lt, depth + 1))
            return found;
        if (auto found = theory(std::move(right), rt, depth + 1))
            return found;
        if (trace) {
            std::string label = trace->label;
            *trace = std::move(branch);
            if (!label.empty())
                trace->label = label + ": " + trace->label;
        }
        return std::nullopt;
    }

    TraceRow trace_row(const Row& r) const
    {
        TraceRow t;
        for (const auto& [v, k] : r.a)
            t.terms.push_back(Term{Var{names_[static_cast<std::size_t>(v)], sorts_[static_cast<std::size_t>(v)]}, k});
        t.constant = r.c;
        t.op = r.op;
        return t;
    }

    SolverOptions options_;
    bool cert_;
    SolverStats stats_;
    std::vector<std::string> names_;
    std::vector<Sort> sorts_;
    std::map<std::string, int, std::less<>> index_;
    std::vector<Node> nodes_;
    std::vector<Row> lits_;
    int root_ = -1;
};

} // namespace

SolveOutcome check_sat(const Formula& f, const SolverOptions& options)
{
    Engine engine(f, options);
    SolveOutcome out = engine.run();
    if (out.sat() && !witness_satisfies(f, out.witness))
        throw std::logic_error("solver produced a witness that does not satisfy the formula");
    return out;
}

} // namespace cfsat
