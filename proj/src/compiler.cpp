#include "cfsat/compiler.hpp"

#include "cfsat/errors.hpp"
#include "overloaded.hpp"

#include <functional>
#include <limits>
#include <map>
#include <set>

namespace cfsat {

// ---------------------------------------------------------------- unrolling

namespace {

using Bindings = std::map<std::string, Rational, std::less<>>;

Expr bind(const Expr& e, const Bindings& env)
{
    return std::visit(overloaded{
                          [&](const VarRef& v) -> Expr {
                              auto it = env.find(v.name);
                              return it == env.end() ? e : ir::constant(it->second);
                          },
                          [&](const Constant&) -> Expr { return e; },
                          [&](const Negate& n) -> Expr { return ir::neg(bind(n.arg, env)); },
                          [&](const BinaryExpr& b) -> Expr {
                              Expr l = bind(b.lhs, env);
                              Expr r = bind(b.rhs, env);
                              switch (b.op) {
                              case BinaryOp::Add: return ir::add(l, r);
                              case BinaryOp::Sub: return ir::sub(l, r);
                              case BinaryOp::Mul: return ir::mul(l, r);
                              }
                              return e;
                          },
                      },
                      e->node);
}

Guard bind(const Guard& g, const Bindings& env)
{
    return std::visit(overloaded{
                          [&](const Compare& c) { return ir::cmp(bind(c.lhs, env), c.rel, bind(c.rhs, env)); },
                          [&](const GuardAnd& a) { return ir::both(bind(a.lhs, env), bind(a.rhs, env)); },
                          [&](const GuardOr& o) { return ir::either(bind(o.lhs, env), bind(o.rhs, env)); },
                          [&](const GuardNot& n) { return ir::negate(bind(n.arg, env)); },
                      },
                      g->node);
}

bool has_variables(const Guard& g)
{
    return std::visit(overloaded{
                          [](const Compare& c) { return has_variables(c.lhs) || has_variables(c.rhs); },
                          [](const GuardAnd& a) { return has_variables(a.lhs) || has_variables(a.rhs); },
                          [](const GuardOr& o) { return has_variables(o.lhs) || has_variables(o.rhs); },
                          [](const GuardNot& n) { return has_variables(n.arg); },
                      },
                      g->node);
}

bool constant_truth(const Guard& g)
{
    Program p{{}, ir::if_then_else(g, ir::ret(ir::constant(1)), ir::ret(ir::constant(0))), Sort::Bool};
    return evaluate_program(p, std::span<const Rational>{}) == 1;
}

class Unroller {
public:
    explicit Unroller(std::size_t cap) : cap_(cap) {}

    Command run(const Command& c, const Bindings& env)
    {
        return std::visit(
            overloaded{
                [&](const Skip&) { return count(c); },
                [&](const Assign& a) {
                    if (env.contains(a.target))
                        throw MalformedProgram("assignment to loop index '" + a.target + "'");
                    return count(ir::assign(a.target, env.empty() ? a.value : bind(a.value, env)));
                },
                [&](const Sequence& s) {
                    std::vector<Command> out;
                    out.reserve(s.commands.size());
                    for (const auto& x : s.commands)
                        out.push_back(run(x, env));
                    return ir::seq(std::move(out));
                },
                [&](const IfThenElse& i) {
                    Guard g = env.empty() ? i.cond : bind(i.cond, env);
                    if (!env.empty() && !has_variables(g))
                        return run(constant_truth(g) ? i.then_branch : i.else_branch, env);
                    ++emitted_;
                    Command t = run(i.then_branch, env);
                    Command e = run(i.else_branch, env);
                    return ir::if_then_else(g, t, e);
                },
                [&](const ForLoop& l) {
                    std::vector<Command> out;
                    Bindings inner = env;
                    for (int k = 1; k <= l.count; ++k) {
                        inner[l.index] = k;
                        out.push_back(run(l.body, inner));
                    }
                    if (out.empty())
                        return count(ir::skip());
                    return ir::seq(std::move(out));
                },
                [&](const Return& r) { return count(ir::ret(env.empty() ? r.value : bind(r.value, env))); },
            },
            c->node);
    }

private:
    Command count(Command c)
    {
        if (++emitted_ > cap_)
            throw MalformedProgram("loop unrolling exceeds " + std::to_string(cap_) + " commands");
        return c;
    }

    std::size_t cap_;
    std::size_t emitted_ = 0;
};

} // namespace

Program unroll_loops(const Program& p, std::size_t cap)
{
    check_well_formed(p);
    Unroller u(cap);
    return Program{p.inputs, u.run(p.body, {}), p.output_sort};
}

// ---------------------------------------------------------------- single assignment

namespace {

using NameMap = std::function<std::string(const std::string&)>;

Expr rename_expr(const Expr& e, const NameMap& f)
{
    return std::visit(overloaded{
                          [&](const VarRef& v) { return ir::var(f(v.name)); },
                          [&](const Constant&) { return e; },
                          [&](const Negate& n) { return ir::neg(rename_expr(n.arg, f)); },
                          [&](const BinaryExpr& b) {
                              Expr l = rename_expr(b.lhs, f);
                              Expr r = rename_expr(b.rhs, f);
                              switch (b.op) {
                              case BinaryOp::Add: return ir::add(l, r);
                              case BinaryOp::Sub: return ir::sub(l, r);
                              case BinaryOp::Mul: return ir::mul(l, r);
                              }
                              return e;
                          },
                      },
                      e->node);
}

Guard rename_guard(const Guard& g, const NameMap& f)
{
    return std::visit(overloaded{
                          [&](const Compare& c) { return ir::cmp(rename_expr(c.lhs, f), c.rel, rename_expr(c.rhs, f)); },
                          [&](const GuardAnd& a) { return ir::both(rename_guard(a.lhs, f), rename_guard(a.rhs, f)); },
                          [&](const GuardOr& o) { return ir::either(rename_guard(o.lhs, f), rename_guard(o.rhs, f)); },
                          [&](const GuardNot& n) { return ir::negate(rename_guard(n.arg, f)); },
                      },
                      g->node);
}

// Renames every occurrence (uses and definitions) of one name.
Command rename_command(const Command& c, const std::string& from, const std::string& to)
{
    NameMap f = [&](const std::string& n) { return n == from ? to : n; };
    return std::visit(overloaded{
                          [&](const Skip&) { return c; },
                          [&](const Assign& a) { return ir::assign(f(a.target), rename_expr(a.value, f)); },
                          [&](const Sequence& s) {
                              std::vector<Command> out;
                              for (const auto& x : s.commands)
                                  out.push_back(rename_command(x, from, to));
                              return ir::seq(std::move(out));
                          },
                          [&](const IfThenElse& i) {
                              return ir::if_then_else(rename_guard(i.cond, f), rename_command(i.then_branch, from, to),
                                                      rename_command(i.else_branch, from, to));
                          },
                          [&](const ForLoop& l) {
                              return ir::for_loop(l.index, l.count, rename_command(l.body, from, to));
                          },
                          [&](const Return& r) { return ir::ret(rename_expr(r.value, f)); },
                      },
                      c->node);
}

bool always_returns(const Command& c)
{
    return std::visit(overloaded{
                          [](const Sequence& s) { return !s.commands.empty() && always_returns(s.commands.back()); },
                          [](const IfThenElse& i) {
                              return always_returns(i.then_branch) && always_returns(i.else_branch);
                          },
                          [](const Return&) { return true; },
                          [](const auto&) { return false; },
                      },
                      c->node);
}

using Versions = std::map<std::string, std::string, std::less<>>;

class Renamer {
public:
    Command run(const Command& c, Versions& cur)
    {
        NameMap use = [&](const std::string& n) {
            auto it = cur.find(n);
            if (it == cur.end())
                throw MalformedProgram("variable '" + n + "' used before definition");
            return it->second;
        };
        return std::visit(
            overloaded{
                [&](const Skip&) { return c; },
                [&](const Assign& a) {
                    Expr value = rename_expr(a.value, use);
                    std::string name = fresh(a.target);
                    cur[a.target] = name;
                    return ir::assign(name, value);
                },
                [&](const Sequence& s) {
                    std::vector<Command> out;
                    for (const auto& x : s.commands)
                        out.push_back(run(x, cur));
                    return ir::seq(std::move(out));
                },
                [&](const IfThenElse& i) {
                    Guard cond = rename_guard(i.cond, use);
                    Versions tv = cur;
                    Versions ev = cur;
                    Command t = run(i.then_branch, tv);
                    Command e = run(i.else_branch, ev);
                    bool t_live = !always_returns(t);
                    bool e_live = !always_returns(e);
                    if (!t_live && !e_live)
                        return ir::if_then_else(cond, t, e);
                    if (!t_live || !e_live) {
                        cur = t_live ? tv : ev;
                        return ir::if_then_else(cond, t, e);
                    }
                    std::set<std::string, std::less<>> names;
                    for (const auto& [k, v] : tv)
                        names.insert(k);
                    for (const auto& [k, v] : ev)
                        names.insert(k);
                    for (const auto& v : names) {
                        auto ti = tv.find(v);
                        auto ei = ev.find(v);
                        if (ti != tv.end() && ei != ev.end() && ti->second == ei->second) {
                            cur[v] = ti->second;
                            continue;
                        }
                        auto before = cur.find(v);
                        std::string merged = fresh(v);
                        t = merge(t, ti == tv.end() ? nullptr : &ti->second, before, cur, merged);
                        e = merge(e, ei == ev.end() ? nullptr : &ei->second, before, cur, merged);
                        cur[v] = merged;
                    }
                    return ir::if_then_else(cond, t, e);
                },
                [&](const ForLoop&) -> Command {
                    throw MalformedProgram("single assignment expects an unrolled program");
                },
                [&](const Return& r) { return ir::ret(rename_expr(r.value, use)); },
            },
            c->node);
    }

private:
    // The branch's final version of a variable becomes `merged`: renamed when
    // the branch defined it, copied when it was inherited unchanged.
    static Command merge(const Command& branch, const std::string* version, Versions::const_iterator before,
                         const Versions& cur, const std::string& merged)
    {
        if (!version)
            return branch;
        bool inherited = before != cur.end() && before->second == *version;
        if (inherited)
            return ir::seq({branch, ir::assign(merged, ir::var(*version))});
        return rename_command(branch, *version, merged);
    }

    std::string fresh(const std::string& base) { return base + "#" + std::to_string(++counter_[base]); }

    std::map<std::string, int, std::less<>> counter_;
};

} // namespace

Program to_single_assignment(const Program& p, std::size_t unroll_cap)
{
    Program flat = unroll_loops(p, unroll_cap);
    Versions cur;
    for (const auto& v : flat.inputs)
        cur[v.name] = v.name;
    Renamer r;
    Program out{flat.inputs, r.run(flat.body, cur), flat.output_sort};
    check_well_formed(out);
    return out;
}

std::uint64_t count_paths(const Program& p)
{
    constexpr auto top = std::numeric_limits<std::uint64_t>::max();
    std::function<std::uint64_t(const Command&)> go = [&](const Command& c) -> std::uint64_t {
        return std::visit(overloaded{
                              [&](const Sequence& s) {
                                  std::uint64_t n = 1;
                                  for (const auto& x : s.commands) {
                                      std::uint64_t k = go(x);
                                      n = (k != 0 && n > top / k) ? top : n * k;
                                  }
                                  return n;
                              },
                              [&](const IfThenElse& i) {
                                  std::uint64_t a = go(i.then_branch);
                                  std::uint64_t b = go(i.else_branch);
                                  return a > top - b ? top : a + b;
                              },
                              [&](const ForLoop& l) {
                                  std::uint64_t k = go(l.body);
                                  std::uint64_t n = 1;
                                  for (int j = 0; j < l.count && n != top; ++j)
                                      n = (k != 0 && n > top / k) ? top : n * k;
                                  return n;
                              },
                              [](const auto&) -> std::uint64_t { return 1; },
                          },
                          c->node);
    };
    return go(p.body);
}

// ---------------------------------------------------------------- formulae

namespace {

class Translator {
public:
    Translator(const Program& p, Var output) : output_(std::move(output))
    {
        for (const auto& v : p.inputs)
            sorts_[v.name] = v.sort;
        // A program ending in `return v` for a computed v: v is the output.
        const Command* last = &p.body;
        while (const auto* s = std::get_if<Sequence>(&(*last)->node)) {
            if (s->commands.empty())
                break;
            last = &s->commands.back();
        }
        if (const auto* r = std::get_if<Return>(&(*last)->node))
            if (const auto* v = std::get_if<VarRef>(&r->value->node))
                if (!sorts_.contains(v->name))
                    alias_ = v->name;
    }

    LinearExpr linear(const Expr& e) const
    {
        return std::visit(overloaded{
                              [&](const VarRef& v) { return LinearExpr::variable(var(v.name)); },
                              [](const Constant& c) { return LinearExpr(c.value); },
                              [&](const Negate& n) { return -linear(n.arg); },
                              [&](const BinaryExpr& b) {
                                  LinearExpr l = linear(b.lhs);
                                  LinearExpr r = linear(b.rhs);
                                  switch (b.op) {
                                  case BinaryOp::Add: return l + r;
                                  case BinaryOp::Sub: return l - r;
                                  case BinaryOp::Mul:
                                      if (l.is_constant())
                                          return r * l.constant();
                                      if (r.is_constant())
                                          return l * r.constant();
                                      throw MalformedProgram("non-linear product");
                                  }
                                  return l;
                              },
                          },
                          e->node);
    }

    // Guard in negation normal form; `positive` false yields its negation.
    Formula guard(const Guard& g, bool positive) const
    {
        return std::visit(overloaded{
                              [&](const Compare& c) {
                                  Atom a{linear(c.lhs), c.rel, linear(c.rhs)};
                                  return Formula::atom(positive ? a : negate_atom(a));
                              },
                              [&](const GuardAnd& a) {
                                  auto l = guard(a.lhs, positive);
                                  auto r = guard(a.rhs, positive);
                                  return positive ? Formula::conj({l, r}) : Formula::disj({l, r});
                              },
                              [&](const GuardOr& o) {
                                  auto l = guard(o.lhs, positive);
                                  auto r = guard(o.rhs, positive);
                                  return positive ? Formula::disj({l, r}) : Formula::conj({l, r});
                              },
                              [&](const GuardNot& n) { return guard(n.arg, !positive); },
                          },
                          g->node);
    }

    // Structured formula.
    Formula structured(const Command& c) const
    {
        return std::visit(overloaded{
                              [](const Skip&) { return Formula::truth(); },
                              [&](const Assign& a) { return definition(a); },
                              [&](const Sequence& s) {
                                  std::vector<Formula> parts;
                                  for (const auto& x : s.commands)
                                      parts.push_back(structured(x));
                                  return Formula::conj(std::move(parts));
                              },
                              [&](const IfThenElse& i) {
                                  std::vector<Formula> disjuncts;
                                  branch(guard(i.cond, true), structured(i.then_branch), disjuncts);
                                  branch(guard(i.cond, false), structured(i.else_branch), disjuncts);
                                  return Formula::disj(std::move(disjuncts));
                              },
                              [](const ForLoop&) -> Formula {
                                  throw MalformedProgram("characteristic formula expects an unrolled program");
                              },
                              [&](const Return& r) { return result(r); },
                          },
                          c->node);
    }

    // Paths as conjunct lists.
    using Path = std::vector<Formula>;

    std::vector<Path> paths(const Command& c, std::uint64_t cap) const
    {
        return std::visit(overloaded{
                              [](const Skip&) { return std::vector<Path>{Path{}}; },
                              [&](const Assign& a) { return std::vector<Path>{Path{definition(a)}}; },
                              [&](const Sequence& s) {
                                  std::vector<Path> acc{Path{}};
                                  for (const auto& x : s.commands) {
                                      auto next = paths(x, cap);
                                      if (next.size() == 1) {
                                          for (auto& p : acc)
                                              p.insert(p.end(), next[0].begin(), next[0].end());
                                          continue;
                                      }
                                      std::vector<Path> combined;
                                      for (const auto& p : acc) {
                                          for (const auto& q : next) {
                                              if (combined.size() >= cap)
                                                  throw_cap(cap);
                                              Path r = p;
                                              r.insert(r.end(), q.begin(), q.end());
                                              combined.push_back(std::move(r));
                                          }
                                      }
                                      acc = std::move(combined);
                                  }
                                  return acc;
                              },
                              [&](const IfThenElse& i) {
                                  std::vector<Path> out;
                                  for (bool positive : {true, false}) {
                                      Formula g = guard(i.cond, positive);
                                      for (auto& p : paths(positive ? i.then_branch : i.else_branch, cap)) {
                                          if (out.size() >= cap)
                                              throw_cap(cap);
                                          p.insert(p.begin(), g);
                                          out.push_back(std::move(p));
                                      }
                                  }
                                  return out;
                              },
                              [](const ForLoop&) -> std::vector<Path> {
                                  throw MalformedProgram("path formulae expect an unrolled program");
                              },
                              [&](const Return& r) { return std::vector<Path>{Path{result(r)}}; },
                          },
                          c->node);
    }

private:
    Var var(const std::string& name) const
    {
        if (alias_ && name == *alias_)
            return output_;
        auto it = sorts_.find(name);
        return Var{name, it == sorts_.end() ? Sort::Real : it->second};
    }

    Formula definition(const Assign& a) const
    {
        return Formula::atom(LinearExpr::variable(var(a.target)), Relation::Eq, linear(a.value));
    }

    Formula result(const Return& r) const
    {
        if (alias_)
            return Formula::truth();
        return Formula::atom(LinearExpr::variable(output_), Relation::Eq, linear(r.value));
    }

    // Appends (g and body); a body that is itself a disjunction is distributed
    // so nested conditionals stay one flat disjunction.
    static void branch(const Formula& g, const Formula& body, std::vector<Formula>& out)
    {
        if (body.kind() == Formula::Kind::Or) {
            for (const auto& d : body.children())
                out.push_back(Formula::conj({g, d}));
        } else {
            out.push_back(Formula::conj({g, body}));
        }
    }

    [[noreturn]] static void throw_cap(std::uint64_t cap)
    {
        throw BudgetExceeded("program has more than " + std::to_string(cap) +
                             " execution paths; use the structured form");
    }

    Var output_;
    std::map<std::string, Sort, std::less<>> sorts_;
    std::optional<std::string> alias_;
};

} // namespace

std::vector<Formula> path_formulae(const Program& ssa, const Var& output, std::uint64_t cap)
{
    if (count_paths(ssa) > cap)
        throw BudgetExceeded("program has more than " + std::to_string(cap) +
                             " execution paths; use the structured form");
    Translator t(ssa, output);
    std::vector<Formula> out;
    for (auto& p : t.paths(ssa.body, cap))
        out.push_back(Formula::conj(std::move(p)));
    return out;
}

Formula characteristic_formula(const Program& ssa, const CompileOptions& options)
{
    if (options.form == CompileOptions::Form::Dnf)
        return Formula::disj(path_formulae(ssa, options.output, options.path_cap));
    Translator t(ssa, options.output);
    return t.structured(ssa.body);
}

Formula counterfactual_formula(const Formula& phi, const Var& output, int yhat)
{
    if (yhat != 0 && yhat != 1)
        throw ValidationError("factual label must be 0 or 1");
    Assignment fixed{{output.name, Rational(1 - yhat)}};
    return substitute(phi, fixed);
}

CompiledModel compile_model(const ModelSpec& spec, const CompileOptions& options)
{
    Program program = build_program(spec);
    Program ssa = to_single_assignment(program, options.unroll_cap);
    Formula phi = characteristic_formula(ssa, options);
    return CompiledModel{spec, std::move(program), std::move(ssa), std::move(phi), options.output};
}

} // namespace cfsat
