#include "cfsat/program.hpp"

#include "cfsat/errors.hpp"
#include "overloaded.hpp"

#include <optional>
#include <sstream>
#include <unordered_map>

namespace cfsat {

namespace ir {

Expr var(std::string name) { return std::make_shared<const ExprNode>(ExprNode{VarRef{std::move(name)}}); }
Expr constant(Rational value) { return std::make_shared<const ExprNode>(ExprNode{Constant{std::move(value)}}); }
Expr neg(Expr e) { return std::make_shared<const ExprNode>(ExprNode{Negate{std::move(e)}}); }

Expr add(Expr a, Expr b)
{
    return std::make_shared<const ExprNode>(ExprNode{BinaryExpr{BinaryOp::Add, std::move(a), std::move(b)}});
}

Expr sub(Expr a, Expr b)
{
    return std::make_shared<const ExprNode>(ExprNode{BinaryExpr{BinaryOp::Sub, std::move(a), std::move(b)}});
}

Expr mul(Expr a, Expr b)
{
    if (has_variables(a) && has_variables(b))
        throw MalformedProgram("multiplication needs a constant operand: " + to_string(a) + " * " + to_string(b));
    return std::make_shared<const ExprNode>(ExprNode{BinaryExpr{BinaryOp::Mul, std::move(a), std::move(b)}});
}

Guard cmp(Expr lhs, Relation rel, Expr rhs)
{
    return std::make_shared<const GuardNode>(GuardNode{Compare{rel, std::move(lhs), std::move(rhs)}});
}

Guard both(Guard a, Guard b) { return std::make_shared<const GuardNode>(GuardNode{GuardAnd{std::move(a), std::move(b)}}); }
Guard either(Guard a, Guard b) { return std::make_shared<const GuardNode>(GuardNode{GuardOr{std::move(a), std::move(b)}}); }
Guard negate(Guard g) { return std::make_shared<const GuardNode>(GuardNode{GuardNot{std::move(g)}}); }

Command skip() { return std::make_shared<const CommandNode>(CommandNode{Skip{}}); }

Command assign(std::string target, Expr value)
{
    return std::make_shared<const CommandNode>(CommandNode{Assign{std::move(target), std::move(value)}});
}

Command seq(std::vector<Command> commands)
{
    for (std::size_t i = 0; i + 1 < commands.size(); ++i)
        if (contains_return(commands[i]))
            throw MalformedProgram("command follows a return statement");
    return std::make_shared<const CommandNode>(CommandNode{Sequence{std::move(commands)}});
}

Command if_then_else(Guard cond, Command then_branch, Command else_branch)
{
    return std::make_shared<const CommandNode>(
        CommandNode{IfThenElse{std::move(cond), std::move(then_branch), std::move(else_branch)}});
}

Command for_loop(std::string index, int count, Command body)
{
    if (count < 0)
        throw MalformedProgram("negative loop bound");
    if (contains_return(body))
        throw MalformedProgram("return inside a loop body");
    return std::make_shared<const CommandNode>(CommandNode{ForLoop{std::move(index), count, std::move(body)}});
}

Command ret(Expr value) { return std::make_shared<const CommandNode>(CommandNode{Return{std::move(value)}}); }

} // namespace ir

bool has_variables(const Expr& e)
{
    return std::visit(overloaded{
                          [](const VarRef&) { return true; },
                          [](const Constant&) { return false; },
                          [](const Negate& n) { return has_variables(n.arg); },
                          [](const BinaryExpr& b) { return has_variables(b.lhs) || has_variables(b.rhs); },
                      },
                      e->node);
}

bool contains_return(const Command& c)
{
    return std::visit(overloaded{
                          [](const Skip&) { return false; },
                          [](const Assign&) { return false; },
                          [](const Sequence& s) {
                              for (const auto& x : s.commands)
                                  if (contains_return(x))
                                      return true;
                              return false;
                          },
                          [](const IfThenElse& i) {
                              return contains_return(i.then_branch) || contains_return(i.else_branch);
                          },
                          [](const ForLoop& l) { return contains_return(l.body); },
                          [](const Return&) { return true; },
                      },
                      c->node);
}

std::string to_string(const Expr& e)
{
    return std::visit(overloaded{
                          [](const VarRef& v) { return v.name; },
                          [](const Constant& c) { return cfsat::to_string(c.value); },
                          [](const Negate& n) { return "-(" + to_string(n.arg) + ")"; },
                          [](const BinaryExpr& b) {
                              const char* op = b.op == BinaryOp::Add ? " + " : b.op == BinaryOp::Sub ? " - " : " * ";
                              return "(" + to_string(b.lhs) + op + to_string(b.rhs) + ")";
                          },
                      },
                      e->node);
}

std::string to_string(const Guard& g)
{
    return std::visit(overloaded{
                          [](const Compare& c) {
                              return to_string(c.lhs) + " " + std::string(relation_symbol(c.rel)) + " " +
                                     to_string(c.rhs);
                          },
                          [](const GuardAnd& a) { return "(" + to_string(a.lhs) + " and " + to_string(a.rhs) + ")"; },
                          [](const GuardOr& o) { return "(" + to_string(o.lhs) + " or " + to_string(o.rhs) + ")"; },
                          [](const GuardNot& n) { return "not (" + to_string(n.arg) + ")"; },
                      },
                      g->node);
}

namespace {

void print(std::ostream& os, const Command& c, int indent)
{
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    std::visit(overloaded{
                   [&](const Skip&) { os << pad << "skip\n"; },
                   [&](const Assign& a) { os << pad << a.target << " := " << to_string(a.value) << "\n"; },
                   [&](const Sequence& s) {
                       for (const auto& x : s.commands)
                           print(os, x, indent);
                   },
                   [&](const IfThenElse& i) {
                       os << pad << "if " << to_string(i.cond) << " then\n";
                       print(os, i.then_branch, indent + 1);
                       os << pad << "else\n";
                       print(os, i.else_branch, indent + 1);
                   },
                   [&](const ForLoop& l) {
                       os << pad << "for " << l.index << " = 1.." << l.count << " do\n";
                       print(os, l.body, indent + 1);
                   },
                   [&](const Return& r) { os << pad << "return " << to_string(r.value) << "\n"; },
               },
               c->node);
}

// Every path through c ends in a return.
bool always_returns(const Command& c)
{
    return std::visit(overloaded{
                          [](const Skip&) { return false; },
                          [](const Assign&) { return false; },
                          [](const Sequence& s) { return !s.commands.empty() && always_returns(s.commands.back()); },
                          [](const IfThenElse& i) {
                              return always_returns(i.then_branch) && always_returns(i.else_branch);
                          },
                          [](const ForLoop&) { return false; },
                          [](const Return&) { return true; },
                      },
                      c->node);
}

void check_no_successor(const Command& c)
{
    std::visit(overloaded{
                   [](const Skip&) {},
                   [](const Assign&) {},
                   [](const Sequence& s) {
                       for (std::size_t i = 0; i < s.commands.size(); ++i) {
                           if (i + 1 < s.commands.size() && contains_return(s.commands[i]))
                               throw MalformedProgram("command follows a return statement");
                           check_no_successor(s.commands[i]);
                       }
                   },
                   [](const IfThenElse& i) {
                       check_no_successor(i.then_branch);
                       check_no_successor(i.else_branch);
                   },
                   [](const ForLoop& l) {
                       if (l.count < 0)
                           throw MalformedProgram("negative loop bound");
                       if (contains_return(l.body))
                           throw MalformedProgram("return inside a loop body");
                       check_no_successor(l.body);
                   },
                   [](const Return&) {},
               },
               c->node);
}

using Env = std::unordered_map<std::string, Rational>;

Rational eval(const Expr& e, const Env& env)
{
    return std::visit(overloaded{
                          [&](const VarRef& v) -> Rational {
                              auto it = env.find(v.name);
                              if (it == env.end())
                                  throw EvaluationError("unbound variable '" + v.name + "'");
                              return it->second;
                          },
                          [](const Constant& c) -> Rational { return c.value; },
                          [&](const Negate& n) -> Rational { return -eval(n.arg, env); },
                          [&](const BinaryExpr& b) -> Rational {
                              Rational l = eval(b.lhs, env);
                              Rational r = eval(b.rhs, env);
                              switch (b.op) {
                              case BinaryOp::Add: return l + r;
                              case BinaryOp::Sub: return l - r;
                              case BinaryOp::Mul: return l * r;
                              }
                              return 0;
                          },
                      },
                      e->node);
}

bool eval(const Guard& g, const Env& env)
{
    return std::visit(overloaded{
                          [&](const Compare& c) { return compare(eval(c.lhs, env), c.rel, eval(c.rhs, env)); },
                          [&](const GuardAnd& a) { return eval(a.lhs, env) && eval(a.rhs, env); },
                          [&](const GuardOr& o) { return eval(o.lhs, env) || eval(o.rhs, env); },
                          [&](const GuardNot& n) { return !eval(n.arg, env); },
                      },
                      g->node);
}

// Returns the value if a return was executed.
std::optional<Rational> exec(const Command& c, Env& env)
{
    return std::visit(overloaded{
                          [](const Skip&) -> std::optional<Rational> { return std::nullopt; },
                          [&](const Assign& a) -> std::optional<Rational> {
                              env[a.target] = eval(a.value, env);
                              return std::nullopt;
                          },
                          [&](const Sequence& s) -> std::optional<Rational> {
                              for (const auto& x : s.commands)
                                  if (auto r = exec(x, env))
                                      return r;
                              return std::nullopt;
                          },
                          [&](const IfThenElse& i) -> std::optional<Rational> {
                              return eval(i.cond, env) ? exec(i.then_branch, env) : exec(i.else_branch, env);
                          },
                          [&](const ForLoop& l) -> std::optional<Rational> {
                              for (int k = 1; k <= l.count; ++k) {
                                  env[l.index] = k;
                                  if (auto r = exec(l.body, env))
                                      return r;
                              }
                              return std::nullopt;
                          },
                          [&](const Return& r) -> std::optional<Rational> { return eval(r.value, env); },
                      },
                      c->node);
}

Rational run(const Program& p, Env env)
{
    auto r = exec(p.body, env);
    if (!r)
        throw EvaluationError("program finished without reaching a return");
    return *r;
}

} // namespace

std::string to_string(const Command& c)
{
    std::ostringstream os;
    print(os, c, 0);
    return os.str();
}

void check_well_formed(const Program& p)
{
    if (!p.body)
        throw MalformedProgram("program has no body");
    check_no_successor(p.body);
    if (!always_returns(p.body))
        throw MalformedProgram("some execution path does not end in a return");
}

Rational evaluate_program(const Program& p, std::span<const Rational> input)
{
    if (input.size() != p.inputs.size())
        throw EvaluationError("program expects " + std::to_string(p.inputs.size()) + " inputs, got " +
                              std::to_string(input.size()));
    Env env;
    env.reserve(p.inputs.size() * 2);
    for (std::size_t i = 0; i < input.size(); ++i)
        env.emplace(p.inputs[i].name, input[i]);
    return run(p, std::move(env));
}

Rational evaluate_program(const Program& p, const Assignment& input)
{
    Env env;
    for (const auto& v : p.inputs) {
        auto it = input.find(v.name);
        if (it == input.end())
            throw EvaluationError("input '" + v.name + "' is not assigned");
        env.emplace(v.name, it->second);
    }
    return run(p, std::move(env));
}

} // namespace cfsat
