#pragma once

#include "cfsat/formula.hpp"
#include "cfsat/rational.hpp"
#include "cfsat/var.hpp"

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cfsat {

// Core language: expressions over +, - and multiplication by a constant;
// guards built from comparisons with and/or/not; commands skip, assignment,
// sequence, if-then-else, bounded for and return.

struct ExprNode;
struct GuardNode;
struct CommandNode;
using Expr = std::shared_ptr<const ExprNode>;
using Guard = std::shared_ptr<const GuardNode>;
using Command = std::shared_ptr<const CommandNode>;

enum class BinaryOp { Add, Sub, Mul };

struct VarRef {
    std::string name;
};
struct Constant {
    Rational value;
};
struct Negate {
    Expr arg;
};
struct BinaryExpr {
    BinaryOp op;
    Expr lhs;
    Expr rhs;
};

struct ExprNode {
    std::variant<VarRef, Constant, Negate, BinaryExpr> node;
};

struct Compare {
    Relation rel;
    Expr lhs;
    Expr rhs;
};
struct GuardAnd {
    Guard lhs;
    Guard rhs;
};
struct GuardOr {
    Guard lhs;
    Guard rhs;
};
struct GuardNot {
    Guard arg;
};

struct GuardNode {
    std::variant<Compare, GuardAnd, GuardOr, GuardNot> node;
};

struct Skip {};
struct Assign {
    std::string target;
    Expr value;
};
struct Sequence {
    std::vector<Command> commands;
};
struct IfThenElse {
    Guard cond;
    Command then_branch;
    Command else_branch;
};
// for (index = 1 .. count) do body
struct ForLoop {
    std::string index;
    int count = 0;
    Command body;
};
struct Return {
    Expr value;
};

struct CommandNode {
    std::variant<Skip, Assign, Sequence, IfThenElse, ForLoop, Return> node;
};

namespace ir {

Expr var(std::string name);
Expr constant(Rational value);
Expr neg(Expr e);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
// Throws MalformedProgram unless one operand is variable-free.
Expr mul(Expr a, Expr b);

Guard cmp(Expr lhs, Relation rel, Expr rhs);
Guard both(Guard a, Guard b);
Guard either(Guard a, Guard b);
Guard negate(Guard g);

Command skip();
Command assign(std::string target, Expr value);
// Throws MalformedProgram if any command other than the last contains a return.
Command seq(std::vector<Command> commands);
Command if_then_else(Guard cond, Command then_branch, Command else_branch);
Command for_loop(std::string index, int count, Command body);
Command ret(Expr value);

} // namespace ir

bool has_variables(const Expr& e);
bool contains_return(const Command& c);
std::string to_string(const Expr& e);
std::string to_string(const Guard& g);
// Indented pseudo-code listing.
std::string to_string(const Command& c);

// A program is a command over declared inputs returning one value.
struct Program {
    std::vector<Var> inputs;
    Command body;
    // Sort of the returned value: Bool for classifiers, Real for distances.
    Sort output_sort = Sort::Bool;
};

// Checks the well-formedness rules (no command after a return on any path,
// loop counts non-negative, every path ends in a return). Throws MalformedProgram.
void check_well_formed(const Program& p);

// Big-step evaluation. `input` is aligned with p.inputs. Loops run their
// syntactic bound. Throws EvaluationError on an unbound variable or when no
// return is reached.
Rational evaluate_program(const Program& p, std::span<const Rational> input);
Rational evaluate_program(const Program& p, const Assignment& input);

} // namespace cfsat
