#pragma once

#include "cfsat/formula.hpp"
#include "cfsat/model.hpp"
#include "cfsat/program.hpp"

#include <cstdint>
#include <vector>

namespace cfsat {

struct CompileOptions {
    enum class Form { Structured, Dnf };

    Var output{"y", Sort::Bool};
    Form form = Form::Structured;
    // DNF expansion refuses programs with more paths than this.
    std::uint64_t path_cap = 1'000'000;
    // Loop unrolling refuses to produce more commands than this.
    std::size_t unroll_cap = 10'000;
};

// Replaces every for-loop by copies of its body with the index substituted,
// folding conditionals whose guard became constant. Throws MalformedProgram
// beyond `cap` commands.
Program unroll_loops(const Program& p, std::size_t cap = 10'000);

// Weak single assignment: loops unrolled, every assigned variable renamed to
// `name#k`. When the two branches of a conditional define a variable
// differently, their last definitions share one merged name. Throws
// MalformedProgram on a use before definition.
Program to_single_assignment(const Program& p, std::size_t unroll_cap = 10'000);

// Number of syntactic execution paths, saturating at UINT64_MAX.
std::uint64_t count_paths(const Program& p);

// One conjunction per execution path of a single-assignment program, ending
// in the output equality. When the program ends in `return v` for a computed
// v, v is identified with the output variable instead. Throws BudgetExceeded
// above `cap` paths.
std::vector<Formula> path_formulae(const Program& ssa, const Var& output, std::uint64_t cap = 1'000'000);

// phi_f(x, y). Structured form keeps sequences as conjunctions and
// conditionals as (b and ...) or (not b and ...); Dnf is the disjunction of
// path_formulae.
Formula characteristic_formula(const Program& ssa, const CompileOptions& options = {});

// phi_f(x, 1 - yhat).
Formula counterfactual_formula(const Formula& phi, const Var& output, int yhat);

struct CompiledModel {
    ModelSpec spec;
    Program program;
    Program ssa;
    Formula phi;
    Var output;
};

CompiledModel compile_model(const ModelSpec& spec, const CompileOptions& options = {});

} // namespace cfsat
