#pragma once

#include "cfsat/formula.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace cfsat {

enum class Verdict { Sat, Unsat };

struct SolverOptions {
    // Disjunction branches explored before giving up.
    std::size_t max_branches = 2'000'000;
    // Live rows allowed during one Fourier-Motzkin run.
    std::size_t max_rows = 20'000;
    // Integer branch-and-bound splits on one path.
    int max_integer_depth = 64;
    // Record a replayable unsat trace. Disables bound-based pruning of
    // disjuncts so that every closed branch carries its own derivation.
    bool record_certificate = false;
};

struct SolverStats {
    std::size_t branches = 0;
    std::size_t eliminations = 0;
    std::size_t integer_splits = 0;
    std::size_t theory_checks = 0;
};

// e op 0
enum class RowOp { Le, Lt, Eq };

struct TraceRow {
    std::vector<Term> terms;
    Rational constant;
    RowOp op = RowOp::Le;

    std::string str() const;
};

// Closed search tree. A branch node lists one child per case split; a leaf
// holds the constraints of its branch and non-negative multipliers (free sign
// on equalities) whose combination is a constant contradiction such as 0 < -c.
struct UnsatTrace {
    std::string label;
    bool branch = false;
    std::vector<UnsatTrace> children;
    std::vector<TraceRow> rows;
    std::vector<Rational> multipliers;

    std::size_t leaves() const;
};

struct SolveOutcome {
    Verdict verdict = Verdict::Unsat;
    // Every free variable of the formula, Bool as 0/1.
    Assignment witness;
    SolverStats stats;
    std::shared_ptr<const UnsatTrace> certificate;

    bool sat() const { return verdict == Verdict::Sat; }
};

// Decides satisfiability over Bool/Int/Real linear atoms. Deterministic.
// Throws BudgetExceeded when a budget runs out and SortClash on ill-sorted
// input.
SolveOutcome check_sat(const Formula& f, const SolverOptions& options = {});

// Exact check of a witness: formula true, Int and Bool values integral, Bool
// values in {0, 1}, every free variable assigned.
bool witness_satisfies(const Formula& f, const Assignment& w);

// Recomputes every leaf combination of the trace.
bool replay_certificate(const UnsatTrace& trace);

} // namespace cfsat
