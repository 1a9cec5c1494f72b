#pragma once

#include "cfsat/formula.hpp"
#include "cfsat/solver.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfsat {

// SMT-LIB2 script in QF_LIRA: one declare-const per free variable (sorted by
// name), a single assert, check-sat, get-model. Rationals are written as
// (/ p q); byte-identical for identical input.
std::string emit_smtlib(const Formula& f);

// Simple symbol when allowed, |quoted| otherwise.
std::string smt_symbol(std::string_view name);
std::string smt_numeral(const Rational& q);

inline constexpr const char* kSolverEnv = "CFSAT_SMT_SOLVER";

struct ExternalBackend {
    std::vector<std::string> argv;
    std::chrono::milliseconds timeout{60'000};

    // Splits a command line such as "z3 -in" on whitespace.
    static ExternalBackend parse(std::string_view command);
    // From CFSAT_SMT_SOLVER; throws BackendError naming the variable when unset.
    static ExternalBackend from_environment();
};

// Values of a `(model ...)` / `((define-fun ...))` answer, keyed by symbol.
// Bool values become 0/1. Throws BackendError on unreadable text.
Assignment parse_smt_model(std::string_view text);

// Runs the backend on emit_smtlib(f). A sat witness is completed with zeros
// for variables the model omits and re-checked exactly. Throws BackendError
// when the backend is missing or answers something else, BudgetExceeded on
// timeout.
SolveOutcome solve_external(const Formula& f, const ExternalBackend& backend);

} // namespace cfsat
