#pragma once

#include "cfsat/compiler.hpp"
#include "cfsat/constraints.hpp"
#include "cfsat/distance.hpp"
#include "cfsat/smtlib.hpp"
#include "cfsat/solver.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

namespace cfsat {

enum class BackendKind { Internal, External };

std::string_view backend_name(BackendKind b);
BackendKind parse_backend(std::string_view s);

struct SearchConfig {
    Rational epsilon{1, 1000};
    BackendKind backend = BackendKind::Internal;
    // External command; CFSAT_SMT_SOLVER when empty.
    std::optional<ExternalBackend> external;
    SolverOptions solver;
    DistanceEncoding encoding = DistanceEncoding::Auxiliary;
    // Whole-search wall-clock budget, checked between oracle calls.
    std::optional<std::chrono::milliseconds> time_budget;

    // 0 < epsilon < 1; an external backend resolves. Throws ValidationError
    // or BackendError.
    void validate() const;
};

// ceil(log2(1 / epsilon)).
int call_bound(const Rational& epsilon);

struct OracleCall {
    Rational delta;
    Verdict verdict = Verdict::Unsat;
    double wall_ms = 0;
};

struct SearchResult {
    RawInstance counterfactual;
    EncodedVector encoded;
    Rational delta_min;
    Rational delta_max;
    // d(counterfactual, factual), recomputed on the decoded instance.
    Rational distance;
    std::vector<OracleCall> calls;
    double wall_ms = 0;
};

using Oracle = std::function<SolveOutcome(const Formula&)>;

Oracle make_oracle(const SearchConfig& cfg);

// The pieces of psi(delta) = phi_CF and phi_d(delta) and phi_g for one factual
// instance.
class CounterfactualQuery {
public:
    // yhat is the model's prediction on the factual instance.
    CounterfactualQuery(const CompiledModel& model, const RawInstance& factual, DistanceConfig distance,
                        ConstraintSpec constraints = {}, DistanceEncoding encoding = DistanceEncoding::Auxiliary);

    const CompiledModel& model() const { return *model_; }
    const FeatureSchema& schema() const { return model_->spec.schema; }
    const RawInstance& factual() const { return factual_; }
    const EncodedVector& factual_encoded() const { return factual_encoded_; }
    int yhat() const { return yhat_; }
    const DistanceConfig& distance() const { return distance_; }
    const ConstraintSpec& constraints() const { return constraints_; }

    const Formula& phi_cf() const { return phi_cf_; }
    const Formula& phi_g() const { return phi_g_; }
    Formula phi_d(const Rational& delta) const;
    Formula at(const Rational& delta) const;

    // The same query with diversity against `previous` conjoined to phi_g.
    CounterfactualQuery excluding(const std::vector<RawInstance>& previous) const;

    // Encoded inputs read off a witness; inputs the formula leaves free take
    // the factual value.
    EncodedVector extract(const Assignment& witness) const;

private:
    const CompiledModel* model_;
    RawInstance factual_;
    EncodedVector factual_encoded_;
    int yhat_ = 0;
    DistanceConfig distance_;
    ConstraintSpec constraints_;
    DistanceEncoding encoding_;
    Formula phi_cf_;
    Formula phi_g_;
};

// Binary search on delta over [0, 1] with dyadic midpoints until
// delta_max - delta_min <= epsilon. The counterfactual is the witness of the
// last sat call. While every call so far is unsat, a probe is moved up just
// enough that the remaining calls can still reach delta = 1, so a
// counterfactual at distance exactly 1 is found within ceil(log2(1/epsilon))
// calls whenever 2^calls >= 1/epsilon + 1; otherwise one extra call checks
// delta = 1. Throws OverConstrained when no call is sat, BudgetExceeded
// when the solver or the time budget gives out. The returned counterfactual
// is checked to flip the interpreter's prediction.
SearchResult nearest_counterfactual(const CounterfactualQuery& query, const SearchConfig& cfg);
SearchResult nearest_counterfactual(const CounterfactualQuery& query, const SearchConfig& cfg, const Oracle& oracle);

// k successive searches, each excluding the earlier answers. Returns early
// with the partial list once a run is over-constrained; throws
// OverConstrained if the first one is.
std::vector<SearchResult> diverse_counterfactuals(const CounterfactualQuery& query, int k, const SearchConfig& cfg);

struct BracketReplay {
    bool lower_unsat = false;
    bool upper_sat = false;
};

// Re-queries psi at delta_min and delta_max.
BracketReplay replay_bracket(const CounterfactualQuery& query, const SearchResult& result, const Oracle& oracle);

} // namespace cfsat
