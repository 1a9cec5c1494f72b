#include "cfsat/search.hpp"

#include "cfsat/errors.hpp"

namespace cfsat {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

} // namespace

std::string_view backend_name(BackendKind b)
{
    return b == BackendKind::Internal ? "internal" : "external";
}

BackendKind parse_backend(std::string_view s)
{
    if (s == "internal")
        return BackendKind::Internal;
    if (s == "external")
        return BackendKind::External;
    throw ValidationError("unknown backend '" + std::string(s) + "' (expected internal or external)");
}

void SearchConfig::validate() const
{
    if (epsilon <= 0 || epsilon >= 1)
        throw ValidationError("epsilon must lie strictly between 0 and 1, got " + to_string(epsilon));
    if (backend == BackendKind::External && !external)
        ExternalBackend::from_environment();
}

int call_bound(const Rational& epsilon)
{
    if (epsilon <= 0)
        throw ValidationError("epsilon must be positive");
    int n = 0;
    for (Rational w = 1; w > epsilon; w /= 2)
        ++n;
    return n;
}

Oracle make_oracle(const SearchConfig& cfg)
{
    if (cfg.backend == BackendKind::External) {
        ExternalBackend backend = cfg.external ? *cfg.external : ExternalBackend::from_environment();
        return [backend](const Formula& f) { return solve_external(f, backend); };
    }
    SolverOptions options = cfg.solver;
    return [options](const Formula& f) { return check_sat(f, options); };
}

// ---------------------------------------------------------------- query

CounterfactualQuery::CounterfactualQuery(const CompiledModel& model, const RawInstance& factual,
                                         DistanceConfig distance, ConstraintSpec constraints,
                                         DistanceEncoding encoding)
    : model_(&model), factual_(factual), distance_(std::move(distance)), constraints_(std::move(constraints)),
      encoding_(encoding)
{
    const FeatureSchema& s = model.spec.schema;
    if (factual_.size() != s.size())
        throw ValidationError("factual instance has " + std::to_string(factual_.size()) + " values, schema has " +
                              std::to_string(s.size()) + " features");
    validate_constraints(constraints_, s);
    factual_encoded_ = encode_instance(s, factual_);
    yhat_ = predict(model.spec, factual_encoded_);
    phi_cf_ = counterfactual_formula(model.phi, model.output, yhat_);
    phi_g_ = plausibility_formula(s, factual_, constraints_);
}

Formula CounterfactualQuery::phi_d(const Rational& delta) const
{
    return distance_formula(distance_, schema(), factual_, delta, encoding_);
}

Formula CounterfactualQuery::at(const Rational& delta) const
{
    return combine_constraints({phi_cf_, phi_d(delta), phi_g_});
}

CounterfactualQuery CounterfactualQuery::excluding(const std::vector<RawInstance>& previous) const
{
    CounterfactualQuery q = *this;
    if (!previous.empty())
        q.phi_g_ = combine_constraints({phi_g_, diversity_formula(schema(), previous)});
    return q;
}

EncodedVector CounterfactualQuery::extract(const Assignment& witness) const
{
    const auto& encoded = schema().encoded();
    EncodedVector out(encoded.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        auto it = witness.find(encoded[i].var.name);
        out[i] = it != witness.end() ? it->second : factual_encoded_[i];
    }
    return out;
}

// ---------------------------------------------------------------- search

SearchResult nearest_counterfactual(const CounterfactualQuery& query, const SearchConfig& cfg)
{
    cfg.validate();
    return nearest_counterfactual(query, cfg, make_oracle(cfg));
}

SearchResult nearest_counterfactual(const CounterfactualQuery& query, const SearchConfig& cfg, const Oracle& oracle)
{
    if (cfg.epsilon <= 0 || cfg.epsilon >= 1)
        throw ValidationError("epsilon must lie strictly between 0 and 1, got " + to_string(cfg.epsilon));
    auto start = Clock::now();
    SearchResult result;
    result.delta_min = 0;
    result.delta_max = 1;
    std::optional<EncodedVector> found;
    const int budget = call_bound(cfg.epsilon);
    bool probed_one = false;

    auto probe = [&](const Rational& delta) {
        auto call_start = Clock::now();
        SolveOutcome outcome = oracle(query.at(delta));
        result.calls.push_back({delta, outcome.verdict, ms_since(call_start)});
        probed_one = probed_one || delta == 1;
        return outcome;
    };

    while (result.delta_max - result.delta_min > cfg.epsilon) {
        if (cfg.time_budget && Clock::now() - start > *cfg.time_budget)
            throw BudgetExceeded("search time budget of " + std::to_string(cfg.time_budget->count()) +
                                 " ms exceeded");
        Rational delta = (result.delta_min + result.delta_max) / 2;
        // Until something is sat the upper end 1 is unproven. Keep the probe
        // where an unsat answer still leaves enough calls to reach 1 and a sat
        // answer leaves enough calls to bisect down to epsilon.
        if (!found) {
            const long left = budget - static_cast<long>(result.calls.size());
            if (left >= 1) {
                Rational reach = cfg.epsilon * Rational(Integer(1) << static_cast<mp_bitcnt_t>(left - 1));
                Rational low = 1 - (reach - cfg.epsilon);
                Rational high = result.delta_min + reach;
                if (low <= high)
                    delta = std::max(low, std::min(delta, high));
            }
        }
        SolveOutcome outcome = probe(delta);
        if (outcome.sat()) {
            found = query.extract(outcome.witness);
            result.delta_max = delta;
        } else {
            result.delta_min = delta;
        }
    }

    // Only when 2^budget < 1/epsilon + 1 can the loop end without probing 1.
    if (!found && !probed_one) {
        SolveOutcome outcome = probe(result.delta_max);
        if (outcome.sat())
            found = query.extract(outcome.witness);
    }
    if (!found)
        throw OverConstrained("no counterfactual within distance " + to_string(result.delta_min) +
                              " satisfies the constraints");

    const FeatureSchema& schema = query.schema();
    result.encoded = std::move(*found);
    result.counterfactual = decode_instance(schema, result.encoded);
    result.distance = distance_value(query.distance(), schema, result.counterfactual, query.factual());

    int flipped = predict(query.model().spec, result.encoded);
    Rational interpreted = evaluate_program(query.model().program, std::span<const Rational>(result.encoded));
    if (flipped != 1 - query.yhat() || interpreted != flipped)
        throw std::logic_error("counterfactual does not flip the model's prediction");
    if (result.distance > result.delta_max)
        throw std::logic_error("counterfactual lies outside the reported bracket");

    result.wall_ms = ms_since(start);
    return result;
}

std::vector<SearchResult> diverse_counterfactuals(const CounterfactualQuery& query, int k, const SearchConfig& cfg)
{
    if (k < 1)
        throw ValidationError("diversity count must be at least 1");
    cfg.validate();
    Oracle oracle = make_oracle(cfg);
    std::vector<SearchResult> results;
    std::vector<RawInstance> previous;
    for (int i = 0; i < k; ++i) {
        try {
            results.push_back(nearest_counterfactual(query.excluding(previous), cfg, oracle));
        } catch (const OverConstrained&) {
            if (results.empty())
                throw;
            break;
        }
        previous.push_back(results.back().counterfactual);
    }
    return results;
}

BracketReplay replay_bracket(const CounterfactualQuery& query, const SearchResult& result, const Oracle& oracle)
{
    BracketReplay r;
    r.lower_unsat = !oracle(query.at(result.delta_min)).sat();
    r.upper_sat = oracle(query.at(result.delta_max)).sat();
    return r;
}

} // namespace cfsat
