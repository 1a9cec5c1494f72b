#pragma once

#include "cfsat/dataset.hpp"
#include "cfsat/search.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cfsat {

struct ObservableResult {
    std::size_t row = 0;
    RawInstance counterfactual;
    Rational distance;
};

// Closest dataset row whose prediction differs from the factual's, among rows
// satisfying the plausibility constraints. Ties go to the lower row index.
// Throws OverConstrained when no row qualifies.
ObservableResult minimum_observable(const ModelSpec& model, const Dataset& data, const RawInstance& factual,
                                    const DistanceConfig& distance, const ConstraintSpec& constraints = {});

// Indices of the first n rows predicted 0. Throws ValidationError when fewer
// exist.
std::vector<std::size_t> select_negative_samples(const ModelSpec& model, const Dataset& data, std::size_t n);

struct NamedNorm {
    std::string name;
    DistanceConfig config;
};

NamedNorm named_norm(NormPreset preset);

enum class SampleStatus { Ok, OverConstrained, BudgetExceeded, Error };

std::string_view status_name(SampleStatus s);

struct SampleRecord {
    std::size_t row = 0;
    std::string norm;
    Rational epsilon;
    SampleStatus status = SampleStatus::Ok;
    std::string message;
    RawInstance factual;
    std::optional<SearchResult> mace;
    std::optional<ObservableResult> mo;
};

struct BatchConfig {
    std::vector<NamedNorm> norms;
    std::vector<Rational> epsilons{Rational(1, 1000)};
    ConstraintSpec constraints;
    std::size_t n_samples = 0;
    int jobs = 1;
    bool baseline = true;
    // epsilon is taken from `epsilons`.
    SearchConfig search;
};

struct ReportRow {
    std::string norm;
    Rational epsilon;
    std::size_t samples = 0;
    double coverage_mace = 0; // percent
    double coverage_mo = 0;
    double mean_distance_mace = 0;
    double mean_distance_mo = 0;
    // 100 * mean(1 - d_mace / d_mo) over samples covered by both.
    double improvement = 0;
    double mean_calls = 0;
    double mean_wall_ms = 0;
};

struct BatchReport {
    std::vector<SampleRecord> records; // sample-major, then norm, then epsilon
    std::vector<ReportRow> rows;
};

BatchReport run_batch(const CompiledModel& model, const Dataset& data, const BatchConfig& cfg);

// 100 * mean(1 - mace_i / other_i).
double relative_improvement(const std::vector<Rational>& mace, const std::vector<Rational>& other);

// One JSON object per line; wall_ms is the last field and the only
// non-deterministic one.
std::string record_json(const FeatureSchema& schema, const SampleRecord& record);
std::string report_csv(const std::vector<ReportRow>& rows);

struct RestrictionReport {
    std::string feature;
    std::string norm;
    std::size_t samples = 0;
    // Unrestricted answers that change the feature, in percent of covered samples.
    double changed_mace = 0;
    double changed_mo = 0;
    // 100 * mean(d_restricted / d_unrestricted - 1) over the changing samples.
    double increase_mace = 0;
    double increase_mo = 0;
    std::size_t uncovered_after = 0;
};

// Reruns every sample whose unrestricted counterfactual changes `feature`
// with that feature immutable.
RestrictionReport restriction_study(const CompiledModel& model, const Dataset& data, const BatchConfig& cfg,
                                    const std::string& feature);

} // namespace cfsat
