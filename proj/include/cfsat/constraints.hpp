#pragma once

#include "cfsat/formula.hpp"
#include "cfsat/schema.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cfsat {

struct FeatureConstraint {
    std::optional<Actionability> actionability;
    std::optional<Rational> lo;
    std::optional<Rational> hi;

    friend bool operator==(const FeatureConstraint&, const FeatureConstraint&) = default;
};

enum class DiversityMode { None, L0AtLeast1 };

struct ConstraintSpec {
    std::map<std::string, FeatureConstraint, std::less<>> features;
    DiversityMode diversity = DiversityMode::None;
    int count = 1;

    friend bool operator==(const ConstraintSpec&, const ConstraintSpec&) = default;
};

// {"age": {"actionability": "immutable", "lo": "17", "hi": "90"},
//  "diversity": {"mode": "l0-at-least-1", "count": 3}}
ConstraintSpec parse_constraints(std::string_view document);
ConstraintSpec load_constraints(const std::string& path);

// Overrides must name schema features and keep lo <= hi. Throws ValidationError.
void validate_constraints(const ConstraintSpec& spec, const FeatureSchema& schema);

Actionability effective_actionability(const FeatureSchema& schema, const ConstraintSpec& spec, std::size_t j);

// Valid one-hot blocks (sum 1 over 0/1 coordinates) and thermometer blocks
// (non-increasing, first coordinate 1).
Formula encoding_formula(const FeatureSchema& schema);

// Encoding validity, ranges, and actionability relative to xhat. Integrality
// is carried by the Int/Bool sorts of the encoded variables.
Formula plausibility_formula(const FeatureSchema& schema, const RawInstance& xhat, const ConstraintSpec& spec = {});

// Raw feature j differs from `value`, as an atom on the encoded coordinates.
Formula feature_differs(const FeatureSchema& schema, std::size_t j, const Rational& value);

// For each previous counterfactual, some raw feature differs from it.
Formula diversity_formula(const FeatureSchema& schema, const std::vector<RawInstance>& previous);

// Conjunction; throws SortClash when parts disagree on a variable's sort.
Formula combine_constraints(const std::vector<Formula>& parts);

} // namespace cfsat
