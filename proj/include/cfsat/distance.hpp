#pragma once

#include "cfsat/formula.hpp"
#include "cfsat/program.hpp"
#include "cfsat/schema.hpp"

#include <string_view>
#include <variant>
#include <vector>

namespace cfsat {

enum class NormPreset { L0, L1, Linf, Combined };

std::string_view norm_name(NormPreset n);
NormPreset parse_norm(std::string_view s);

// d = alpha * |delta|_0 / J + beta * |delta|_1 / J + gamma * |delta|_inf with
// alpha + beta + gamma = 1, so d lies in [0, 1].
struct DistanceConfig {
    Rational alpha;
    Rational beta;
    Rational gamma;

    static DistanceConfig preset(NormPreset n);
    // Non-negative weights, not all zero; rescaled to sum to 1.
    static DistanceConfig weights(Rational alpha, Rational beta, Rational gamma);

    friend bool operator==(const DistanceConfig&, const DistanceConfig&) = default;
};

// |x - xhat| / R for numerical and ordinal features, a change indicator for
// categorical and binary ones, 0 for constant features.
Rational feature_distance(const FeatureSpec& spec, const Rational& x, const Rational& xhat);

std::vector<Rational> distance_vector(const FeatureSchema& schema, const RawInstance& x, const RawInstance& xhat);

Rational distance_value(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& x,
                        const RawInstance& xhat);

// The raw value of feature j as a linear expression over its encoded
// coordinates (category index / level for one-hot and thermometer blocks).
LinearExpr raw_value_expr(const FeatureSchema& schema, std::size_t j);

using Threshold = std::variant<Rational, Var>;

enum class DistanceEncoding {
    // Auxiliary bounds a_j >= +-(x_j - xhat_j)/R_j, m >= a_j and change
    // indicators b_j with (b_j = 1) or (x_j = xhat_j).
    Auxiliary,
    // Characteristic formula of distance_program with the output bounded.
    Program,
};

// phi_d(x, delta): satisfiable for a given encoded x iff d(x, xhat) <= delta.
// Throws ValidationError for a constant threshold outside [0, 1].
Formula distance_formula(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& xhat,
                         const Threshold& delta, DistanceEncoding encoding = DistanceEncoding::Auxiliary);

// Program over the encoded inputs returning d(x, xhat) exactly.
Program distance_program(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& xhat);

} // namespace cfsat
