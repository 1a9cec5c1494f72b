#pragma once

#include "cfsat/rational.hpp"
#include "cfsat/var.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfsat {

enum class FeatureKind { Real, Integer, Binary, Categorical, Ordinal };
enum class Encoding { Direct, OneHot, Thermometer };
enum class Actionability { Free, Immutable, NonDecreasing };

std::string_view kind_name(FeatureKind k);
std::string_view encoding_name(Encoding e);
std::string_view actionability_name(Actionability a);
FeatureKind parse_kind(std::string_view s);
Encoding parse_encoding(std::string_view s);
Actionability parse_actionability(std::string_view s);

// One raw input feature. Raw values are rationals in every case:
//   Real / Integer: the value itself
//   Binary:         0 or 1
//   Categorical:    0-based index into `categories`
//   Ordinal:        level in 1..levels
// [lo, hi] is the observed range; R_j = hi - lo normalises distances.
struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Real;
    Rational lo;
    Rational hi;
    std::vector<std::string> categories; // Categorical only
    int levels = 0;                      // Ordinal only
    Encoding encoding = Encoding::Direct;
    Actionability actionability = Actionability::Free;

    Rational range() const { return hi - lo; }
    bool is_constant() const { return lo == hi; }
    // Categorical and binary features change by indicator, others by magnitude.
    bool is_nominal() const { return kind == FeatureKind::Categorical || kind == FeatureKind::Binary; }
    // Number of distinct values for Binary/Categorical/Ordinal.
    int cardinality() const;
    // Free unless declared otherwise; constant features are immutable.
    Actionability effective_actionability() const;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

// A model input coordinate. Direct features have one; one-hot blocks have one
// per category (position = category index); thermometer blocks one per level
// (position = level, value 1 iff raw level >= position).
struct EncodedVar {
    Var var;
    std::size_t feature = 0;
    int position = 0;

    friend bool operator==(const EncodedVar&, const EncodedVar&) = default;
};

using RawInstance = std::vector<Rational>;
using EncodedVector = std::vector<Rational>;

class FeatureSchema {
public:
    FeatureSchema() = default;
    // Validates: unique names, J >= 1, lo <= hi, k >= 2, encoding fits kind,
    // encoded names unique. Throws ValidationError.
    FeatureSchema(std::vector<FeatureSpec> features, std::string label = "label");

    const std::vector<FeatureSpec>& features() const { return features_; }
    const FeatureSpec& feature(std::size_t j) const { return features_.at(j); }
    std::size_t size() const { return features_.size(); }
    const std::string& label() const { return label_; }

    const std::vector<EncodedVar>& encoded() const { return encoded_; }
    std::size_t encoded_size() const { return encoded_.size(); }
    // Encoded coordinates belonging to raw feature j, in position order.
    std::span<const std::size_t> encoded_of(std::size_t j) const;
    std::optional<std::size_t> find_feature(std::string_view name) const;
    std::optional<std::size_t> find_encoded(std::string_view name) const;
    std::vector<Var> input_vars() const;

    // Same features with the given ranges replacing [lo, hi]. The encoding
    // layout does not change.
    FeatureSchema with_ranges(std::span<const std::pair<Rational, Rational>> ranges) const;

    // Category name -> index. Throws ParseError for out-of-vocabulary values.
    int category_index(std::size_t j, std::string_view category) const;
    // Parses a textual cell (CSV / JSON string) into a raw value.
    Rational parse_value(std::size_t j, std::string_view text) const;
    // Display form: category name for categoricals, decimal otherwise.
    std::string format_value(std::size_t j, const Rational& raw) const;

    friend bool operator==(const FeatureSchema& a, const FeatureSchema& b)
    {
        return a.features_ == b.features_ && a.label_ == b.label_;
    }

private:
    std::vector<FeatureSpec> features_;
    std::string label_;
    std::vector<EncodedVar> encoded_;
    std::vector<std::vector<std::size_t>> blocks_;
};

struct FactualInstance {
    RawInstance raw;
    EncodedVector encoded;
    int label = 0;
};

// Raw -> encoded. Throws ValidationError on an out-of-vocabulary category,
// a non-integral integer/ordinal/binary value, or a level outside 1..levels.
EncodedVector encode_instance(const FeatureSchema& schema, const RawInstance& raw);

// Encoded -> raw. Throws ValidationError if a one-hot block does not hold
// exactly one 1 or a thermometer block is not a 1...10...0 prefix.
RawInstance decode_instance(const FeatureSchema& schema, const EncodedVector& encoded);

// Encoding-validity check used by decode and by tests.
bool is_valid_encoding(const FeatureSchema& schema, const EncodedVector& encoded);

} // namespace cfsat
