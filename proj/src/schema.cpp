#include "cfsat/schema.hpp"

#include "cfsat/errors.hpp"

#include <set>

namespace cfsat {

std::string_view kind_name(FeatureKind k)
{
    switch (k) {
    case FeatureKind::Real: return "numerical-real";
    case FeatureKind::Integer: return "numerical-integer";
    case FeatureKind::Binary: return "binary";
    case FeatureKind::Categorical: return "categorical";
    case FeatureKind::Ordinal: return "ordinal";
    }
    return "?";
}

std::string_view encoding_name(Encoding e)
{
    switch (e) {
    case Encoding::Direct: return "direct";
    case Encoding::OneHot: return "one-hot";
    case Encoding::Thermometer: return "thermometer";
    }
    return "?";
}

std::string_view actionability_name(Actionability a)
{
    switch (a) {
    case Actionability::Free: return "free";
    case Actionability::Immutable: return "immutable";
    case Actionability::NonDecreasing: return "non-decreasing";
    }
    return "?";
}

FeatureKind parse_kind(std::string_view s)
{
    if (s == "numerical-real" || s == "real")
        return FeatureKind::Real;
    if (s == "numerical-integer" || s == "integer")
        return FeatureKind::Integer;
    if (s == "binary")
        return FeatureKind::Binary;
    if (s == "categorical")
        return FeatureKind::Categorical;
    if (s == "ordinal")
        return FeatureKind::Ordinal;
    throw ParseError("unknown feature kind '" + std::string(s) + "'");
}

Encoding parse_encoding(std::string_view s)
{
    if (s == "direct")
        return Encoding::Direct;
    if (s == "one-hot")
        return Encoding::OneHot;
    if (s == "thermometer")
        return Encoding::Thermometer;
    throw ParseError("unknown encoding '" + std::string(s) + "'");
}

Actionability parse_actionability(std::string_view s)
{
    if (s == "free")
        return Actionability::Free;
    if (s == "immutable")
        return Actionability::Immutable;
    if (s == "non-decreasing")
        return Actionability::NonDecreasing;
    throw ParseError("unknown actionability '" + std::string(s) + "'");
}

int FeatureSpec::cardinality() const
{
    switch (kind) {
    case FeatureKind::Binary: return 2;
    case FeatureKind::Categorical: return static_cast<int>(categories.size());
    case FeatureKind::Ordinal: return levels;
    default: return 0;
    }
}

Actionability FeatureSpec::effective_actionability() const
{
    return is_constant() ? Actionability::Immutable : actionability;
}

namespace {

void validate_feature(const FeatureSpec& f)
{
    auto fail = [&](const std::string& what) { throw ValidationError("feature '" + f.name + "': " + what); };
    if (f.name.empty())
        throw ValidationError("feature with empty name");
    if (f.lo > f.hi)
        fail("range lower bound exceeds upper bound");
    switch (f.kind) {
    case FeatureKind::Real:
        if (f.encoding != Encoding::Direct)
            fail("numerical features use the direct encoding");
        break;
    case FeatureKind::Integer:
        if (f.encoding != Encoding::Direct)
            fail("numerical features use the direct encoding");
        if (!is_integer(f.lo) || !is_integer(f.hi))
            fail("integer range bounds must be integral");
        break;
    case FeatureKind::Binary:
        if (f.encoding != Encoding::Direct)
            fail("binary features use the direct encoding");
        if (f.lo < 0 || f.hi > 1 || !is_integer(f.lo) || !is_integer(f.hi))
            fail("binary range must lie within [0, 1]");
        break;
    case FeatureKind::Categorical:
        if (f.categories.size() < 2)
            fail("categorical features need at least 2 categories");
        if (f.encoding == Encoding::Thermometer)
            fail("categorical features cannot be thermometer encoded");
        if (std::set<std::string>(f.categories.begin(), f.categories.end()).size() != f.categories.size())
            fail("duplicate category names");
        if (f.lo != 0 || f.hi != static_cast<long>(f.categories.size()) - 1)
            fail("categorical range is the category index range [0, k-1]");
        break;
    case FeatureKind::Ordinal:
        if (f.levels < 2)
            fail("ordinal features need at least 2 levels");
        if (!is_integer(f.lo) || !is_integer(f.hi) || f.lo < 1 || f.hi > f.levels)
            fail("ordinal range must be integral levels within [1, levels]");
        break;
    }
}

} // namespace

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features, std::string label)
    : features_(std::move(features)), label_(std::move(label))
{
    if (features_.empty())
        throw ValidationError("schema needs at least one feature");
    std::set<std::string, std::less<>> names;
    std::set<std::string, std::less<>> encoded_names;
    blocks_.resize(features_.size());
    for (std::size_t j = 0; j < features_.size(); ++j) {
        const auto& f = features_[j];
        validate_feature(f);
        if (!names.insert(f.name).second)
            throw ValidationError("duplicate feature name '" + f.name + "'");
        if (f.name == label_)
            throw ValidationError("feature '" + f.name + "' has the same name as the label column");

        auto push = [&](std::string name, Sort sort, int position) {
            if (!encoded_names.insert(name).second)
                throw ValidationError("encoded variable name '" + name + "' is not unique");
            blocks_[j].push_back(encoded_.size());
            encoded_.push_back(EncodedVar{Var{std::move(name), sort}, j, position});
        };

        switch (f.encoding) {
        case Encoding::Direct: {
            Sort sort = f.kind == FeatureKind::Real     ? Sort::Real
                        : f.kind == FeatureKind::Binary ? Sort::Bool
                                                        : Sort::Int;
            push(f.name, sort, 0);
            break;
        }
        case Encoding::OneHot:
            if (f.kind == FeatureKind::Categorical) {
                for (std::size_t c = 0; c < f.categories.size(); ++c)
                    push(f.name + "=" + f.categories[c], Sort::Bool, static_cast<int>(c));
            } else {
                for (int level = 1; level <= f.levels; ++level)
                    push(f.name + "=" + std::to_string(level), Sort::Bool, level);
            }
            break;
        case Encoding::Thermometer:
            for (int level = 1; level <= f.levels; ++level)
                push(f.name + ">=" + std::to_string(level), Sort::Bool, level);
            break;
        }
    }
    for (const auto& e : encoded_)
        if (names.contains(e.var.name) && features_[e.feature].name != e.var.name)
            throw ValidationError("encoded variable '" + e.var.name + "' collides with a feature name");
}

std::span<const std::size_t> FeatureSchema::encoded_of(std::size_t j) const { return blocks_.at(j); }

std::optional<std::size_t> FeatureSchema::find_feature(std::string_view name) const
{
    for (std::size_t j = 0; j < features_.size(); ++j)
        if (features_[j].name == name)
            return j;
    return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::find_encoded(std::string_view name) const
{
    for (std::size_t i = 0; i < encoded_.size(); ++i)
        if (encoded_[i].var.name == name)
            return i;
    return std::nullopt;
}

std::vector<Var> FeatureSchema::input_vars() const
{
    std::vector<Var> vars;
    vars.reserve(encoded_.size());
    for (const auto& e : encoded_)
        vars.push_back(e.var);
    return vars;
}

FeatureSchema FeatureSchema::with_ranges(std::span<const std::pair<Rational, Rational>> ranges) const
{
    if (ranges.size() != features_.size())
        throw ValidationError("range list length does not match the schema");
    auto features = features_;
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (features[j].kind == FeatureKind::Categorical)
            continue;
        features[j].lo = ranges[j].first;
        features[j].hi = ranges[j].second;
    }
    return FeatureSchema(std::move(features), label_);
}

int FeatureSchema::category_index(std::size_t j, std::string_view category) const
{
    const auto& f = feature(j);
    for (std::size_t c = 0; c < f.categories.size(); ++c)
        if (f.categories[c] == category)
            return static_cast<int>(c);
    throw ParseError("feature '" + f.name + "': category '" + std::string(category) + "' is not in the vocabulary");
}

Rational FeatureSchema::parse_value(std::size_t j, std::string_view text) const
{
    const auto& f = feature(j);
    if (f.kind == FeatureKind::Categorical)
        return category_index(j, text);
    if (f.kind == FeatureKind::Binary) {
        if (text == "true" || text == "True")
            return 1;
        if (text == "false" || text == "False")
            return 0;
    }
    Rational v = parse_rational(text);
    if (f.kind != FeatureKind::Real && !is_integer(v))
        throw ParseError("feature '" + f.name + "': value '" + std::string(text) + "' is not integral");
    return v;
}

std::string FeatureSchema::format_value(std::size_t j, const Rational& raw) const
{
    const auto& f = feature(j);
    if (f.kind == FeatureKind::Categorical && is_integer(raw) && raw >= 0 &&
        raw < static_cast<long>(f.categories.size()))
        return f.categories[raw.get_num().get_ui()];
    return to_string(raw);
}

EncodedVector encode_instance(const FeatureSchema& schema, const RawInstance& raw)
{
    if (raw.size() != schema.size())
        throw ValidationError("instance has " + std::to_string(raw.size()) + " values, schema has " +
                              std::to_string(schema.size()) + " features");
    EncodedVector out(schema.encoded_size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& f = schema.feature(j);
        const Rational& v = raw[j];
        auto fail = [&](const std::string& what) {
            throw ValidationError("feature '" + f.name + "': " + what + " (value " + to_string(v) + ")");
        };
        if (f.kind != FeatureKind::Real && !is_integer(v))
            fail("non-integral value");
        switch (f.kind) {
        case FeatureKind::Binary:
            if (v != 0 && v != 1)
                fail("binary value must be 0 or 1");
            break;
        case FeatureKind::Categorical:
            if (v < 0 || v >= static_cast<long>(f.categories.size()))
                fail("out-of-vocabulary category");
            break;
        case FeatureKind::Ordinal:
            if (v < 1 || v > f.levels)
                fail("ordinal level outside 1.." + std::to_string(f.levels));
            break;
        default: break;
        }
        auto block = schema.encoded_of(j);
        switch (f.encoding) {
        case Encoding::Direct: out[block.front()] = v; break;
        case Encoding::OneHot:
            for (auto i : block)
                out[i] = schema.encoded()[i].position == v ? 1 : 0;
            break;
        case Encoding::Thermometer:
            for (auto i : block)
                out[i] = v >= schema.encoded()[i].position ? 1 : 0;
            break;
        }
    }
    return out;
}

namespace {

std::optional<Rational> decode_feature(const FeatureSchema& schema, std::size_t j, const EncodedVector& enc)
{
    const auto& f = schema.feature(j);
    auto block = schema.encoded_of(j);
    switch (f.encoding) {
    case Encoding::Direct: {
        const Rational& v = enc[block.front()];
        if (f.kind != FeatureKind::Real && !is_integer(v))
            return std::nullopt;
        if (f.kind == FeatureKind::Binary && v != 0 && v != 1)
            return std::nullopt;
        if (f.kind == FeatureKind::Categorical && (v < 0 || v >= static_cast<long>(f.categories.size())))
            return std::nullopt;
        if (f.kind == FeatureKind::Ordinal && (v < 1 || v > f.levels))
            return std::nullopt;
        return v;
    }
    case Encoding::OneHot: {
        std::optional<Rational> hot;
        for (auto i : block) {
            const Rational& c = enc[i];
            if (c != 0 && c != 1)
                return std::nullopt;
            if (c == 1) {
                if (hot)
                    return std::nullopt;
                hot = Rational(schema.encoded()[i].position);
            }
        }
        return hot;
    }
    case Encoding::Thermometer: {
        int ones = 0;
        bool seen_zero = false;
        for (auto i : block) {
            const Rational& t = enc[i];
            if (t != 0 && t != 1)
                return std::nullopt;
            if (t == 1) {
                if (seen_zero)
                    return std::nullopt;
                ++ones;
            } else {
                seen_zero = true;
            }
        }
        if (ones == 0)
            return std::nullopt;
        return Rational(ones);
    }
    }
    return std::nullopt;
}

} // namespace

bool is_valid_encoding(const FeatureSchema& schema, const EncodedVector& encoded)
{
    if (encoded.size() != schema.encoded_size())
        return false;
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (!decode_feature(schema, j, encoded))
            return false;
    return true;
}

RawInstance decode_instance(const FeatureSchema& schema, const EncodedVector& encoded)
{
    if (encoded.size() != schema.encoded_size())
        throw ValidationError("encoded vector has the wrong length");
    RawInstance raw(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto v = decode_feature(schema, j, encoded);
        if (!v)
            throw ValidationError("feature '" + schema.feature(j).name + "': invalid " +
                                  std::string(encoding_name(schema.feature(j).encoding)) + " block");
        raw[j] = *v;
    }
    return raw;
}

} // namespace cfsat
