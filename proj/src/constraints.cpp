#include "cfsat/constraints.hpp"

#include "cfsat/distance.hpp"
#include "cfsat/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace cfsat {

using json = nlohmann::json;

namespace {

Rational bound(const json& j, const std::string& where)
{
    if (j.is_string())
        return parse_rational(j.get<std::string>());
    if (j.is_number_integer())
        return Rational(j.get<long>());
    if (j.is_number_float())
        return rational_from_double(j.get<double>());
    throw ParseError(where + ": bounds must be numbers or decimal strings");
}

} // namespace

ConstraintSpec parse_constraints(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("constraint file: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("constraint file must be a JSON object");
    ConstraintSpec spec;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "diversity") {
                std::string mode = value.value("mode", std::string("none"));
                if (mode == "none")
                    spec.diversity = DiversityMode::None;
                else if (mode == "l0-at-least-1")
                    spec.diversity = DiversityMode::L0AtLeast1;
                else
                    throw ParseError("unknown diversity mode '" + mode + "'");
                spec.count = value.value("count", 1);
                if (spec.count < 1)
                    throw ParseError("diversity count must be at least 1");
                continue;
            }
            if (!value.is_object())
                throw ParseError("constraint for '" + key + "' must be an object");
            FeatureConstraint c;
            if (value.contains("actionability"))
                c.actionability = parse_actionability(value.at("actionability").get<std::string>());
            if (value.contains("lo"))
                c.lo = bound(value.at("lo"), key);
            if (value.contains("hi"))
                c.hi = bound(value.at("hi"), key);
            spec.features.emplace(key, std::move(c));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("constraint file: ") + e.what());
    }
    return spec;
}

ConstraintSpec load_constraints(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read constraint file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_constraints(buffer.str());
}

void validate_constraints(const ConstraintSpec& spec, const FeatureSchema& schema)
{
    for (const auto& [name, c] : spec.features) {
        if (!schema.find_feature(name))
            throw ValidationError("constraint names unknown feature '" + name + "'");
        const auto& f = schema.feature(*schema.find_feature(name));
        Rational lo = c.lo.value_or(f.lo);
        Rational hi = c.hi.value_or(f.hi);
        if (lo > hi)
            throw ValidationError("constraint on '" + name + "': lower bound exceeds upper bound");
    }
}

Actionability effective_actionability(const FeatureSchema& schema, const ConstraintSpec& spec, std::size_t j)
{
    const auto& f = schema.feature(j);
    auto it = spec.features.find(f.name);
    if (it != spec.features.end() && it->second.actionability)
        return *it->second.actionability;
    return f.effective_actionability();
}

namespace {

LinearExpr coordinate(const FeatureSchema& schema, std::size_t i)
{
    return LinearExpr::variable(schema.encoded()[i].var);
}

// Position of the one-hot coordinate for raw value v, if any.
std::optional<std::size_t> hot_coordinate(const FeatureSchema& schema, std::size_t j, const Rational& v)
{
    for (auto i : schema.encoded_of(j))
        if (schema.encoded()[i].position == v)
            return i;
    return std::nullopt;
}

Formula feature_equals(const FeatureSchema& schema, std::size_t j, const Rational& value)
{
    const auto& f = schema.feature(j);
    if (f.encoding == Encoding::OneHot) {
        auto i = hot_coordinate(schema, j, value);
        return i ? eq(coordinate(schema, *i), 1) : Formula::falsity();
    }
    return eq(raw_value_expr(schema, j), value);
}

} // namespace

Formula encoding_formula(const FeatureSchema& schema)
{
    std::vector<Formula> parts;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto block = schema.encoded_of(j);
        switch (schema.feature(j).encoding) {
        case Encoding::Direct: break;
        case Encoding::OneHot: {
            LinearExpr sum;
            for (auto i : block)
                sum += coordinate(schema, i);
            parts.push_back(eq(sum, 1));
            break;
        }
        case Encoding::Thermometer:
            parts.push_back(eq(coordinate(schema, block.front()), 1));
            for (std::size_t k = 1; k < block.size(); ++k)
                parts.push_back(le(coordinate(schema, block[k]), coordinate(schema, block[k - 1])));
            break;
        }
    }
    return Formula::conj(std::move(parts));
}

Formula plausibility_formula(const FeatureSchema& schema, const RawInstance& xhat, const ConstraintSpec& spec)
{
    validate_constraints(spec, schema);
    if (xhat.size() != schema.size())
        throw ValidationError("instance length does not match the schema");
    std::vector<Formula> parts{encoding_formula(schema)};
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& f = schema.feature(j);
        auto it = spec.features.find(f.name);
        Rational lo = f.lo;
        Rational hi = f.hi;
        if (it != spec.features.end()) {
            lo = it->second.lo.value_or(lo);
            hi = it->second.hi.value_or(hi);
        }
        LinearExpr raw = raw_value_expr(schema, j);
        bool ranged = f.kind == FeatureKind::Real || f.kind == FeatureKind::Integer || f.kind == FeatureKind::Ordinal ||
                      (f.kind == FeatureKind::Categorical && f.encoding == Encoding::Direct) ||
                      (it != spec.features.end() && (it->second.lo || it->second.hi));
        if (ranged) {
            if (lo == hi) {
                parts.push_back(feature_equals(schema, j, lo));
            } else {
                parts.push_back(ge(raw, lo));
                parts.push_back(le(raw, hi));
            }
        }
        switch (effective_actionability(schema, spec, j)) {
        case Actionability::Free: break;
        case Actionability::Immutable: parts.push_back(feature_equals(schema, j, xhat[j])); break;
        case Actionability::NonDecreasing: parts.push_back(ge(raw, xhat[j])); break;
        }
    }
    return Formula::conj(std::move(parts));
}

Formula feature_differs(const FeatureSchema& schema, std::size_t j, const Rational& value)
{
    const auto& f = schema.feature(j);
    if (f.encoding == Encoding::OneHot) {
        auto i = hot_coordinate(schema, j, value);
        return i ? eq(coordinate(schema, *i), 0) : Formula::truth();
    }
    if (f.kind == FeatureKind::Binary) {
        if (value != 0 && value != 1)
            return Formula::truth();
        return eq(raw_value_expr(schema, j), Rational(1 - value));
    }
    return ne(raw_value_expr(schema, j), value);
}

Formula diversity_formula(const FeatureSchema& schema, const std::vector<RawInstance>& previous)
{
    std::vector<Formula> clauses;
    for (const auto& prev : previous) {
        if (prev.size() != schema.size())
            throw ValidationError("previous counterfactual does not match the schema");
        std::vector<Formula> lits;
        for (std::size_t j = 0; j < schema.size(); ++j)
            lits.push_back(feature_differs(schema, j, prev[j]));
        clauses.push_back(Formula::disj(std::move(lits)));
    }
    return Formula::conj(std::move(clauses));
}

Formula combine_constraints(const std::vector<Formula>& parts)
{
    Formula out = Formula::conj(parts);
    (void)free_variables(out);
    return out;
}

} // namespace cfsat
