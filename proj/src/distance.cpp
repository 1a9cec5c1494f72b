#include "cfsat/distance.hpp"

#include "cfsat/compiler.hpp"
#include "cfsat/errors.hpp"

namespace cfsat {

std::string_view norm_name(NormPreset n)
{
    switch (n) {
    case NormPreset::L0: return "l0";
    case NormPreset::L1: return "l1";
    case NormPreset::Linf: return "linf";
    case NormPreset::Combined: return "combined";
    }
    return "?";
}

NormPreset parse_norm(std::string_view s)
{
    if (s == "l0")
        return NormPreset::L0;
    if (s == "l1")
        return NormPreset::L1;
    if (s == "linf")
        return NormPreset::Linf;
    if (s == "combined")
        return NormPreset::Combined;
    throw ParseError("unknown norm '" + std::string(s) + "' (expected l0, l1, linf or combined)");
}

DistanceConfig DistanceConfig::preset(NormPreset n)
{
    switch (n) {
    case NormPreset::L0: return {1, 0, 0};
    case NormPreset::L1: return {0, 1, 0};
    case NormPreset::Linf: return {0, 0, 1};
    case NormPreset::Combined: return {Rational(1, 3), Rational(1, 3), Rational(1, 3)};
    }
    return {1, 0, 0};
}

DistanceConfig DistanceConfig::weights(Rational alpha, Rational beta, Rational gamma)
{
    if (alpha < 0 || beta < 0 || gamma < 0)
        throw ValidationError("distance weights must be non-negative");
    Rational total = alpha + beta + gamma;
    if (total == 0)
        throw ValidationError("distance weights must not all be zero");
    return {alpha / total, beta / total, gamma / total};
}

Rational feature_distance(const FeatureSpec& spec, const Rational& x, const Rational& xhat)
{
    if (spec.is_constant())
        return 0;
    if (spec.is_nominal())
        return x == xhat ? 0 : 1;
    return abs(x - xhat) / spec.range();
}

std::vector<Rational> distance_vector(const FeatureSchema& schema, const RawInstance& x, const RawInstance& xhat)
{
    if (x.size() != schema.size() || xhat.size() != schema.size())
        throw ValidationError("instance length does not match the schema");
    std::vector<Rational> delta(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j)
        delta[j] = feature_distance(schema.feature(j), x[j], xhat[j]);
    return delta;
}

Rational distance_value(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& x,
                        const RawInstance& xhat)
{
    auto delta = distance_vector(schema, x, xhat);
    Rational l0, l1, linf;
    for (const auto& d : delta) {
        if (d != 0)
            l0 += 1;
        l1 += d;
        if (d > linf)
            linf = d;
    }
    Rational J(static_cast<long>(schema.size()));
    return cfg.alpha * l0 / J + cfg.beta * l1 / J + cfg.gamma * linf;
}

LinearExpr raw_value_expr(const FeatureSchema& schema, std::size_t j)
{
    const auto& f = schema.feature(j);
    LinearExpr e;
    for (auto i : schema.encoded_of(j)) {
        const auto& ev = schema.encoded()[i];
        switch (f.encoding) {
        case Encoding::Direct: e += LinearExpr::variable(ev.var); break;
        case Encoding::OneHot: e += LinearExpr::variable(ev.var, Rational(ev.position)); break;
        case Encoding::Thermometer: e += LinearExpr::variable(ev.var); break;
        }
    }
    return e;
}

namespace {

void check_threshold(const Threshold& delta)
{
    if (const auto* c = std::get_if<Rational>(&delta))
        if (*c < 0 || *c > 1)
            throw ValidationError("distance threshold " + to_string(*c) + " lies outside [0, 1]");
}

LinearExpr threshold_expr(const Threshold& delta)
{
    if (const auto* c = std::get_if<Rational>(&delta))
        return *c;
    return LinearExpr::variable(std::get<Var>(delta));
}

// A one-hot or binary feature's change indicator is linear in its coordinates.
std::optional<LinearExpr> linear_indicator(const FeatureSchema& schema, std::size_t j, const Rational& xhat)
{
    const auto& f = schema.feature(j);
    auto block = schema.encoded_of(j);
    if (f.kind == FeatureKind::Binary) {
        auto b = LinearExpr::variable(schema.encoded()[block.front()].var);
        return xhat == 0 ? b : LinearExpr(1) - b;
    }
    if (f.kind == FeatureKind::Categorical && f.encoding == Encoding::OneHot) {
        for (auto i : block)
            if (schema.encoded()[i].position == xhat)
                return LinearExpr(1) - LinearExpr::variable(schema.encoded()[i].var);
    }
    return std::nullopt;
}

std::string aux_name(std::string_view kind, const std::string& feature)
{
    return "dist." + std::string(kind) + "." + feature;
}

Formula auxiliary_formula(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& xhat,
                          const Threshold& delta)
{
    const Rational J(static_cast<long>(schema.size()));
    const bool use_l0 = cfg.alpha != 0;
    const bool use_mag = cfg.beta != 0 || cfg.gamma != 0;
    const bool use_max = cfg.gamma != 0;
    const Var m{"dist.m", Sort::Real};

    std::vector<Formula> parts;
    LinearExpr total;
    if (use_max) {
        parts.push_back(ge(LinearExpr::variable(m), 0));
        total += LinearExpr::variable(m, cfg.gamma);
    }
    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& f = schema.feature(j);
        if (f.is_constant())
            continue;
        LinearExpr raw = raw_value_expr(schema, j);
        if (auto ind = linear_indicator(schema, j, xhat[j])) {
            total += *ind * ((cfg.alpha + cfg.beta) / J);
            if (use_max)
                parts.push_back(ge(LinearExpr::variable(m), *ind));
            continue;
        }
        if (f.is_nominal()) {
            // Directly encoded category index: the indicator is all there is.
            if (!use_l0 && !use_mag)
                continue;
            Var b{aux_name("b", f.name), Sort::Bool};
            auto bv = LinearExpr::variable(b);
            parts.push_back(Formula::disj({eq(bv, 1), eq(raw, xhat[j])}));
            total += bv * ((cfg.alpha + cfg.beta) / J);
            if (use_max)
                parts.push_back(ge(LinearExpr::variable(m), bv));
            continue;
        }
        if (use_l0) {
            Var b{aux_name("b", f.name), Sort::Bool};
            auto bv = LinearExpr::variable(b);
            parts.push_back(Formula::disj({eq(bv, 1), eq(raw, xhat[j])}));
            total += bv * (cfg.alpha / J);
        }
        if (use_mag) {
            Var a{aux_name("a", f.name), Sort::Real};
            auto av = LinearExpr::variable(a);
            LinearExpr scaled = (raw - LinearExpr(xhat[j])) * (Rational(1) / f.range());
            parts.push_back(ge(av, scaled));
            parts.push_back(ge(av, -scaled));
            if (cfg.beta != 0)
                total += av * (cfg.beta / J);
            if (use_max)
                parts.push_back(ge(LinearExpr::variable(m), av));
        }
    }
    parts.push_back(le(total, threshold_expr(delta)));
    return Formula::conj(std::move(parts));
}

} // namespace

Program distance_program(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& xhat)
{
    if (xhat.size() != schema.size())
        throw ValidationError("instance length does not match the schema");
    const Rational J(static_cast<long>(schema.size()));
    std::vector<Command> cmds;
    Expr count = ir::constant(0);
    Expr sum = ir::constant(0);
    cmds.push_back(ir::assign("dist.max", ir::constant(0)));

    auto linear_expr = [](const LinearExpr& e) {
        Expr out = ir::constant(e.constant());
        for (const auto& t : e.terms())
            out = ir::add(out, ir::mul(ir::constant(t.coeff), ir::var(t.var.name)));
        return out;
    };

    for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& f = schema.feature(j);
        if (f.is_constant())
            continue;
        std::string t = "dist.t." + f.name;
        std::string a = "dist.a." + f.name;
        cmds.push_back(ir::assign(t, ir::sub(linear_expr(raw_value_expr(schema, j)), ir::constant(xhat[j]))));
        Guard same = ir::cmp(ir::var(t), Relation::Eq, ir::constant(0));
        if (f.is_nominal()) {
            cmds.push_back(ir::if_then_else(same, ir::assign(a, ir::constant(0)), ir::assign(a, ir::constant(1))));
        } else {
            Rational inv = Rational(1) / f.range();
            cmds.push_back(ir::if_then_else(ir::cmp(ir::var(t), Relation::Ge, ir::constant(0)),
                                            ir::assign(a, ir::mul(ir::constant(inv), ir::var(t))),
                                            ir::assign(a, ir::mul(ir::constant(-inv), ir::var(t)))));
        }
        std::string b = "dist.b." + f.name;
        cmds.push_back(ir::if_then_else(same, ir::assign(b, ir::constant(0)), ir::assign(b, ir::constant(1))));
        cmds.push_back(ir::if_then_else(ir::cmp(ir::var(a), Relation::Gt, ir::var("dist.max")),
                                        ir::assign("dist.max", ir::var(a)), ir::skip()));
        count = ir::add(count, ir::var(b));
        sum = ir::add(sum, ir::var(a));
    }
    Expr d = ir::add(ir::add(ir::mul(ir::constant(cfg.alpha / J), count), ir::mul(ir::constant(cfg.beta / J), sum)),
                     ir::mul(ir::constant(cfg.gamma), ir::var("dist.max")));
    cmds.push_back(ir::assign("dist.value", d));
    cmds.push_back(ir::ret(ir::var("dist.value")));
    Program p{schema.input_vars(), ir::seq(std::move(cmds)), Sort::Real};
    check_well_formed(p);
    return p;
}

Formula distance_formula(const DistanceConfig& cfg, const FeatureSchema& schema, const RawInstance& xhat,
                         const Threshold& delta, DistanceEncoding encoding)
{
    check_threshold(delta);
    if (xhat.size() != schema.size())
        throw ValidationError("instance length does not match the schema");
    if (encoding == DistanceEncoding::Auxiliary)
        return auxiliary_formula(cfg, schema, xhat, delta);

    Var out{"dist.d", Sort::Real};
    CompileOptions options;
    options.output = out;
    Program ssa = to_single_assignment(distance_program(cfg, schema, xhat));
    return Formula::conj({characteristic_formula(ssa, options), le(LinearExpr::variable(out), threshold_expr(delta))});
}

} // namespace cfsat
