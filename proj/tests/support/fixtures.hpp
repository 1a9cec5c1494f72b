#pragma once

#include "cfsat/compiler.hpp"
#include "cfsat/constraints.hpp"
#include "cfsat/dataset.hpp"
#include "cfsat/model.hpp"
#include "cfsat/schema.hpp"
#include "cfsat/solver.hpp"

#include <random>
#include <string>
#include <vector>

#ifndef CFSAT_TEST_DATA
#define CFSAT_TEST_DATA "tests/data"
#endif

namespace cfsat::testing {

inline std::string data_path(const std::string& name)
{
    return std::string(CFSAT_TEST_DATA) + "/" + name;
}

inline ModelSpec toy_tree() { return load_model(data_path("toy_tree.json")); }
inline ModelSpec toy_mlp() { return load_model(data_path("toy_mlp.json")); }

inline Rational q(long n, long d = 1)
{
    Rational r(n, d);
    r.canonicalize();
    return r;
}

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<int>(n) - 1)); }

    template <class T>
    const T& pick(const std::vector<T>& v)
    {
        return v[index(v.size())];
    }

    // num / den with num in [lo*den, hi*den].
    Rational rational(int lo, int hi, int den)
    {
        Rational r(integer(lo * den, hi * den), den);
        r.canonicalize();
        return r;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

struct SchemaShape {
    int reals = 1;
    int integers = 0;
    int binaries = 0;
    int categoricals = 0;
    int ordinals = 0;
};

inline FeatureSchema random_schema(Gen& g, const SchemaShape& shape)
{
    std::vector<FeatureSpec> fs;
    int n = 0;
    auto name = [&](const char* prefix) { return std::string(prefix) + std::to_string(n++); };
    for (int i = 0; i < shape.reals; ++i) {
        FeatureSpec f;
        f.name = name("r");
        f.kind = FeatureKind::Real;
        f.lo = g.integer(-4, 0);
        f.hi = f.lo + g.integer(1, 6);
        fs.push_back(f);
    }
    for (int i = 0; i < shape.integers; ++i) {
        FeatureSpec f;
        f.name = name("i");
        f.kind = FeatureKind::Integer;
        f.lo = g.integer(0, 20);
        f.hi = f.lo + g.integer(2, 40);
        fs.push_back(f);
    }
    for (int i = 0; i < shape.binaries; ++i) {
        FeatureSpec f;
        f.name = name("b");
        f.kind = FeatureKind::Binary;
        f.lo = 0;
        f.hi = 1;
        fs.push_back(f);
    }
    for (int i = 0; i < shape.categoricals; ++i) {
        FeatureSpec f;
        f.name = name("c");
        f.kind = FeatureKind::Categorical;
        int k = g.integer(2, 4);
        for (int c = 0; c < k; ++c)
            f.categories.push_back("v" + std::to_string(c));
        f.lo = 0;
        f.hi = k - 1;
        f.encoding = g.coin(0.75) ? Encoding::OneHot : Encoding::Direct;
        fs.push_back(f);
    }
    for (int i = 0; i < shape.ordinals; ++i) {
        FeatureSpec f;
        f.name = name("o");
        f.kind = FeatureKind::Ordinal;
        f.levels = g.integer(3, 5);
        f.lo = 1;
        f.hi = f.levels;
        int e = g.integer(0, 2);
        f.encoding = e == 0 ? Encoding::Direct : (e == 1 ? Encoding::OneHot : Encoding::Thermometer);
        fs.push_back(f);
    }
    return FeatureSchema(std::move(fs), "label");
}

inline RawInstance random_instance(Gen& g, const FeatureSchema& s, int den = 8)
{
    RawInstance x(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        const auto& f = s.feature(j);
        switch (f.kind) {
        case FeatureKind::Real: {
            Rational r = f.range();
            x[j] = f.lo + r * q(g.integer(0, den), den);
            break;
        }
        case FeatureKind::Integer:
            x[j] = g.integer(static_cast<int>(f.lo.get_num().get_si()), static_cast<int>(f.hi.get_num().get_si()));
            break;
        case FeatureKind::Binary: x[j] = g.integer(0, 1); break;
        case FeatureKind::Categorical: x[j] = g.integer(0, static_cast<int>(f.categories.size()) - 1); break;
        case FeatureKind::Ordinal: x[j] = g.integer(1, f.levels); break;
        }
    }
    return x;
}

// A split on one encoded coordinate with a threshold inside its range.
inline TreeNode random_split(Gen& g, const FeatureSchema& s)
{
    const EncodedVar& ev = s.encoded()[g.index(s.encoded_size())];
    const FeatureSpec& f = s.feature(ev.feature);
    TreeNode n;
    n.feature = ev.var.name;
    if (ev.var.sort == Sort::Bool) {
        n.op = Relation::Eq;
        n.threshold = g.integer(0, 1);
        return n;
    }
    static const std::vector<Relation> ops{Relation::Le, Relation::Lt, Relation::Gt, Relation::Ge};
    n.op = g.pick(ops);
    if (ev.var.sort == Sort::Int)
        n.threshold = f.lo + g.integer(0, static_cast<int>(f.range().get_num().get_si()));
    else
        n.threshold = f.lo + f.range() * q(g.integer(1, 15), 16);
    return n;
}

inline void grow(Gen& g, const FeatureSchema& s, DecisionTree& t, int node, int depth)
{
    if (depth == 0 || (node != 0 && g.coin(0.25))) {
        t.nodes[node].leaf = g.integer(0, 1);
        return;
    }
    TreeNode split = random_split(g, s);
    int left = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    int right = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    split.left = left;
    split.right = right;
    t.nodes[node] = split;
    grow(g, s, t, left, depth - 1);
    grow(g, s, t, right, depth - 1);
    if (t.nodes[left].is_leaf() && t.nodes[right].is_leaf() && *t.nodes[left].leaf == *t.nodes[right].leaf)
        t.nodes[right].leaf = 1 - *t.nodes[left].leaf;
}

inline DecisionTree random_tree(Gen& g, const FeatureSchema& s, int depth)
{
    DecisionTree t;
    t.nodes.emplace_back();
    grow(g, s, t, 0, depth);
    return t;
}

// Both labels occur on valid encoded inputs inside the schema ranges.
inline bool both_labels(const ModelSpec& spec)
{
    CompiledModel m = compile_model(spec);
    RawInstance anchor;
    for (const auto& f : spec.schema.features())
        anchor.push_back(f.kind == FeatureKind::Categorical ? Rational(0) : f.lo);
    Formula valid = plausibility_formula(spec.schema, anchor) && m.phi;
    for (int y : {0, 1})
        if (!check_sat(valid && eq(LinearExpr::variable(m.output), y)).sat())
            return false;
    return true;
}

inline ModelSpec random_tree_model(Gen& g, const FeatureSchema& s, int depth)
{
    for (;;) {
        ModelSpec spec{s, random_tree(g, s, depth)};
        if (both_labels(spec))
            return spec;
    }
}

inline ModelSpec random_forest_model(Gen& g, const FeatureSchema& s, int trees, int depth)
{
    for (;;) {
        RandomForest f;
        for (int i = 0; i < trees; ++i)
            f.trees.push_back(random_tree(g, s, depth));
        f.tie_label = g.integer(0, 1);
        ModelSpec spec{s, f};
        if (both_labels(spec))
            return spec;
    }
}

inline ModelSpec random_lr_model(Gen& g, const FeatureSchema& s)
{
    LogisticRegression lr;
    for (std::size_t i = 0; i < s.encoded_size(); ++i)
        lr.weights.push_back(g.rational(-3, 3, 4));
    lr.bias = g.rational(-2, 2, 4);
    return ModelSpec{s, lr};
}

inline ModelSpec random_mlp_model(Gen& g, const FeatureSchema& s, std::vector<int> hidden)
{
    Mlp m;
    std::size_t inputs = s.encoded_size();
    hidden.push_back(1);
    for (int width : hidden) {
        DenseLayer layer;
        for (int o = 0; o < width; ++o) {
            std::vector<Rational> row;
            for (std::size_t i = 0; i < inputs; ++i)
                row.push_back(g.rational(-2, 2, 4));
            layer.weights.push_back(row);
            layer.bias.push_back(g.rational(-1, 1, 4));
        }
        m.layers.push_back(layer);
        inputs = static_cast<std::size_t>(width);
    }
    return ModelSpec{s, m};
}

// Rows drawn from random_instance, labelled by the model.
inline Dataset synthetic_dataset(Gen& g, const ModelSpec& model, std::size_t rows, int den = 8)
{
    Dataset d;
    d.schema = model.schema;
    for (std::size_t i = 0; i < rows; ++i) {
        RawInstance x = random_instance(g, model.schema, den);
        d.labels.push_back(predict(model, encode_instance(model.schema, x)));
        d.rows.push_back(std::move(x));
    }
    return d;
}

} // namespace cfsat::testing
