#include "cfsat/model.hpp"

#include "cfsat/errors.hpp"
#include "overloaded.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace cfsat {

using json = nlohmann::json;

std::string_view model_kind_name(ModelKind k)
{
    switch (k) {
    case ModelKind::DecisionTree: return "decision-tree";
    case ModelKind::RandomForest: return "random-forest";
    case ModelKind::LogisticRegression: return "logistic-regression";
    case ModelKind::MlpRelu: return "mlp-relu";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view s)
{
    if (s == "decision-tree")
        return ModelKind::DecisionTree;
    if (s == "random-forest")
        return ModelKind::RandomForest;
    if (s == "logistic-regression")
        return ModelKind::LogisticRegression;
    if (s == "mlp-relu")
        return ModelKind::MlpRelu;
    throw ParseError("unknown model kind '" + std::string(s) + "'");
}

std::size_t DecisionTree::leaf_count() const
{
    std::size_t n = 0;
    for (const auto& node : nodes)
        n += node.is_leaf() ? 1 : 0;
    return n;
}

ModelKind ModelSpec::kind() const
{
    return std::visit(overloaded{
                          [](const DecisionTree&) { return ModelKind::DecisionTree; },
                          [](const RandomForest&) { return ModelKind::RandomForest; },
                          [](const LogisticRegression&) { return ModelKind::LogisticRegression; },
                          [](const Mlp&) { return ModelKind::MlpRelu; },
                      },
                      params);
}

// ---------------------------------------------------------------- validation

namespace {

void validate_tree(const DecisionTree& tree, const FeatureSchema& schema, const std::string& where)
{
    if (tree.nodes.empty())
        throw ValidationError(where + ": tree has no nodes");
    std::vector<int> state(tree.nodes.size(), 0); // 0 unseen, 1 on stack, 2 done
    std::vector<std::pair<int, bool>> stack{{0, false}};
    while (!stack.empty()) {
        auto [i, exiting] = stack.back();
        stack.pop_back();
        if (exiting) {
            state[static_cast<std::size_t>(i)] = 2;
            continue;
        }
        if (state[static_cast<std::size_t>(i)] != 0)
            throw ValidationError(where + ": node " + std::to_string(i) + " is reachable twice (cycle or shared child)");
        state[static_cast<std::size_t>(i)] = 1;
        const auto& node = tree.nodes[static_cast<std::size_t>(i)];
        if (node.is_leaf()) {
            if (*node.leaf != 0 && *node.leaf != 1)
                throw ValidationError(where + ": leaf label must be 0 or 1");
            state[static_cast<std::size_t>(i)] = 2;
            continue;
        }
        if (!schema.find_encoded(node.feature))
            throw ValidationError(where + ": split on unknown variable '" + node.feature + "'");
        for (int child : {node.left, node.right})
            if (child < 0 || static_cast<std::size_t>(child) >= tree.nodes.size())
                throw ValidationError(where + ": node " + std::to_string(i) + " has an invalid child index");
        stack.push_back({i, true});
        stack.push_back({node.right, false});
        stack.push_back({node.left, false});
    }
}

} // namespace

void validate_model(const ModelSpec& spec)
{
    const auto& schema = spec.schema;
    const std::size_t n = schema.encoded_size();
    std::visit(overloaded{
                   [&](const DecisionTree& t) { validate_tree(t, schema, "decision tree"); },
                   [&](const RandomForest& f) {
                       if (f.trees.empty())
                           throw ValidationError("random forest has no trees");
                       if (f.tie_label != 0 && f.tie_label != 1)
                           throw ValidationError("forest tie label must be 0 or 1");
                       for (std::size_t i = 0; i < f.trees.size(); ++i)
                           validate_tree(f.trees[i], schema, "tree " + std::to_string(i));
                   },
                   [&](const LogisticRegression& lr) {
                       if (lr.weights.size() != n)
                           throw ValidationError("logistic regression has " + std::to_string(lr.weights.size()) +
                                                 " weights for " + std::to_string(n) + " encoded inputs");
                   },
                   [&](const Mlp& m) {
                       if (m.layers.empty())
                           throw ValidationError("MLP has no layers");
                       std::size_t width = n;
                       for (std::size_t l = 0; l < m.layers.size(); ++l) {
                           const auto& layer = m.layers[l];
                           std::string where = "MLP layer " + std::to_string(l);
                           if (layer.weights.empty())
                               throw ValidationError(where + ": dimension mismatch, layer has width 0");
                           if (layer.bias.size() != layer.weights.size())
                               throw ValidationError(where + ": dimension mismatch between weights and bias");
                           for (const auto& row : layer.weights)
                               if (row.size() != width)
                                   throw ValidationError(where + ": dimension mismatch, expected " +
                                                         std::to_string(width) + " inputs per row");
                           width = layer.weights.size();
                       }
                       if (width != 1)
                           throw ValidationError("MLP output layer must have exactly one neuron");
                   },
               },
               spec.params);
}

// ---------------------------------------------------------------- JSON

namespace {

Rational number(const json& j, const std::string& where)
{
    if (j.is_string())
        return parse_rational(j.get<std::string>());
    if (j.is_number_integer())
        return Rational(j.get<long>());
    if (j.is_number_unsigned())
        return Rational(j.get<unsigned long>());
    if (j.is_number_float())
        return rational_from_double(j.get<double>());
    throw ParseError(where + ": expected a decimal string");
}

const json& field(const json& obj, const char* key, const std::string& where)
{
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError(where + ": missing field '" + key + "'");
    return obj.at(key);
}

std::string text(const json& obj, const char* key, const std::string& where)
{
    const auto& v = field(obj, key, where);
    if (!v.is_string())
        throw ParseError(where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

Relation parse_op(const std::string& op)
{
    if (op == "==" || op == "=")
        return Relation::Eq;
    if (op == "!=")
        return Relation::Ne;
    if (op == "<")
        return Relation::Lt;
    if (op == "<=")
        return Relation::Le;
    if (op == ">")
        return Relation::Gt;
    if (op == ">=")
        return Relation::Ge;
    throw ParseError("unknown comparison '" + op + "'");
}

std::string op_text(Relation r) { return r == Relation::Eq ? "==" : std::string(relation_symbol(r)); }

FeatureSpec parse_feature(const json& j, std::size_t index)
{
    std::string where = "feature " + std::to_string(index);
    FeatureSpec f;
    f.name = text(j, "name", where);
    where = "feature '" + f.name + "'";
    f.kind = parse_kind(text(j, "kind", where));
    if (j.contains("encoding"))
        f.encoding = parse_encoding(text(j, "encoding", where));
    if (j.contains("actionability"))
        f.actionability = parse_actionability(text(j, "actionability", where));
    if (j.contains("categories")) {
        for (const auto& c : j.at("categories")) {
            if (!c.is_string())
                throw ParseError(where + ": categories must be strings");
            f.categories.push_back(c.get<std::string>());
        }
    }
    if (j.contains("levels"))
        f.levels = field(j, "levels", where).get<int>();

    switch (f.kind) {
    case FeatureKind::Categorical:
        f.lo = 0;
        f.hi = static_cast<long>(f.categories.size()) - 1;
        break;
    case FeatureKind::Binary:
        f.lo = 0;
        f.hi = 1;
        break;
    case FeatureKind::Ordinal:
        f.lo = 1;
        f.hi = f.levels;
        break;
    default:
        if (!j.contains("range"))
            throw ParseError(where + ": numerical features need a range");
    }
    if (j.contains("range") && f.kind != FeatureKind::Categorical) {
        const auto& r = j.at("range");
        if (!r.is_array() || r.size() != 2)
            throw ParseError(where + ": range must be [lo, hi]");
        f.lo = number(r[0], where);
        f.hi = number(r[1], where);
    }
    return f;
}

json feature_json(const FeatureSpec& f)
{
    json j;
    j["name"] = f.name;
    j["kind"] = kind_name(f.kind);
    if (f.kind != FeatureKind::Categorical)
        j["range"] = json::array({to_string(f.lo), to_string(f.hi)});
    if (f.kind == FeatureKind::Categorical)
        j["categories"] = f.categories;
    if (f.kind == FeatureKind::Ordinal)
        j["levels"] = f.levels;
    j["encoding"] = encoding_name(f.encoding);
    j["actionability"] = actionability_name(f.actionability);
    return j;
}

FeatureSchema schema_from_json(const json& j)
{
    const auto& features = field(j, "features", "schema");
    if (!features.is_array())
        throw ParseError("schema: 'features' must be an array");
    std::vector<FeatureSpec> specs;
    for (std::size_t i = 0; i < features.size(); ++i)
        specs.push_back(parse_feature(features[i], i));
    std::string label = j.contains("label") ? text(j, "label", "schema") : std::string("label");
    return FeatureSchema(std::move(specs), std::move(label));
}

json schema_json(const FeatureSchema& schema)
{
    json j;
    j["label"] = schema.label();
    j["features"] = json::array();
    for (const auto& f : schema.features())
        j["features"].push_back(feature_json(f));
    return j;
}

DecisionTree tree_from_json(const json& j, const std::string& where)
{
    const auto& nodes = field(j, "nodes", where);
    if (!nodes.is_array())
        throw ParseError(where + ": 'nodes' must be an array");
    DecisionTree tree;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        std::string nw = where + " node " + std::to_string(i);
        TreeNode node;
        if (n.contains("leaf")) {
            node.leaf = field(n, "leaf", nw).get<int>();
        } else {
            node.feature = text(n, "feature", nw);
            node.op = parse_op(text(n, "op", nw));
            node.threshold = number(field(n, "threshold", nw), nw);
            node.left = field(n, "left", nw).get<int>();
            node.right = field(n, "right", nw).get<int>();
        }
        tree.nodes.push_back(std::move(node));
    }
    return tree;
}

json tree_json(const DecisionTree& tree)
{
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) {
            nodes.push_back({{"leaf", *n.leaf}});
        } else {
            nodes.push_back({{"feature", n.feature},
                             {"op", op_text(n.op)},
                             {"threshold", to_string(n.threshold)},
                             {"left", n.left},
                             {"right", n.right}});
        }
    }
    return {{"nodes", nodes}};
}

std::vector<Rational> vector_from_json(const json& j, const std::string& where)
{
    if (!j.is_array())
        throw ParseError(where + ": expected an array");
    std::vector<Rational> out;
    out.reserve(j.size());
    for (const auto& x : j)
        out.push_back(number(x, where));
    return out;
}

json vector_json(const std::vector<Rational>& v)
{
    json out = json::array();
    for (const auto& x : v)
        out.push_back(to_string(x));
    return out;
}

json parse_document(std::string_view document)
{
    try {
        return json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
}

} // namespace

FeatureSchema parse_schema(std::string_view document)
{
    try {
        return schema_from_json(parse_document(document));
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema: ") + e.what());
    }
}

std::string emit_schema(const FeatureSchema& schema) { return schema_json(schema).dump(2) + "\n"; }

ModelSpec parse_model(std::string_view document)
{
    json doc = parse_document(document);
    try {
        if (!doc.is_object())
            throw ParseError("model document must be a JSON object");
        const auto& version = field(doc, "version", "document");
        if (!version.is_number_integer() || version.get<int>() != 1)
            throw ParseError("unsupported interchange version (expected 1)");
        FeatureSchema schema = schema_from_json(field(doc, "schema", "document"));
        const auto& m = field(doc, "model", "document");
        ModelKind kind = parse_model_kind(text(m, "kind", "model"));

        ModelSpec spec{std::move(schema), DecisionTree{}};
        switch (kind) {
        case ModelKind::DecisionTree: spec.params = tree_from_json(m, "decision tree"); break;
        case ModelKind::RandomForest: {
            RandomForest forest;
            const auto& trees = field(m, "trees", "random forest");
            if (!trees.is_array())
                throw ParseError("random forest: 'trees' must be an array");
            for (std::size_t i = 0; i < trees.size(); ++i)
                forest.trees.push_back(tree_from_json(trees[i], "tree " + std::to_string(i)));
            if (m.contains("vote")) {
                const auto& vote = m.at("vote");
                if (vote.contains("rule") && vote.at("rule") != "majority")
                    throw ParseError("random forest: only the majority vote rule is supported");
                if (vote.contains("ties"))
                    forest.tie_label = vote.at("ties").get<int>();
            }
            spec.params = std::move(forest);
            break;
        }
        case ModelKind::LogisticRegression:
            spec.params = LogisticRegression{vector_from_json(field(m, "weights", "logistic regression"),
                                                              "logistic regression weights"),
                                             number(field(m, "bias", "logistic regression"), "bias")};
            break;
        case ModelKind::MlpRelu: {
            Mlp mlp;
            const auto& layers = field(m, "layers", "mlp");
            if (!layers.is_array())
                throw ParseError("mlp: 'layers' must be an array");
            for (std::size_t l = 0; l < layers.size(); ++l) {
                std::string where = "mlp layer " + std::to_string(l);
                DenseLayer layer;
                const auto& w = field(layers[l], "weights", where);
                if (!w.is_array())
                    throw ParseError(where + ": weights must be a matrix");
                for (const auto& row : w)
                    layer.weights.push_back(vector_from_json(row, where));
                layer.bias = vector_from_json(field(layers[l], "bias", where), where);
                mlp.layers.push_back(std::move(layer));
            }
            spec.params = std::move(mlp);
            break;
        }
        }
        validate_model(spec);
        return spec;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model document: ") + e.what());
    }
}

ModelSpec load_model(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read model file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_model(buffer.str());
}

std::string emit_model(const ModelSpec& spec)
{
    json m;
    m["kind"] = model_kind_name(spec.kind());
    std::visit(overloaded{
                   [&](const DecisionTree& t) { m["nodes"] = tree_json(t)["nodes"]; },
                   [&](const RandomForest& f) {
                       m["trees"] = json::array();
                       for (const auto& t : f.trees)
                           m["trees"].push_back(tree_json(t));
                       m["vote"] = {{"rule", "majority"}, {"ties", f.tie_label}};
                   },
                   [&](const LogisticRegression& lr) {
                       m["weights"] = vector_json(lr.weights);
                       m["bias"] = to_string(lr.bias);
                   },
                   [&](const Mlp& mlp) {
                       m["layers"] = json::array();
                       for (const auto& layer : mlp.layers) {
                           json w = json::array();
                           for (const auto& row : layer.weights)
                               w.push_back(vector_json(row));
                           m["layers"].push_back({{"weights", w}, {"bias", vector_json(layer.bias)}});
                       }
                   },
               },
               spec.params);
    json doc;
    doc["version"] = 1;
    doc["schema"] = schema_json(spec.schema);
    doc["model"] = m;
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------- programs

namespace {

// sum_i w_i * x_i + b, skipping zero weights; unit weights stay bare variables.
Expr affine(std::span<const Rational> weights, std::span<const std::string> vars, const Rational& bias)
{
    Expr acc;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Rational& w = weights[i];
        if (w == 0)
            continue;
        Expr x = ir::var(vars[i]);
        if (!acc) {
            acc = w == 1 ? x : w == -1 ? ir::neg(x) : ir::mul(ir::constant(w), x);
        } else if (w == 1) {
            acc = ir::add(acc, x);
        } else if (w == -1) {
            acc = ir::sub(acc, x);
        } else if (w < 0) {
            acc = ir::sub(acc, ir::mul(ir::constant(-w), x));
        } else {
            acc = ir::add(acc, ir::mul(ir::constant(w), x));
        }
    }
    if (!acc)
        return ir::constant(bias);
    if (bias > 0)
        return ir::add(acc, ir::constant(bias));
    if (bias < 0)
        return ir::sub(acc, ir::constant(-bias));
    return acc;
}

Command tree_command(const DecisionTree& tree, int index, const std::string& target)
{
    const auto& node = tree.nodes[static_cast<std::size_t>(index)];
    if (node.is_leaf())
        return ir::assign(target, ir::constant(*node.leaf));
    return ir::if_then_else(ir::cmp(ir::var(node.feature), node.op, ir::constant(node.threshold)),
                            tree_command(tree, node.left, target), tree_command(tree, node.right, target));
}

Command threshold_return(Expr value, Relation rel, Expr bound)
{
    return ir::if_then_else(ir::cmp(std::move(value), rel, std::move(bound)), ir::ret(ir::constant(1)),
                            ir::ret(ir::constant(0)));
}

} // namespace

Program build_program(const ModelSpec& spec)
{
    validate_model(spec);
    Program p;
    p.inputs = spec.schema.input_vars();
    p.output_sort = Sort::Bool;
    std::vector<std::string> names;
    for (const auto& v : p.inputs)
        names.push_back(v.name);

    p.body = std::visit(
        overloaded{
            [&](const DecisionTree& t) { return ir::seq({tree_command(t, 0, "y"), ir::ret(ir::var("y"))}); },
            [&](const RandomForest& f) {
                const int trees = static_cast<int>(f.trees.size());
                // if i == 1 then tree_1 else if i == 2 then tree_2 ... else tree_T
                Command chain = tree_command(f.trees.back(), 0, "t");
                for (int i = trees - 1; i >= 1; --i)
                    chain = ir::if_then_else(ir::cmp(ir::var("i"), Relation::Eq, ir::constant(i)),
                                             tree_command(f.trees[static_cast<std::size_t>(i - 1)], 0, "t"), chain);
                Command body = ir::seq({chain, ir::assign("s", ir::add(ir::var("s"), ir::var("t")))});
                Relation vote = f.tie_label == 1 ? Relation::Ge : Relation::Gt;
                return ir::seq({ir::assign("s", ir::constant(0)), ir::for_loop("i", trees, body),
                                threshold_return(ir::mul(ir::constant(2), ir::var("s")), vote,
                                                 ir::constant(trees))});
            },
            [&](const LogisticRegression& lr) {
                return threshold_return(affine(lr.weights, names, lr.bias), Relation::Ge, ir::constant(0));
            },
            [&](const Mlp& m) {
                std::vector<Command> cmds;
                std::vector<std::string> current = names;
                for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
                    const auto& layer = m.layers[l];
                    std::vector<std::string> next;
                    for (std::size_t i = 0; i < layer.outputs(); ++i) {
                        std::string suffix = std::to_string(l + 1) + "_" + std::to_string(i + 1);
                        cmds.push_back(ir::assign("z" + suffix, affine(layer.weights[i], current, layer.bias[i])));
                    }
                    for (std::size_t i = 0; i < layer.outputs(); ++i) {
                        std::string suffix = std::to_string(l + 1) + "_" + std::to_string(i + 1);
                        cmds.push_back(ir::if_then_else(
                            ir::cmp(ir::var("z" + suffix), Relation::Ge, ir::constant(0)),
                            ir::assign("h" + suffix, ir::var("z" + suffix)),
                            ir::assign("h" + suffix, ir::constant(0))));
                        next.push_back("h" + suffix);
                    }
                    current = std::move(next);
                }
                const auto& out = m.layers.back();
                cmds.push_back(ir::assign("z_out", affine(out.weights[0], current, out.bias[0])));
                cmds.push_back(threshold_return(ir::var("z_out"), Relation::Ge, ir::constant(0)));
                return ir::seq(std::move(cmds));
            },
        },
        spec.params);
    check_well_formed(p);
    return p;
}

namespace {

int predict_tree(const DecisionTree& tree, const FeatureSchema& schema, std::span<const Rational> x)
{
    std::size_t i = 0;
    for (std::size_t steps = 0; steps <= tree.nodes.size(); ++steps) {
        const auto& node = tree.nodes[i];
        if (node.is_leaf())
            return *node.leaf;
        auto idx = schema.find_encoded(node.feature);
        bool go_left = compare(x[*idx], node.op, node.threshold);
        i = static_cast<std::size_t>(go_left ? node.left : node.right);
    }
    throw ValidationError("tree traversal did not terminate");
}

} // namespace

int predict(const ModelSpec& spec, std::span<const Rational> x)
{
    if (x.size() != spec.schema.encoded_size())
        throw EvaluationError("input has " + std::to_string(x.size()) + " coordinates, model expects " +
                              std::to_string(spec.schema.encoded_size()));
    return std::visit(overloaded{
                          [&](const DecisionTree& t) { return predict_tree(t, spec.schema, x); },
                          [&](const RandomForest& f) {
                              long votes = 0;
                              for (const auto& t : f.trees)
                                  votes += predict_tree(t, spec.schema, x);
                              long twice = 2 * votes;
                              long trees = static_cast<long>(f.trees.size());
                              return (f.tie_label == 1 ? twice >= trees : twice > trees) ? 1 : 0;
                          },
                          [&](const LogisticRegression& lr) {
                              Rational s = lr.bias;
                              for (std::size_t i = 0; i < x.size(); ++i)
                                  s += lr.weights[i] * x[i];
                              return s >= 0 ? 1 : 0;
                          },
                          [&](const Mlp& m) {
                              std::vector<Rational> a(x.begin(), x.end());
                              for (std::size_t l = 0; l < m.layers.size(); ++l) {
                                  const auto& layer = m.layers[l];
                                  std::vector<Rational> next(layer.outputs());
                                  for (std::size_t i = 0; i < layer.outputs(); ++i) {
                                      Rational s = layer.bias[i];
                                      for (std::size_t k = 0; k < a.size(); ++k)
                                          s += layer.weights[i][k] * a[k];
                                      bool hidden = l + 1 < m.layers.size();
                                      next[i] = hidden && s < 0 ? Rational(0) : s;
                                  }
                                  a = std::move(next);
                              }
                              return a[0] >= 0 ? 1 : 0;
                          },
                      },
                      spec.params);
}

} // namespace cfsat
