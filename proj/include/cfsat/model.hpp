#pragma once

#include "cfsat/program.hpp"
#include "cfsat/schema.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cfsat {

// Split node: go left when `encoded[feature] op threshold` holds. Leaf nodes
// carry a label instead.
struct TreeNode {
    std::string feature;
    Relation op = Relation::Le;
    Rational threshold;
    int left = -1;
    int right = -1;
    std::optional<int> leaf;

    bool is_leaf() const { return leaf.has_value(); }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Node 0 is the root.
struct DecisionTree {
    std::vector<TreeNode> nodes;

    std::size_t leaf_count() const;
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

// y = 1 iff 2 * (number of trees voting 1) >= T when ties go to 1,
// > T when ties go to 0.
struct RandomForest {
    std::vector<DecisionTree> trees;
    int tie_label = 1;

    friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

// y = 1 iff w . x + b >= 0 (the 0.5-probability boundary of the sigmoid).
struct LogisticRegression {
    std::vector<Rational> weights; // one per encoded variable
    Rational bias;

    friend bool operator==(const LogisticRegression&, const LogisticRegression&) = default;
};

struct DenseLayer {
    std::vector<std::vector<Rational>> weights; // [output][input], row-major
    std::vector<Rational> bias;

    std::size_t outputs() const { return weights.size(); }
    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// ReLU on hidden layers; the single output neuron is thresholded at 0.
struct Mlp {
    std::vector<DenseLayer> layers;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

enum class ModelKind { DecisionTree, RandomForest, LogisticRegression, MlpRelu };

std::string_view model_kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ModelSpec {
    FeatureSchema schema;
    std::variant<DecisionTree, RandomForest, LogisticRegression, Mlp> params;

    ModelKind kind() const;
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Checks parameters against the schema: split features name encoded
// variables, child indices are valid and acyclic, leaf labels are 0/1, weight
// shapes match, no layer of width 0. Throws ValidationError.
void validate_model(const ModelSpec& spec);

// Interchange document (version 1). Numbers are decimal strings read as exact
// rationals. Throws ParseError / ValidationError.
ModelSpec parse_model(std::string_view document);
ModelSpec load_model(const std::string& path);
std::string emit_model(const ModelSpec& spec);

// Schema object of the interchange format, usable on its own as a dataset
// schema file.
FeatureSchema parse_schema(std::string_view document);
std::string emit_schema(const FeatureSchema& schema);

// Program computing the model: nested conditionals for trees, an unrolled-on-
// demand loop summing votes for forests, a threshold for logistic regression,
// straight-line code with ReLU conditionals for MLPs.
Program build_program(const ModelSpec& spec);

// Direct evaluation of the model's mathematical definition (tree traversal,
// vote, threshold, forward pass) in exact arithmetic.
int predict(const ModelSpec& spec, std::span<const Rational> encoded);

} // namespace cfsat
