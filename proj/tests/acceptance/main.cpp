// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit status 1 on
// any FAIL.

#include "cfsat/errors.hpp"
#include "cfsat/harness.hpp"
#include "cfsat/search.hpp"
#include "cfsat/smtlib.hpp"

#include "../support/formulae.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace cfsat;
using namespace cfsat::testing;

namespace {

// ---------------------------------------------------------------- tolerances

constexpr int kSoundnessInputs = 1000;
constexpr int kRandomModelsPerKind = 20;
constexpr double kSoundnessSeconds = 60;

constexpr int kOptimalitySamples = 100;
constexpr long kGridSteps = 1000; // grid resolution 1/1000 of each range
const Rational kGridTolerance(1, 1000);
constexpr double kOptimalitySeconds = 300;

constexpr std::size_t kCoverageRows = 400;
constexpr std::size_t kCoverageSamples = 12;
constexpr double kRequiredCoverage = 100.0;
const Rational kBatchEpsilon(1, 1000);

constexpr int kConstraintSamples = 40;
constexpr int kDiverseSamples = 20;
constexpr int kDiverseK = 3;

constexpr int kDifferentialFormulae = 500;
constexpr int kExternalFormulae = 200;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Check {
    enum { Pass, Fail, Skip } state = Pass;
    std::string detail;
};

Check fail(std::string why) { return {Check::Fail, std::move(why)}; }

std::string fixed2(double v)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

// Every search of the suite reports here.
struct CallLog {
    std::size_t searches = 0;
    std::size_t over_bound = 0;
    std::string first_violation;

    void add(const SearchResult& r, const Rational& eps)
    {
        ++searches;
        int bound = call_bound(eps);
        if (static_cast<int>(r.calls.size()) > bound) {
            if (over_bound++ == 0)
                first_violation = std::to_string(r.calls.size()) + " calls at epsilon " + to_string(eps) +
                                  " (bound " + std::to_string(bound) + ", distance " + to_string(r.distance) + ")";
        }
    }
};

CallLog calls;

SearchConfig config_for(const Rational& eps)
{
    SearchConfig c;
    c.epsilon = eps;
    return c;
}

// Linear models and networks can be constant on valid inputs; such a model
// has no counterfactual at all.
ModelSpec live_lr(Gen& g, const FeatureSchema& s)
{
    for (;;)
        if (ModelSpec m = random_lr_model(g, s); both_labels(m))
            return m;
}

ModelSpec live_mlp(Gen& g, const FeatureSchema& s, std::vector<int> hidden)
{
    for (;;)
        if (ModelSpec m = random_mlp_model(g, s, hidden); both_labels(m))
            return m;
}

const std::vector<NormPreset> kNorms{NormPreset::L0, NormPreset::L1, NormPreset::Linf, NormPreset::Combined};

// ---------------------------------------------------------------- soundness

Check compiler_soundness()
{
    auto start = Clock::now();
    Gen g(101);
    std::vector<ModelSpec> models{load_model(data_path("toy_tree.json")), load_model(data_path("toy_mlp.json"))};
    for (int i = 0; i < kRandomModelsPerKind; ++i) {
        SchemaShape shape{g.integer(1, 3), g.integer(0, 1), g.integer(0, 1), g.integer(0, 1), g.integer(0, 1)};
        FeatureSchema s = random_schema(g, shape);
        models.push_back(random_tree_model(g, s, 4));
        models.push_back(random_forest_model(g, s, 3, 3));
        models.push_back(random_lr_model(g, s));
        models.push_back(random_mlp_model(g, s, {3}));
    }
    std::size_t inputs = 0;
    for (const ModelSpec& spec : models) {
        CompiledModel m = compile_model(spec);
        LinearExpr y = LinearExpr::variable(m.output);
        for (int i = 0; i < kSoundnessInputs; ++i) {
            EncodedVector x = encode_instance(spec.schema, random_instance(g, spec.schema, 16));
            Assignment fixed;
            for (std::size_t k = 0; k < x.size(); ++k)
                fixed[spec.schema.encoded()[k].var.name] = x[k];
            Rational label = evaluate_program(m.program, std::span<const Rational>(x));
            if (label != predict(spec, x))
                return fail("interpreter and predict disagree on a " + std::string(model_kind_name(spec.kind())));
            Formula phi = substitute(m.phi, fixed);
            if (!check_sat(phi && eq(y, label)).sat())
                return fail("formula rejects the evaluated label of a " + std::string(model_kind_name(spec.kind())));
            if (check_sat(phi && eq(y, Rational(1 - label))).sat())
                return fail("formula admits the flipped label of a " + std::string(model_kind_name(spec.kind())));
            ++inputs;
        }
    }
    double t = seconds_since(start);
    if (t >= kSoundnessSeconds)
        return fail("took " + fixed2(t) + " s");
    return {Check::Pass, std::to_string(models.size()) + " models, " + std::to_string(inputs) + " inputs, " +
                               fixed2(t) + " s"};
}

// ---------------------------------------------------------------- grid oracle

// Real features on [0, R] take values R*k/kGridSteps. Real coordinates are
// held in half grid units (2k) so half-step tree thresholds compare exactly.
struct GridModel {
    ModelSpec spec;
    std::vector<int> real_ranges;  // R per real feature, features 0..n-1
    bool nominal = false;          // last feature
    int categories = 0;            // 2 = binary, 3 = one-hot categorical

    struct Node {
        int coord = -1;
        Relation op = Relation::Le;
        long threshold = 0;
        int left = -1, right = -1, leaf = -1;
    };
    std::vector<Node> tree;
    std::vector<long> weights; // per encoded coordinate, in score units
    long bias = 0;
    bool is_tree = true;

    // coords: real coordinates in half units, then nominal coordinates.
    int eval(const std::vector<long>& coords) const
    {
        if (!is_tree) {
            long s = bias;
            for (std::size_t i = 0; i < coords.size(); ++i)
                s += weights[i] * coords[i];
            return s >= 0 ? 1 : 0;
        }
        int i = 0;
        while (tree[static_cast<std::size_t>(i)].leaf < 0) {
            const Node& n = tree[static_cast<std::size_t>(i)];
            long v = coords[static_cast<std::size_t>(n.coord)];
            bool go = compare(Rational(v), n.op, Rational(n.threshold));
            i = go ? n.left : n.right;
        }
        return tree[static_cast<std::size_t>(i)].leaf;
    }

    std::size_t reals() const { return real_ranges.size(); }

    std::vector<long> coords(const std::vector<long>& ks, int category) const
    {
        std::vector<long> c;
        for (long k : ks)
            c.push_back(2 * k);
        if (nominal) {
            if (categories == 2)
                c.push_back(category);
            else
                for (int v = 0; v < categories; ++v)
                    c.push_back(v == category ? 1 : 0);
        }
        return c;
    }

    RawInstance raw(const std::vector<long>& ks, int category) const
    {
        RawInstance x;
        for (std::size_t j = 0; j < ks.size(); ++j)
            x.push_back(q(real_ranges[j] * ks[j], kGridSteps));
        if (nominal)
            x.emplace_back(category);
        return x;
    }
};

FeatureSchema grid_schema(Gen& g, GridModel& gm)
{
    static const std::vector<int> ranges{1, 2, 5, 10};
    std::vector<FeatureSpec> fs;
    const int reals = 2;
    for (int j = 0; j < reals; ++j) {
        int r = g.pick(ranges);
        gm.real_ranges.push_back(r);
        fs.push_back(FeatureSpec{"r" + std::to_string(j), FeatureKind::Real, 0, r});
    }
    if (gm.nominal) {
        if (gm.categories == 2)
            fs.push_back(FeatureSpec{"b", FeatureKind::Binary, 0, 1});
        else
            fs.push_back(FeatureSpec{"c", FeatureKind::Categorical, 0, 2, {"u", "v", "w"}, 0, Encoding::OneHot});
    }
    return FeatureSchema(fs);
}

void grow_grid_tree(Gen& g, GridModel& gm, DecisionTree& t, int node, int depth)
{
    const FeatureSchema& s = gm.spec.schema;
    if (depth == 0 || (node != 0 && g.coin(0.25))) {
        int leaf = g.integer(0, 1);
        t.nodes[static_cast<std::size_t>(node)].leaf = leaf;
        gm.tree[static_cast<std::size_t>(node)].leaf = leaf;
        return;
    }
    int coord = static_cast<int>(g.index(s.encoded_size()));
    TreeNode n;
    GridModel::Node native;
    n.feature = s.encoded()[static_cast<std::size_t>(coord)].var.name;
    native.coord = coord;
    if (static_cast<std::size_t>(coord) < gm.reals()) {
        static const std::vector<Relation> ops{Relation::Le, Relation::Lt, Relation::Gt, Relation::Ge};
        long m = g.integer(0, static_cast<int>(kGridSteps) - 1);
        n.op = native.op = g.pick(ops);
        n.threshold = q(gm.real_ranges[static_cast<std::size_t>(coord)] * (2 * m + 1), 2 * kGridSteps);
        native.threshold = 2 * m + 1;
    } else {
        n.op = native.op = Relation::Eq;
        int t01 = g.integer(0, 1);
        n.threshold = t01;
        native.threshold = t01;
    }
    int left = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    gm.tree.emplace_back();
    int right = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    gm.tree.emplace_back();
    n.left = native.left = left;
    n.right = native.right = right;
    t.nodes[static_cast<std::size_t>(node)] = n;
    gm.tree[static_cast<std::size_t>(node)] = native;
    grow_grid_tree(g, gm, t, left, depth - 1);
    grow_grid_tree(g, gm, t, right, depth - 1);
    auto& l = gm.tree[static_cast<std::size_t>(left)];
    auto& r = gm.tree[static_cast<std::size_t>(right)];
    if (l.leaf >= 0 && r.leaf >= 0 && l.leaf == r.leaf) {
        r.leaf = 1 - l.leaf;
        t.nodes[static_cast<std::size_t>(right)].leaf = r.leaf;
    }
}

GridModel random_grid_model(Gen& g, bool tree)
{
    for (;;) {
        GridModel gm;
        gm.nominal = g.coin();
        gm.categories = g.coin() ? 2 : 3;
        gm.is_tree = tree;
        FeatureSchema s = grid_schema(g, gm);
        gm.spec.schema = s;
        if (tree) {
            DecisionTree t;
            t.nodes.emplace_back();
            gm.tree.emplace_back();
            grow_grid_tree(g, gm, t, 0, g.integer(1, 3));
            gm.spec.params = t;
        } else {
            // 1000 * score = sum w_j R_j k_j + sum w_c 1000 v_c + B, so with
            // real coordinates in half units the weights are w_j R_j / 2
            // after doubling everything.
            LogisticRegression lr;
            std::vector<long> ks;
            for (std::size_t j = 0; j < gm.reals(); ++j)
                ks.push_back(g.integer(0, static_cast<int>(kGridSteps)));
            int cat = gm.nominal ? g.integer(0, gm.categories - 1) : 0;
            std::vector<long> anchor = gm.coords(ks, cat);
            long through = 0;
            for (std::size_t i = 0; i < s.encoded_size(); ++i) {
                int w = g.integer(-3, 3);
                if (i < gm.reals() && w == 0)
                    w = 1;
                lr.weights.emplace_back(w);
                // doubled score units: 2000 * score
                long unit = i < gm.reals() ? static_cast<long>(gm.real_ranges[i]) : 2000L;
                gm.weights.push_back(w * unit);
                through += w * unit * anchor[i];
            }
            long b = -through + g.integer(-50, 50);
            gm.bias = b;
            lr.bias = q(b, 2000);
            gm.spec.params = lr;
        }
        if (both_labels(gm.spec))
            return gm;
    }
}

struct GridOptimum {
    bool found = false;
    Rational distance;
    RawInstance point;
};

// Exact minimum of d over flipped grid points. Per-feature deltas are kept
// in units of 1/kGridSteps, so d = numerator / denominator with integers.
GridOptimum grid_minimum(const GridModel& gm, const std::vector<long>& kh, int ch, int yhat, NormPreset norm)
{
    const long J = static_cast<long>(gm.reals() + (gm.nominal ? 1 : 0));
    const long steps = kGridSteps;
    const long den = norm == NormPreset::Combined ? 3 * steps * J : steps * J;
    long best = -1;
    std::vector<long> best_k;
    int best_c = 0;
    std::vector<long> ks(gm.reals(), 0);
    const int cats = gm.nominal ? gm.categories : 1;
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j < ks.size()) {
            for (long k = 0; k <= steps; ++k) {
                ks[j] = k;
                rec(j + 1);
            }
            return;
        }
        for (int c = 0; c < cats; ++c) {
            long changed = 0, sum = 0, mx = 0;
            for (std::size_t i = 0; i < ks.size(); ++i) {
                long a = std::labs(ks[i] - kh[i]);
                changed += a != 0;
                sum += a;
                mx = std::max(mx, a);
            }
            if (gm.nominal && c != ch) {
                ++changed;
                sum += steps;
                mx = steps;
            }
            long num = 0;
            switch (norm) {
            case NormPreset::L0: num = changed * steps; break;
            case NormPreset::L1: num = sum; break;
            case NormPreset::Linf: num = J * mx; break;
            case NormPreset::Combined: num = changed * steps + sum + J * mx; break;
            }
            if (best >= 0 && num >= best)
                continue;
            if (gm.eval(gm.coords(ks, c)) == yhat)
                continue;
            best = num;
            best_k = ks;
            best_c = c;
        }
    };
    rec(0);
    GridOptimum out;
    if (best < 0)
        return out;
    out.found = true;
    out.distance = q(best, den);
    out.point = gm.raw(best_k, best_c);
    return out;
}

Check epsilon_optimality()
{
    auto start = Clock::now();
    Gen g(202);
    int checked = 0;
    for (int sample = 0; sample < kOptimalitySamples; ++sample) {
        GridModel gm = random_grid_model(g, sample % 2 == 0);
        const FeatureSchema& s = gm.spec.schema;
        // The native evaluator must agree with the engine.
        for (int i = 0; i < 200; ++i) {
            std::vector<long> ks;
            for (std::size_t j = 0; j < gm.reals(); ++j)
                ks.push_back(g.integer(0, static_cast<int>(kGridSteps)));
            int c = gm.nominal ? g.integer(0, gm.categories - 1) : 0;
            if (gm.eval(gm.coords(ks, c)) != predict(gm.spec, encode_instance(s, gm.raw(ks, c))))
                return fail("grid evaluator disagrees with the model on sample " + std::to_string(sample));
        }
        std::vector<long> kh;
        for (std::size_t j = 0; j < gm.reals(); ++j)
            kh.push_back(g.integer(0, static_cast<int>(kGridSteps)));
        int ch = gm.nominal ? g.integer(0, gm.categories - 1) : 0;
        RawInstance factual = gm.raw(kh, ch);
        NormPreset norm = kNorms[static_cast<std::size_t>(sample) % kNorms.size()];
        DistanceConfig cfg = DistanceConfig::preset(norm);
        CompiledModel m = compile_model(gm.spec);
        CounterfactualQuery query(m, factual, cfg);
        GridOptimum opt = grid_minimum(gm, kh, ch, query.yhat(), norm);
        if (!opt.found)
            return fail("no flipped grid point on sample " + std::to_string(sample));
        if (distance_value(cfg, s, opt.point, factual) != opt.distance)
            return fail("grid distance disagrees with distance_value on sample " + std::to_string(sample));
        for (Rational eps : {Rational(1, 10), Rational(1, 1000)}) {
            SearchResult r = nearest_counterfactual(query, config_for(eps));
            calls.add(r, eps);
            Rational gap = abs(r.distance - opt.distance);
            if (gap > eps + kGridTolerance)
                return fail("sample " + std::to_string(sample) + ": |d - d_grid| = " + to_string(gap) +
                            " at epsilon " + to_string(eps));
            if (opt.distance < r.delta_min)
                return fail("sample " + std::to_string(sample) + ": grid point below delta_min " +
                            to_string(r.delta_min));
            ++checked;
        }
    }
    double t = seconds_since(start);
    if (t >= kOptimalitySeconds)
        return fail("took " + fixed2(t) + " s");
    return {Check::Pass, std::to_string(kOptimalitySamples) + " samples, " + std::to_string(checked) +
                               " searches within epsilon + 1/1000 of the grid optimum, " + fixed2(t) + " s"};
}

// ---------------------------------------------------------------- batches

struct BatchRun {
    std::string kind;
    BatchReport report;
};

std::vector<BatchRun> batch_runs()
{
    static std::vector<BatchRun> runs = [] {
        std::vector<BatchRun> out;
        Gen g(303);
        for (ModelKind kind : {ModelKind::DecisionTree, ModelKind::RandomForest, ModelKind::LogisticRegression,
                               ModelKind::MlpRelu}) {
            for (;;) {
                FeatureSchema s = random_schema(g, {2, 1, 1, 1, 1});
                ModelSpec spec;
                switch (kind) {
                case ModelKind::DecisionTree: spec = random_tree_model(g, s, 4); break;
                case ModelKind::RandomForest: spec = random_forest_model(g, s, 5, 3); break;
                case ModelKind::LogisticRegression: spec = live_lr(g, s); break;
                case ModelKind::MlpRelu: spec = live_mlp(g, s, {4}); break;
                }
                if (!both_labels(spec))
                    continue;
                Dataset data = synthetic_dataset(g, spec, kCoverageRows);
                auto negatives = std::count(data.labels.begin(), data.labels.end(), 0);
                if (negatives < static_cast<long>(kCoverageSamples) ||
                    negatives == static_cast<long>(data.labels.size()))
                    continue;
                BatchConfig cfg;
                cfg.norms = {named_norm(NormPreset::L0), named_norm(NormPreset::L1), named_norm(NormPreset::Linf)};
                cfg.epsilons = {kBatchEpsilon};
                cfg.n_samples = kCoverageSamples;
                cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
                BatchRun run{std::string(model_kind_name(kind)), run_batch(compile_model(spec), data, cfg)};
                for (const auto& rec : run.report.records)
                    if (rec.mace)
                        calls.add(*rec.mace, rec.epsilon);
                out.push_back(std::move(run));
                break;
            }
        }
        return out;
    }();
    return runs;
}

Check coverage()
{
    auto start = Clock::now();
    std::string detail;
    for (const auto& run : batch_runs()) {
        for (const auto& row : run.report.rows) {
            if (row.coverage_mace < kRequiredCoverage) {
                std::string why;
                for (const auto& rec : run.report.records)
                    if (rec.status != SampleStatus::Ok) {
                        why = std::string(status_name(rec.status)) + ": " + rec.message;
                        break;
                    }
                return fail(run.kind + " " + row.norm + " coverage " + fixed2(row.coverage_mace) + "% (" + why + ")");
            }
        }
        detail += (detail.empty() ? "" : ", ") + run.kind;
    }
    return {Check::Pass, "100% on " + detail + " (" + std::to_string(kCoverageSamples) + " samples x 3 norms, " +
                               std::to_string(kCoverageRows) + " rows), " + fixed2(seconds_since(start)) + " s"};
}

Check dominance()
{
    std::size_t compared = 0;
    double improvement = 0;
    std::size_t rows = 0;
    for (const auto& run : batch_runs()) {
        for (const auto& rec : run.report.records) {
            if (!rec.mace || !rec.mo)
                continue;
            if (rec.mace->distance > rec.mo->distance + rec.epsilon)
                return fail(run.kind + " " + rec.norm + " row " + std::to_string(rec.row) + ": " +
                            to_string(rec.mace->distance) + " > " + to_string(rec.mo->distance) + " + epsilon");
            ++compared;
        }
        for (const auto& row : run.report.rows) {
            improvement += row.improvement;
            ++rows;
        }
    }
    if (compared == 0)
        return fail("no sample had both answers");
    return {Check::Pass, std::to_string(compared) + " samples, mean improvement " +
                               fixed2(improvement / static_cast<double>(rows)) + "%"};
}

// ---------------------------------------------------------------- calls

Check oracle_calls()
{
    Gen g(404);
    std::size_t exact = 0;
    std::vector<ModelSpec> models{load_model(data_path("toy_tree.json")), load_model(data_path("toy_mlp.json"))};
    for (int i = 0; i < 20; ++i) {
        FeatureSchema s = random_schema(g, {2, 1, 1, 1, 0});
        models.push_back(i % 2 ? random_tree_model(g, s, 3) : live_lr(g, s));
    }
    for (const ModelSpec& spec : models) {
        CompiledModel m = compile_model(spec);
        CounterfactualQuery query(m, random_instance(g, spec.schema), DistanceConfig::preset(g.pick(kNorms)));
        SearchResult coarse = nearest_counterfactual(query, config_for(Rational(1, 10)));
        calls.add(coarse, Rational(1, 10));
        if (coarse.calls.size() != 4)
            return fail("epsilon 0.1 took " + std::to_string(coarse.calls.size()) + " calls");
        ++exact;
        SearchResult fine = nearest_counterfactual(query, config_for(Rational(1, 1000)));
        calls.add(fine, Rational(1, 1000));
        if (fine.calls.size() > 10)
            return fail("epsilon 0.001 took " + std::to_string(fine.calls.size()) + " calls");
    }
    if (calls.over_bound > 0)
        return fail(std::to_string(calls.over_bound) + " of " + std::to_string(calls.searches) +
                    " searches exceeded the bound, first: " + calls.first_violation);
    return {Check::Pass, std::to_string(calls.searches) + " searches within ceil(log2(1/epsilon)), " +
                               std::to_string(exact) + " at epsilon 0.1 with exactly 4"};
}

// ---------------------------------------------------------------- constraints

Check constraint_semantics()
{
    Gen g(505);
    std::size_t restricted = 0, infeasible = 0;
    for (int i = 0; i < kConstraintSamples; ++i) {
        FeatureSchema s = random_schema(g, {2, 1, 1, 1, 1});
        ModelSpec spec = i % 2 ? random_tree_model(g, s, 3) : live_lr(g, s);
        CompiledModel m = compile_model(spec);
        RawInstance x = random_instance(g, s);
        DistanceConfig d = DistanceConfig::preset(g.pick(kNorms));
        SearchConfig cfg = config_for(Rational(1, 1000));
        SearchResult free = nearest_counterfactual(CounterfactualQuery(m, x, d), cfg);
        calls.add(free, cfg.epsilon);
        std::size_t j = g.index(s.size());
        ConstraintSpec c;
        c.features[s.feature(j).name].actionability = Actionability::Immutable;
        try {
            SearchResult r = nearest_counterfactual(CounterfactualQuery(m, x, d, c), cfg);
            calls.add(r, cfg.epsilon);
            if (r.counterfactual[j] != x[j])
                return fail("immutable " + s.feature(j).name + " changed on sample " + std::to_string(i));
            if (r.delta_max < free.delta_min - cfg.epsilon)
                return fail("constrained bracket below the unconstrained one on sample " + std::to_string(i));
            ++restricted;
        } catch (const OverConstrained&) {
            ++infeasible;
        }
    }
    for (int i = 0; i < kDiverseSamples; ++i) {
        FeatureSchema s = random_schema(g, {2, 1, 1, 1, 0});
        ModelSpec spec = i % 2 ? random_tree_model(g, s, 3) : live_lr(g, s);
        CompiledModel m = compile_model(spec);
        CounterfactualQuery query(m, random_instance(g, s), DistanceConfig::preset(NormPreset::L1));
        auto list = diverse_counterfactuals(query, kDiverseK, config_for(Rational(1, 1000)));
        if (static_cast<int>(list.size()) != kDiverseK)
            return fail("only " + std::to_string(list.size()) + " diverse counterfactuals on sample " +
                        std::to_string(i));
        for (const auto& r : list)
            calls.add(r, Rational(1, 1000));
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a + 1; b < list.size(); ++b)
                if (list[a].counterfactual == list[b].counterfactual)
                    return fail("repeated counterfactual on sample " + std::to_string(i));
    }
    return {Check::Pass, std::to_string(restricted) + " restricted searches keep the feature (" +
                               std::to_string(infeasible) + " over-constrained), " + std::to_string(kDiverseSamples) +
                               " diverse triples pairwise distinct"};
}

// ---------------------------------------------------------------- solver

Check solver_differential()
{
    Gen g(606);
    std::vector<Var> ints{{"i", Sort::Int}, {"j", Sort::Int}, {"b", Sort::Bool}};
    std::vector<Var> reals{{"a", Sort::Real}, {"b", Sort::Real}, {"c", Sort::Real}};
    const auto int_grid = integer_grid(6);
    const auto real_grid = quarter_grid(3);
    std::size_t sat = 0;
    for (int n = 0; n < kDifferentialFormulae; ++n) {
        bool difference = n % 2 == 1;
        const auto& vars = difference ? reals : ints;
        Formula f = difference ? boxed(random_formula(g, vars, true, 3), vars, -3, 3)
                               : boxed(random_formula(g, vars, false, 3), {vars[0], vars[1]}, -6, 6);
        SolveOutcome o = check_sat(f);
        if (o.sat() != brute_sat(f, vars, difference ? real_grid : int_grid))
            return fail("verdict differs from enumeration on " + f.str());
        if (o.sat()) {
            ++sat;
            if (!witness_satisfies(f, o.witness))
                return fail("witness does not re-verify on " + f.str());
        }
    }
    return {Check::Pass, std::to_string(kDifferentialFormulae) + " formulae (" + std::to_string(sat) +
                               " sat), all witnesses re-verified"};
}

std::optional<ExternalBackend> find_backend()
{
    if (const char* env = std::getenv(kSolverEnv); env && *env)
        return ExternalBackend::parse(env);
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "");
    std::string dir;
    while (std::getline(dirs, dir, ':'))
        if (!dir.empty() && std::filesystem::exists(std::filesystem::path(dir) / "z3"))
            return ExternalBackend::parse("z3 -in");
    return std::nullopt;
}

Check external_agreement()
{
    auto backend = find_backend();
    if (!backend)
        return {Check::Skip, "no backend installed (set " + std::string(kSolverEnv) + ")"};
    Gen g(707);
    std::vector<Var> mixed{{"i", Sort::Int}, {"b", Sort::Bool}, {"x", Sort::Real}};
    std::vector<Var> reals{{"a", Sort::Real}, {"b", Sort::Real}, {"c", Sort::Real}};
    std::size_t sat = 0;
    for (int n = 0; n < kExternalFormulae; ++n) {
        bool difference = n % 2 == 1;
        const auto& vars = difference ? reals : mixed;
        Formula f = boxed(random_formula(g, vars, difference, 3), difference ? vars : std::vector<Var>{vars[0]}, -5, 5);
        SolveOutcome inside = check_sat(f);
        SolveOutcome outside;
        try {
            outside = solve_external(f, *backend);
        } catch (const Error& e) {
            return fail(std::string("backend error: ") + e.what());
        }
        if (inside.sat() != outside.sat())
            return fail("verdicts differ on " + f.str());
        sat += inside.sat();
    }
    return {Check::Pass, std::to_string(kExternalFormulae) + " formulae agree with " + backend->argv.front() + " (" +
                               std::to_string(sat) + " sat)"};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
        {"compiler-soundness", compiler_soundness},
        {"epsilon-optimality", epsilon_optimality},
        {"coverage", coverage},
        {"dominance-over-mo", dominance},
        {"oracle-call-bound", oracle_calls},
        {"constraint-semantics", constraint_semantics},
        {"solver-differential", solver_differential},
        {"external-backend", external_agreement},
    };
    int failures = 0;
    // Optional arguments select criteria by name.
    std::vector<std::string> only(argv + 1, argv + argc);
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end())
            continue;
        Check v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        const char* tag = v.state == Check::Pass ? "PASS" : v.state == Check::Fail ? "FAIL" : "SKIP";
        failures += v.state == Check::Fail;
        std::cout << tag << " " << name << ": " << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
