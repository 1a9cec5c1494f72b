#include "cfsat/errors.hpp"
#include "cfsat/harness.hpp"

#include "../support/fixtures.hpp"

#include "doctest.h"

#include "json.hpp"

using namespace cfsat;
using namespace cfsat::testing;

namespace {

// One real feature on [0, 10]; predicts 1 above 5.
ModelSpec threshold_model()
{
    FeatureSchema s({FeatureSpec{"x", FeatureKind::Real, 0, 10}});
    DecisionTree t;
    t.nodes = {TreeNode{"x", Relation::Gt, 5, 1, 2, std::nullopt}, TreeNode{{}, {}, 0, -1, -1, 1},
               TreeNode{{}, {}, 0, -1, -1, 0}};
    return ModelSpec{s, t};
}

Dataset rows_of(const ModelSpec& m, std::vector<RawInstance> rows)
{
    Dataset d;
    d.schema = m.schema;
    for (auto& r : rows) {
        d.labels.push_back(predict(m, encode_instance(m.schema, r)));
        d.rows.push_back(std::move(r));
    }
    return d;
}

} // namespace

TEST_CASE("minimum observable with one candidate")
{
    ModelSpec m = threshold_model();
    Dataset d = rows_of(m, {{1}, {2}, {9}});
    ObservableResult r = minimum_observable(m, d, {2}, DistanceConfig::preset(NormPreset::L1));
    CHECK(r.row == 2);
    CHECK(r.distance == Rational(7, 10));
}

TEST_CASE("minimum observable picks the nearest")
{
    ModelSpec m = threshold_model();
    Dataset d = rows_of(m, {{9}, {7}, {1}, {7}});
    ObservableResult r = minimum_observable(m, d, {5}, DistanceConfig::preset(NormPreset::L1));
    CHECK(r.row == 1);
    CHECK(r.distance == Rational(1, 5));
    CHECK(r.counterfactual == RawInstance{7});
}

TEST_CASE("minimum observable honours constraints")
{
    ModelSpec m = threshold_model();
    Dataset d = rows_of(m, {{9}, {1}});
    ConstraintSpec c = parse_constraints(R"({"x": {"hi": "8"}})");
    CHECK_THROWS_AS(minimum_observable(m, d, {1}, DistanceConfig::preset(NormPreset::L1), c), OverConstrained);
    Dataset none = rows_of(m, {{1}, {2}});
    CHECK_THROWS_AS(minimum_observable(m, none, {1}, DistanceConfig::preset(NormPreset::L1)), OverConstrained);
}

TEST_CASE("relative improvement")
{
    CHECK(relative_improvement({Rational(1, 10), Rational(1, 5)}, {Rational(1, 5), Rational(2, 5)}) ==
          doctest::Approx(50.0));
    CHECK(relative_improvement({1}, {1}) == doctest::Approx(0.0));
}

TEST_CASE("negative samples")
{
    ModelSpec m = threshold_model();
    Dataset d = rows_of(m, {{9}, {1}, {7}, {2}, {3}});
    CHECK(select_negative_samples(m, d, 2) == std::vector<std::size_t>{1, 3});
    CHECK_THROWS_AS(select_negative_samples(m, d, 4), ValidationError);
}

TEST_CASE("tree batch covers every sample")
{
    Gen g(8);
    FeatureSchema s = random_schema(g, {2, 1, 1, 1, 1});
    ModelSpec spec = random_tree_model(g, s, 4);
    Dataset data = synthetic_dataset(g, spec, 200);
    CompiledModel m = compile_model(spec);
    BatchConfig cfg;
    cfg.norms = {named_norm(NormPreset::L0), named_norm(NormPreset::L1), named_norm(NormPreset::Linf)};
    cfg.n_samples = 10;
    cfg.jobs = 3;
    BatchReport r = run_batch(m, data, cfg);
    REQUIRE(r.records.size() == 30);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK(row.coverage_mace == doctest::Approx(100.0));
        CHECK(row.improvement >= -1e-9);
        CHECK(row.samples == 10);
    }
    for (const auto& rec : r.records) {
        REQUIRE(rec.status == SampleStatus::Ok);
        if (rec.mo)
            CHECK(rec.mace->distance <= rec.mo->distance + Rational(1, 1000));
    }
    CHECK(r.records[0].norm == "l0");
    CHECK(r.records[1].norm == "l1");
    CHECK(r.records[0].row == r.records[2].row);
}

TEST_CASE("batches are deterministic apart from timing")
{
    Gen g(9);
    FeatureSchema s = random_schema(g, {2, 0, 1, 1, 0});
    ModelSpec spec = random_lr_model(g, s);
    Dataset data = synthetic_dataset(g, spec, 100);
    CompiledModel m = compile_model(spec);
    BatchConfig cfg;
    cfg.norms = {named_norm(NormPreset::L1)};
    cfg.n_samples = 5;
    auto strip = [&](const BatchReport& r) {
        std::vector<nlohmann::json> out;
        for (const auto& rec : r.records) {
            auto j = nlohmann::json::parse(record_json(s, rec));
            j.erase("wall_ms");
            out.push_back(j);
        }
        return out;
    };
    cfg.jobs = 1;
    auto a = strip(run_batch(m, data, cfg));
    cfg.jobs = 4;
    auto b = strip(run_batch(m, data, cfg));
    CHECK(a == b);
}

TEST_CASE("report formatting")
{
    ReportRow row;
    row.norm = "l1";
    row.epsilon = Rational(1, 1000);
    row.samples = 3;
    std::string csv = report_csv({row});
    CHECK(csv.rfind("norm,epsilon,", 0) == 0);
    CHECK(csv.find("\nl1,0.001,3,") != std::string::npos);
}

TEST_CASE("restriction study")
{
    FeatureSchema s({FeatureSpec{"a", FeatureKind::Real, 0, 10}, FeatureSpec{"b", FeatureKind::Real, 0, 10}});
    LogisticRegression lr;
    lr.weights = {2, 1};
    lr.bias = -15;
    ModelSpec spec{s, lr};
    Dataset data = rows_of(spec, {{1, 1}, {2, 2}, {3, 0}, {9, 9}, {8, 10}, {10, 1}});
    BatchConfig cfg;
    cfg.norms = {named_norm(NormPreset::L1)};
    cfg.n_samples = 3;
    RestrictionReport r = restriction_study(compile_model(spec), data, cfg, "a");
    CHECK(r.feature == "a");
    CHECK(r.samples == 3);
    CHECK(r.changed_mace == doctest::Approx(100.0));
    CHECK(r.increase_mace > 0);
}
