#include "cfsat/harness.hpp"

#include "cfsat/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

namespace cfsat {

namespace {

using ojson = nlohmann::ordered_json;

Assignment encoded_assignment(const FeatureSchema& schema, const EncodedVector& e)
{
    Assignment a;
    for (std::size_t i = 0; i < e.size(); ++i)
        a[schema.encoded()[i].var.name] = e[i];
    return a;
}

double mean(const std::vector<double>& v)
{
    if (v.empty())
        return 0;
    double s = 0;
    for (double x : v)
        s += x;
    return s / static_cast<double>(v.size());
}

template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn fn)
{
    std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

bool changes_feature(const RawInstance& a, const RawInstance& b, std::size_t j)
{
    return a[j] != b[j];
}

} // namespace

ObservableResult minimum_observable(const ModelSpec& model, const Dataset& data, const RawInstance& factual,
                                    const DistanceConfig& distance, const ConstraintSpec& constraints)
{
    const FeatureSchema& schema = model.schema;
    int yhat = predict(model, encode_instance(schema, factual));
    Formula plausible = plausibility_formula(schema, factual, constraints);
    std::optional<ObservableResult> best;
    for (std::size_t i = 0; i < data.rows.size(); ++i) {
        EncodedVector e = encode_instance(schema, data.rows[i]);
        if (predict(model, e) == yhat)
            continue;
        if (!evaluate(plausible, encoded_assignment(schema, e)))
            continue;
        Rational d = distance_value(distance, schema, data.rows[i], factual);
        if (!best || d < best->distance)
            best = ObservableResult{i, data.rows[i], d};
    }
    if (!best)
        throw OverConstrained("no plausible dataset row flips the prediction");
    return *best;
}

std::vector<std::size_t> select_negative_samples(const ModelSpec& model, const Dataset& data, std::size_t n)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.rows.size() && out.size() < n; ++i)
        if (predict(model, encode_instance(model.schema, data.rows[i])) == 0)
            out.push_back(i);
    if (out.size() < n)
        throw ValidationError("requested " + std::to_string(n) + " samples but only " + std::to_string(out.size()) +
                              " rows are predicted negative");
    return out;
}

NamedNorm named_norm(NormPreset preset)
{
    return {std::string(norm_name(preset)), DistanceConfig::preset(preset)};
}

std::string_view status_name(SampleStatus s)
{
    switch (s) {
    case SampleStatus::Ok: return "ok";
    case SampleStatus::OverConstrained: return "over-constrained";
    case SampleStatus::BudgetExceeded: return "budget-exceeded";
    case SampleStatus::Error: return "error";
    }
    return "error";
}

double relative_improvement(const std::vector<Rational>& mace, const std::vector<Rational>& other)
{
    if (mace.size() != other.size())
        throw ValidationError("improvement needs paired distances");
    std::vector<double> terms;
    for (std::size_t i = 0; i < mace.size(); ++i) {
        if (other[i] == 0)
            throw ValidationError("baseline distance is zero");
        terms.push_back(to_double(1 - mace[i] / other[i]));
    }
    return 100 * mean(terms);
}

BatchReport run_batch(const CompiledModel& model, const Dataset& data, const BatchConfig& cfg)
{
    if (cfg.norms.empty())
        throw ValidationError("batch needs at least one norm");
    if (cfg.epsilons.empty())
        throw ValidationError("batch needs at least one epsilon");
    for (const auto& eps : cfg.epsilons) {
        SearchConfig sc = cfg.search;
        sc.epsilon = eps;
        sc.validate();
    }
    validate_constraints(cfg.constraints, model.spec.schema);
    std::vector<std::size_t> samples = select_negative_samples(model.spec, data, cfg.n_samples);

    const std::size_t per_sample = cfg.norms.size() * cfg.epsilons.size();
    BatchReport report;
    report.records.resize(samples.size() * per_sample);

    parallel_for(samples.size(), cfg.jobs, [&](std::size_t s) {
        const RawInstance& factual = data.rows[samples[s]];
        Oracle oracle = make_oracle(cfg.search);
        for (std::size_t n = 0; n < cfg.norms.size(); ++n) {
            const NamedNorm& norm = cfg.norms[n];
            std::optional<ObservableResult> mo;
            if (cfg.baseline) {
                try {
                    mo = minimum_observable(model.spec, data, factual, norm.config, cfg.constraints);
                } catch (const OverConstrained&) {
                }
            }
            CounterfactualQuery query(model, factual, norm.config, cfg.constraints, cfg.search.encoding);
            for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
                SampleRecord& rec = report.records[s * per_sample + n * cfg.epsilons.size() + e];
                rec.row = samples[s];
                rec.norm = norm.name;
                rec.epsilon = cfg.epsilons[e];
                rec.factual = factual;
                rec.mo = mo;
                SearchConfig sc = cfg.search;
                sc.epsilon = cfg.epsilons[e];
                try {
                    rec.mace = nearest_counterfactual(query, sc, oracle);
                    rec.status = SampleStatus::Ok;
                } catch (const OverConstrained& ex) {
                    rec.status = SampleStatus::OverConstrained;
                    rec.message = ex.what();
                } catch (const BudgetExceeded& ex) {
                    rec.status = SampleStatus::BudgetExceeded;
                    rec.message = ex.what();
                } catch (const std::exception& ex) {
                    rec.status = SampleStatus::Error;
                    rec.message = ex.what();
                }
            }
        }
    });

    for (std::size_t n = 0; n < cfg.norms.size(); ++n) {
        for (std::size_t e = 0; e < cfg.epsilons.size(); ++e) {
            ReportRow row;
            row.norm = cfg.norms[n].name;
            row.epsilon = cfg.epsilons[e];
            row.samples = samples.size();
            std::vector<double> d_mace, d_mo, calls, wall;
            std::vector<Rational> both_mace, both_mo;
            for (std::size_t s = 0; s < samples.size(); ++s) {
                const SampleRecord& rec = report.records[s * per_sample + n * cfg.epsilons.size() + e];
                if (rec.mace) {
                    d_mace.push_back(to_double(rec.mace->distance));
                    calls.push_back(static_cast<double>(rec.mace->calls.size()));
                    wall.push_back(rec.mace->wall_ms);
                }
                if (rec.mo)
                    d_mo.push_back(to_double(rec.mo->distance));
                if (rec.mace && rec.mo) {
                    both_mace.push_back(rec.mace->distance);
                    both_mo.push_back(rec.mo->distance);
                }
            }
            double total = static_cast<double>(samples.size());
            row.coverage_mace = total > 0 ? 100.0 * static_cast<double>(d_mace.size()) / total : 0;
            row.coverage_mo = total > 0 ? 100.0 * static_cast<double>(d_mo.size()) / total : 0;
            row.mean_distance_mace = mean(d_mace);
            row.mean_distance_mo = mean(d_mo);
            row.improvement = both_mace.empty() ? 0 : relative_improvement(both_mace, both_mo);
            row.mean_calls = mean(calls);
            row.mean_wall_ms = mean(wall);
            report.rows.push_back(row);
        }
    }
    return report;
}

std::string record_json(const FeatureSchema& schema, const SampleRecord& rec)
{
    auto raw_object = [&](const RawInstance& x) {
        ojson o = ojson::object();
        for (std::size_t j = 0; j < schema.size(); ++j)
            o[schema.feature(j).name] = schema.format_value(j, x[j]);
        return o;
    };
    ojson j;
    j["row"] = rec.row;
    j["norm"] = rec.norm;
    j["epsilon"] = to_string(rec.epsilon);
    j["status"] = status_name(rec.status);
    if (!rec.message.empty())
        j["message"] = rec.message;
    j["factual"] = raw_object(rec.factual);
    if (rec.mace) {
        const SearchResult& r = *rec.mace;
        j["counterfactual"] = raw_object(r.counterfactual);
        ojson deltas = ojson::object();
        auto dv = distance_vector(schema, r.counterfactual, rec.factual);
        for (std::size_t f = 0; f < schema.size(); ++f)
            deltas[schema.feature(f).name] = to_string(dv[f]);
        j["deltas"] = deltas;
        j["distance"] = to_string(r.distance);
        j["delta_min"] = to_string(r.delta_min);
        j["delta_max"] = to_string(r.delta_max);
        j["oracle_calls"] = r.calls.size();
    } else {
        j["counterfactual"] = nullptr;
    }
    if (rec.mo) {
        j["mo"] = ojson{{"row", rec.mo->row},
                        {"counterfactual", raw_object(rec.mo->counterfactual)},
                        {"distance", to_string(rec.mo->distance)}};
    } else {
        j["mo"] = nullptr;
    }
    j["wall_ms"] = rec.mace ? rec.mace->wall_ms : 0.0;
    return j.dump();
}

std::string report_csv(const std::vector<ReportRow>& rows)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << "norm,epsilon,samples,coverage_mace,coverage_mo,distance_mace,distance_mo,improvement,oracle_calls,"
          "wall_ms\n";
    for (const auto& r : rows)
        os << r.norm << ',' << to_string(r.epsilon) << ',' << r.samples << ',' << r.coverage_mace << ','
           << r.coverage_mo << ',' << r.mean_distance_mace << ',' << r.mean_distance_mo << ',' << r.improvement
           << ',' << r.mean_calls << ',' << r.mean_wall_ms << '\n';
    return os.str();
}

RestrictionReport restriction_study(const CompiledModel& model, const Dataset& data, const BatchConfig& cfg,
                                    const std::string& feature)
{
    const FeatureSchema& schema = model.spec.schema;
    auto j = schema.find_feature(feature);
    if (!j)
        throw ValidationError("unknown feature '" + feature + "'");
    if (cfg.norms.empty() || cfg.epsilons.empty())
        throw ValidationError("restriction study needs a norm and an epsilon");

    BatchConfig base = cfg;
    base.norms = {cfg.norms.front()};
    base.epsilons = {cfg.epsilons.front()};
    base.baseline = true;
    BatchReport unrestricted = run_batch(model, data, base);

    ConstraintSpec restricted = cfg.constraints;
    restricted.features[feature].actionability = Actionability::Immutable;
    SearchConfig sc = cfg.search;
    sc.epsilon = base.epsilons.front();
    const DistanceConfig& norm = base.norms.front().config;

    RestrictionReport out;
    out.feature = feature;
    out.norm = base.norms.front().name;
    out.samples = unrestricted.records.size();

    std::size_t covered_mace = 0, covered_mo = 0, changed_mace = 0, changed_mo = 0;
    std::vector<double> inc_mace, inc_mo;
    std::mutex mutex;
    parallel_for(unrestricted.records.size(), cfg.jobs, [&](std::size_t i) {
        const SampleRecord& rec = unrestricted.records[i];
        bool mace_changes = rec.mace && changes_feature(rec.mace->counterfactual, rec.factual, *j);
        bool mo_changes = rec.mo && changes_feature(rec.mo->counterfactual, rec.factual, *j);
        std::optional<double> mace_ratio, mo_ratio;
        bool lost = false;
        if (mace_changes) {
            try {
                CounterfactualQuery q(model, rec.factual, norm, restricted, sc.encoding);
                SearchResult r = nearest_counterfactual(q, sc, make_oracle(sc));
                mace_ratio = to_double(r.distance / rec.mace->distance - 1);
            } catch (const OverConstrained&) {
                lost = true;
            } catch (const BudgetExceeded&) {
                lost = true;
            }
        }
        if (mo_changes) {
            try {
                ObservableResult r = minimum_observable(model.spec, data, rec.factual, norm, restricted);
                mo_ratio = to_double(r.distance / rec.mo->distance - 1);
            } catch (const OverConstrained&) {
            }
        }
        std::lock_guard lock(mutex);
        covered_mace += rec.mace ? 1 : 0;
        covered_mo += rec.mo ? 1 : 0;
        changed_mace += mace_changes ? 1 : 0;
        changed_mo += mo_changes ? 1 : 0;
        out.uncovered_after += lost ? 1 : 0;
        if (mace_ratio)
            inc_mace.push_back(100 * *mace_ratio);
        if (mo_ratio)
            inc_mo.push_back(100 * *mo_ratio);
    });
    out.changed_mace = covered_mace ? 100.0 * static_cast<double>(changed_mace) / static_cast<double>(covered_mace) : 0;
    out.changed_mo = covered_mo ? 100.0 * static_cast<double>(changed_mo) / static_cast<double>(covered_mo) : 0;
    std::sort(inc_mace.begin(), inc_mace.end());
    std::sort(inc_mo.begin(), inc_mo.end());
    out.increase_mace = mean(inc_mace);
    out.increase_mo = mean(inc_mo);
    return out;
}

} // namespace cfsat
