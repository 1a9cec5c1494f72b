#include "cfsat/cli.hpp"

#include "cfsat/compiler.hpp"
#include "cfsat/errors.hpp"
#include "cfsat/harness.hpp"
#include "cfsat/search.hpp"
#include "cfsat/smtlib.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cfsat {

namespace {

using ojson = nlohmann::ordered_json;

struct DistanceFlags {
    std::vector<std::string> norms;
    std::optional<std::string> alpha, beta, gamma;
};

void add_distance_flags(CLI::App* cmd, DistanceFlags& f, bool many)
{
    if (many)
        cmd->add_option("--norm", f.norms, "l0, l1, linf or combined; repeatable or comma separated")
            ->delimiter(',');
    else
        cmd->add_option("--norm", f.norms, "l0, l1, linf or combined")->expected(1);
    cmd->add_option("--alpha", f.alpha, "weight of the l0 term");
    cmd->add_option("--beta", f.beta, "weight of the l1 term");
    cmd->add_option("--gamma", f.gamma, "weight of the linf term");
}

std::vector<NamedNorm> resolve_norms(const DistanceFlags& f, std::vector<std::string> defaults)
{
    std::vector<NamedNorm> out;
    if (f.alpha || f.beta || f.gamma) {
        if (!f.norms.empty())
            throw ValidationError("--norm cannot be combined with --alpha/--beta/--gamma");
        auto w = [](const std::optional<std::string>& s) { return s ? parse_rational(*s) : Rational(0); };
        out.push_back({"custom", DistanceConfig::weights(w(f.alpha), w(f.beta), w(f.gamma))});
        return out;
    }
    for (const auto& n : f.norms.empty() ? defaults : f.norms)
        out.push_back(named_norm(parse_norm(n)));
    return out;
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

SearchConfig search_config(const std::string& backend, const std::string& epsilon)
{
    SearchConfig cfg;
    cfg.epsilon = parse_rational(epsilon);
    cfg.backend = parse_backend(backend);
    if (cfg.backend == BackendKind::External)
        cfg.external = ExternalBackend::from_environment();
    cfg.validate();
    return cfg;
}

// "age=31,sex=Male"
RawInstance parse_factual(const FeatureSchema& schema, const std::string& text)
{
    RawInstance raw(schema.size());
    std::vector<bool> seen(schema.size(), false);
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ParseError("factual entry '" + item + "' is not name=value");
        std::string name = item.substr(0, eq);
        auto j = schema.find_feature(name);
        if (!j)
            throw ValidationError("unknown feature '" + name + "' in factual instance");
        raw[*j] = schema.parse_value(*j, item.substr(eq + 1));
        seen[*j] = true;
    }
    for (std::size_t j = 0; j < schema.size(); ++j)
        if (!seen[j])
            throw ValidationError("factual instance lacks feature '" + schema.feature(j).name + "'");
    encode_instance(schema, raw);
    return raw;
}

ojson raw_object(const FeatureSchema& schema, const RawInstance& x)
{
    ojson o = ojson::object();
    for (std::size_t j = 0; j < schema.size(); ++j)
        o[schema.feature(j).name] = schema.format_value(j, x[j]);
    return o;
}

std::string explain_record(const CounterfactualQuery& q, const SearchResult& r, std::size_t rank)
{
    const FeatureSchema& schema = q.schema();
    ojson j;
    j["rank"] = rank;
    j["prediction"] = q.yhat();
    j["target"] = 1 - q.yhat();
    j["factual"] = raw_object(schema, q.factual());
    j["counterfactual"] = raw_object(schema, r.counterfactual);
    ojson deltas = ojson::object();
    auto dv = distance_vector(schema, r.counterfactual, q.factual());
    for (std::size_t f = 0; f < schema.size(); ++f)
        deltas[schema.feature(f).name] = to_string(dv[f]);
    j["deltas"] = deltas;
    j["distance"] = to_string(r.distance);
    j["delta_min"] = to_string(r.delta_min);
    j["delta_max"] = to_string(r.delta_max);
    j["oracle_calls"] = r.calls.size();
    j["wall_ms"] = r.wall_ms;
    return j.dump();
}

Dataset load_batch_data(const ModelSpec& model, const std::string& data_path, const std::string& schema_path)
{
    if (schema_path.empty())
        return load_dataset(data_path, model.schema);
    FeatureSchema given = parse_schema(read_text(schema_path));
    if (given.size() != model.schema.size() || given.label() != model.schema.label())
        throw ValidationError("schema file does not describe the model's features");
    for (std::size_t j = 0; j < given.size(); ++j) {
        const auto& a = given.feature(j);
        const auto& b = model.schema.feature(j);
        if (a.name != b.name || a.kind != b.kind || a.encoding != b.encoding || a.categories != b.categories ||
            a.levels != b.levels)
            throw ValidationError("schema file disagrees with the model on feature '" + b.name + "'");
    }
    Dataset data = load_dataset(data_path, given);
    data.schema = model.schema;
    return data;
}

int exit_code_of(const std::exception& e)
{
    if (dynamic_cast<const OverConstrained*>(&e))
        return kExitOverConstrained;
    if (dynamic_cast<const BudgetExceeded*>(&e))
        return kExitBudget;
    if (dynamic_cast<const IoError*>(&e))
        return kExitIo;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e))
        return kExitIo;
    return kExitConfig;
}

std::string_view error_kind(int code)
{
    switch (code) {
    case kExitOverConstrained: return "over-constrained";
    case kExitBudget: return "budget exceeded";
    case kExitIo: return "i/o error";
    default: return "error";
    }
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Nearest counterfactual explanations by satisfiability", "cfsat"};
    app.require_subcommand(1);

    std::string model_path, out_path, form = "structured";
    auto* compile = app.add_subcommand("compile", "write the model's formula as an SMT-LIB script");
    compile->add_option("--model", model_path, "model interchange document")->required();
    compile->add_option("--out", out_path, "script path (standard output when omitted)");
    compile->add_option("--form", form, "structured or dnf")->check(CLI::IsMember({"structured", "dnf"}));

    DistanceFlags explain_norm;
    std::string factual_text, data_path, schema_path, constraints_path, backend = "internal", epsilon = "0.001";
    std::size_t row = 0;
    int diverse = 0;
    auto* explain = app.add_subcommand("explain", "nearest counterfactuals for one instance, as JSON lines");
    explain->add_option("--model", model_path, "model interchange document")->required();
    auto* factual_opt = explain->add_option("--factual", factual_text, "name=value,... for every feature");
    auto* data_opt = explain->add_option("--data", data_path, "CSV holding the factual row");
    explain->add_option("--row", row, "0-based row of --data")->needs(data_opt);
    factual_opt->excludes(data_opt);
    add_distance_flags(explain, explain_norm, false);
    explain->add_option("--epsilon", epsilon, "accuracy of the binary search");
    explain->add_option("--constraints", constraints_path, "constraints document");
    explain->add_option("--diverse", diverse, "number of diverse counterfactuals")->check(CLI::PositiveNumber);
    explain->add_option("--backend", backend, "internal or external")->check(CLI::IsMember({"internal", "external"}));
    explain->add_option("--out", out_path, "JSONL path (standard output when omitted)");

    DistanceFlags batch_norm;
    std::vector<std::string> epsilons;
    std::size_t n_samples = 0;
    int jobs = 1;
    std::string restrict_feature;
    bool no_baseline = false;
    auto* batch = app.add_subcommand("batch", "run a batch experiment over the negative-predicted rows");
    batch->add_option("--model", model_path, "model interchange document")->required();
    batch->add_option("--data", data_path, "dataset CSV")->required();
    batch->add_option("--schema", schema_path, "dataset schema (defaults to the model's)");
    add_distance_flags(batch, batch_norm, true);
    batch->add_option("--epsilon", epsilons, "accuracies; repeatable or comma separated")->delimiter(',');
    batch->add_option("--constraints", constraints_path, "constraints document");
    batch->add_option("--backend", backend, "internal or external")->check(CLI::IsMember({"internal", "external"}));
    batch->add_option("--n-samples", n_samples, "number of factual samples")->required();
    batch->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    batch->add_option("--restrict", restrict_feature, "also run the study with this feature immutable");
    batch->add_flag("--no-baseline", no_baseline, "skip the minimum-observable baseline");
    batch->add_option("--out", out_path, "output directory")->required();

    std::vector<char*> argv;
    std::vector<std::string> storage = args;
    storage.insert(storage.begin(), "cfsat");
    for (auto& a : storage)
        argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "cfsat: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (*compile) {
            ModelSpec spec = load_model(model_path);
            CompileOptions options;
            options.form = form == "dnf" ? CompileOptions::Form::Dnf : CompileOptions::Form::Structured;
            CompiledModel m = compile_model(spec, options);
            std::string script = emit_smtlib(m.phi);
            if (out_path.empty())
                out << script;
            else
                write_text(out_path, script);
            std::ostream& info = out_path.empty() ? err : out;
            info << "paths: " << count_paths(m.ssa) << "\n";
            info << "variables: " << free_variables(m.phi).size() << "\n";
            info << "size: " << formula_size(m.phi) << "\n";
            return kExitOk;
        }

        if (*explain) {
            ModelSpec spec = load_model(model_path);
            const FeatureSchema& schema = spec.schema;
            RawInstance factual;
            if (!factual_text.empty()) {
                factual = parse_factual(schema, factual_text);
            } else if (!data_path.empty()) {
                Dataset data = load_dataset(data_path, schema);
                if (row >= data.size())
                    throw ValidationError("--row " + std::to_string(row) + " is past the " +
                                          std::to_string(data.size()) + " loaded rows");
                factual = data.rows[row];
            } else {
                throw ValidationError("explain needs --factual or --data");
            }
            ConstraintSpec constraints = constraints_path.empty() ? ConstraintSpec{} : load_constraints(constraints_path);
            validate_constraints(constraints, schema);
            int k = diverse > 0 ? diverse : (constraints.diversity == DiversityMode::L0AtLeast1 ? constraints.count : 1);
            NamedNorm norm = resolve_norms(explain_norm, {"l1"}).front();
            SearchConfig cfg = search_config(backend, epsilon);

            CompiledModel m = compile_model(spec);
            CounterfactualQuery query(m, factual, norm.config, constraints, cfg.encoding);
            std::vector<SearchResult> results = diverse_counterfactuals(query, k, cfg);
            std::ostringstream lines;
            for (std::size_t i = 0; i < results.size(); ++i)
                lines << explain_record(query, results[i], i) << "\n";
            if (out_path.empty())
                out << lines.str();
            else
                write_text(out_path, lines.str());
            if (static_cast<int>(results.size()) < k)
                err << "cfsat: only " << results.size() << " of " << k
                    << " diverse counterfactuals exist under the constraints\n";
            return kExitOk;
        }

        // batch
        ModelSpec spec = load_model(model_path);
        BatchConfig cfg;
        cfg.norms = resolve_norms(batch_norm, {"l0", "l1", "linf"});
        cfg.epsilons.clear();
        for (const auto& e : epsilons.empty() ? std::vector<std::string>{epsilon} : epsilons)
            cfg.epsilons.push_back(parse_rational(e));
        cfg.search = search_config(backend, epsilon);
        for (const auto& e : cfg.epsilons) {
            SearchConfig probe = cfg.search;
            probe.epsilon = e;
            probe.validate();
        }
        cfg.constraints = constraints_path.empty() ? ConstraintSpec{} : load_constraints(constraints_path);
        validate_constraints(cfg.constraints, spec.schema);
        if (!restrict_feature.empty() && !spec.schema.find_feature(restrict_feature))
            throw ValidationError("unknown feature '" + restrict_feature + "' for --restrict");
        cfg.n_samples = n_samples;
        cfg.jobs = jobs;
        cfg.baseline = !no_baseline;
        Dataset data = load_batch_data(spec, data_path, schema_path);
        select_negative_samples(spec, data, n_samples);

        CompiledModel m = compile_model(spec);
        BatchReport report = run_batch(m, data, cfg);
        std::optional<RestrictionReport> study;
        if (!restrict_feature.empty())
            study = restriction_study(m, data, cfg, restrict_feature);

        std::filesystem::path dir(out_path);
        std::filesystem::create_directories(dir);
        std::ostringstream jsonl;
        for (const auto& rec : report.records)
            jsonl << record_json(spec.schema, rec) << "\n";
        write_text(dir / "records.jsonl", jsonl.str());
        write_text(dir / "report.csv", report_csv(report.rows));
        if (study) {
            std::ostringstream csv;
            csv.setf(std::ios::fixed);
            csv.precision(4);
            csv << "feature,norm,samples,changed_mace,changed_mo,increase_mace,increase_mo,uncovered_after\n";
            csv << study->feature << ',' << study->norm << ',' << study->samples << ',' << study->changed_mace << ','
                << study->changed_mo << ',' << study->increase_mace << ',' << study->increase_mo << ','
                << study->uncovered_after << '\n';
            write_text(dir / "restriction.csv", csv.str());
        }
        if (data.dropped)
            out << "dropped " << data.dropped << " rows with missing values\n";
        for (const auto& r : report.rows)
            out << r.norm << " eps=" << to_string(r.epsilon) << "  coverage " << r.coverage_mace << "% (MO "
                << r.coverage_mo << "%)  mean distance " << r.mean_distance_mace << " (MO " << r.mean_distance_mo
                << ")  improvement " << r.improvement << "%\n";
        return kExitOk;
    } catch (const std::exception& e) {
        int code = exit_code_of(e);
        err << "cfsat: " << error_kind(code) << ": " << e.what() << "\n";
        return code;
    }
}

} // namespace cfsat
