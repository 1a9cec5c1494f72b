#include "cfsat/cli.hpp"
#include "cfsat/errors.hpp"
#include "cfsat/search.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace cfsat;

namespace {

using Values = std::map<std::string, std::string>;

RawInstance read_instance(const FeatureSchema& schema, const Values& values)
{
    RawInstance x(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
        auto it = values.find(schema.feature(j).name);
        if (it == values.end())
            throw ValidationError("instance lacks feature '" + schema.feature(j).name + "'");
        x[j] = schema.parse_value(j, it->second);
    }
    if (values.size() != schema.size())
        for (const auto& [name, _] : values)
            if (!schema.find_feature(name))
                throw ValidationError("unknown feature '" + name + "'");
    encode_instance(schema, x);
    return x;
}

Values write_instance(const FeatureSchema& schema, const RawInstance& x)
{
    Values out;
    for (std::size_t j = 0; j < schema.size(); ++j)
        out[schema.feature(j).name] = schema.format_value(j, x[j]);
    return out;
}

class PyModel {
public:
    explicit PyModel(ModelSpec spec) : model_(compile_model(spec)) {}

    static PyModel from_json(const std::string& text) { return PyModel(parse_model(text)); }
    static PyModel load(const std::string& path) { return PyModel(load_model(path)); }

    std::string kind() const { return std::string(model_kind_name(model_.spec.kind())); }
    std::string label() const { return model_.spec.schema.label(); }

    std::vector<std::string> features() const
    {
        std::vector<std::string> names;
        for (const auto& f : model_.spec.schema.features())
            names.push_back(f.name);
        return names;
    }

    int predict(const Values& values) const
    {
        const auto& schema = model_.spec.schema;
        return cfsat::predict(model_.spec, encode_instance(schema, read_instance(schema, values)));
    }

    std::string smtlib() const { return emit_smtlib(model_.phi); }
    std::string to_json() const { return emit_model(model_.spec); }

    py::list explain(const Values& factual, const std::string& norm, const std::string& epsilon,
                     const std::string& constraints, int k, const std::string& backend) const
    {
        const auto& schema = model_.spec.schema;
        RawInstance x = read_instance(schema, factual);
        ConstraintSpec spec = constraints.empty() ? ConstraintSpec{} : parse_constraints(constraints);
        validate_constraints(spec, schema);
        SearchConfig cfg;
        cfg.epsilon = parse_rational(epsilon);
        cfg.backend = parse_backend(backend);
        cfg.validate();
        CounterfactualQuery query(model_, x, DistanceConfig::preset(parse_norm(norm)), spec);
        std::vector<SearchResult> results;
        {
            py::gil_scoped_release release;
            results = diverse_counterfactuals(query, k, cfg);
        }
        py::list out;
        for (const auto& r : results) {
            py::dict d;
            d["prediction"] = query.yhat();
            d["counterfactual"] = write_instance(schema, r.counterfactual);
            d["distance"] = to_string(r.distance);
            d["delta_min"] = to_string(r.delta_min);
            d["delta_max"] = to_string(r.delta_max);
            d["oracle_calls"] = r.calls.size();
            out.append(d);
        }
        return out;
    }

private:
    CompiledModel model_;
};

py::tuple cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Counterfactual explanations by satisfiability";

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ParseError>(m, "ParseError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<MalformedProgram>(m, "MalformedProgram", base);
    py::register_exception<EvaluationError>(m, "EvaluationError", base);
    py::register_exception<SortClash>(m, "SortClash", base);
    py::register_exception<BudgetExceeded>(m, "BudgetExceeded", base);
    py::register_exception<OverConstrained>(m, "OverConstrained", base);
    py::register_exception<BackendError>(m, "BackendError", base);
    py::register_exception<IoError>(m, "IoError", base);

    py::class_<PyModel>(m, "Model")
        .def_static("from_json", &PyModel::from_json, py::arg("text"))
        .def_static("load", &PyModel::load, py::arg("path"))
        .def_property_readonly("kind", &PyModel::kind)
        .def_property_readonly("label", &PyModel::label)
        .def_property_readonly("features", &PyModel::features)
        .def("predict", &PyModel::predict, py::arg("values"))
        .def("smtlib", &PyModel::smtlib)
        .def("to_json", &PyModel::to_json)
        .def("explain", &PyModel::explain, py::arg("factual"), py::arg("norm") = "l1", py::arg("epsilon") = "1/1000",
             py::arg("constraints") = "", py::arg("k") = 1, py::arg("backend") = "internal");

    m.def("run_cli", &cli, py::arg("args"), "Run the command line tool; returns (exit code, stdout, stderr).");
}
