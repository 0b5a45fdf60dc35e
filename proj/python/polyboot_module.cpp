#include "polyboot/bootstrap.hpp"
#include "polyboot/cli.hpp"
#include "polyboot/counterfactual.hpp"
#include "polyboot/csv_io.hpp"
#include "polyboot/errors.hpp"
#include "polyboot/estimator_spec.hpp"
#include "polyboot/fixtures.hpp"
#include "polyboot/variance.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace polyboot;

namespace {

EstimatorSpec make_spec(const std::string& kind, const std::string& y, const std::vector<std::string>& x,
                        const std::vector<std::string>& z, const std::string& column, bool intercept,
                        const std::string& moment) {
    EstimatorSpec spec;
    if (kind == "mean") {
        spec.variant = MeanSpec{column.empty() ? (x.empty() ? std::string() : x.front()) : column};
    } else if (kind == "ols") {
        spec.variant = OlsSpec{y, x, intercept};
    } else if (kind == "ppml") {
        spec.variant = PpmlSpec{y, x, intercept};
    } else if (kind == "gmm") {
        GmmSpec g;
        g.moment = moment;
        g.y = y;
        g.x = x;
        g.z = z;
        g.intercept = intercept;
        spec.variant = g;
    } else {
        throw ConfigError("unknown estimator '" + kind + "' (expected mean, ols, ppml or gmm)");
    }
    return spec;
}

// Estimator keeps a pointer to its sample, so the Python object holds both.
struct BoundEstimator {
    std::shared_ptr<const PolyadicSample> sample;
    Estimator est;
};

BoundEstimator make_estimator(std::shared_ptr<PolyadicSample> sample, const std::string& kind,
                              const std::string& y, const std::vector<std::string>& x,
                              const std::vector<std::string>& z, const std::string& column, bool intercept,
                              const std::string& moment) {
    auto est = Estimator::bind(make_spec(kind, y, x, z, column, intercept, moment), *sample);
    return {std::move(sample), std::move(est)};
}

py::dict bootstrap_dict(const BootstrapResult& r, const std::vector<double>& levels) {
    py::dict d;
    d["method"] = r.method;
    d["seed"] = r.seed;
    d["B"] = r.B;
    d["failed"] = r.failed;
    d["failure_reasons"] = r.failure_reasons;
    d["param_names"] = r.param_names;
    d["point_estimate"] = Vector(r.point_estimate);
    d["draws"] = r.draws;
    d["draw_indices"] = r.draw_indices;
    py::dict q;
    if (r.successful() >= 2) {
        for (const double level : levels) {
            const auto ci = credible_interval(r, level);
            q[py::float_(level)] = py::make_tuple(ci.lower, ci.upper);
        }
    }
    d["intervals"] = q;
    return d;
}

}  // namespace

PYBIND11_MODULE(_polyboot, m) {
    m.doc() = "Bayesian bootstrap inference for dyadic and polyadic data";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<ParamError>(m, "ParamError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<DegenerateDraw>(m, "DegenerateDraw", base.ptr());
    auto solver = py::register_exception<SolverError>(m, "SolverError", base.ptr());
    py::register_exception<SingularDesign>(m, "SingularDesign", solver.ptr());
    py::register_exception<SingularWeightMatrix>(m, "SingularWeightMatrix", solver.ptr());
    py::register_exception<SingularJacobian>(m, "SingularJacobian", solver.ptr());
    py::register_exception<BootstrapError>(m, "BootstrapError", base.ptr());
    py::register_exception<Unsupported>(m, "Unsupported", base.ptr());
    py::register_exception<EvalError>(m, "EvalError", base.ptr());
    py::register_exception<CounterfactualError>(m, "CounterfactualError", base.ptr());
    py::register_exception<DgpError>(m, "DgpError", base.ptr());

    py::class_<PolyadicSample, std::shared_ptr<PolyadicSample>>(m, "Sample")
        .def_property_readonly("order", &PolyadicSample::order)
        .def_property_readonly("n_units", &PolyadicSample::n_units)
        .def_property_readonly("size", &PolyadicSample::size)
        .def_property_readonly("unit_labels", &PolyadicSample::unit_labels)
        .def_property_readonly("variable_names", &PolyadicSample::variable_names)
        .def_property_readonly("is_full_index_set", &PolyadicSample::is_full_index_set)
        .def("column", [](const PolyadicSample& s, const std::string& name) { return s.column(s.column_index(name)); })
        .def("tuples",
             [](const PolyadicSample& s) {
                 Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t(s.size(), s.order());
                 for (std::size_t i = 0; i < s.size(); ++i) {
                     const auto u = s.tuple(i);
                     for (int a = 0; a < s.order(); ++a) {
                         t(static_cast<Eigen::Index>(i), a) = u[static_cast<std::size_t>(a)];
                     }
                 }
                 return t;
             })
        .def("to_csv",
             [](const PolyadicSample& s) {
                 std::ostringstream out;
                 write_csv(s, out);
                 return out.str();
             })
        .def("__len__", &PolyadicSample::size)
        .def("__repr__", [](const PolyadicSample& s) {
            return "<Sample order=" + std::to_string(s.order()) + " n_units=" + std::to_string(s.n_units()) +
                   " size=" + std::to_string(s.size()) + ">";
        });

    m.def(
        "load_csv",
        [](const std::string& path, int order, const std::vector<std::string>& units,
           const std::vector<std::string>& variables) {
            CsvSchema schema;
            schema.order = order;
            schema.unit_columns = units;
            schema.variable_columns = variables;
            return std::make_shared<PolyadicSample>(load_csv(path, schema));
        },
        py::arg("path"), py::arg("order") = 2, py::arg("units") = std::vector<std::string>{},
        py::arg("variables") = std::vector<std::string>{});
    m.def(
        "parse_csv",
        [](const std::string& text, int order) {
            std::istringstream in(text);
            CsvSchema schema;
            schema.order = order;
            return std::make_shared<PolyadicSample>(parse_csv(in, schema));
        },
        py::arg("text"), py::arg("order") = 2);
    m.def(
        "make_fixture",
        [](const std::string& name, std::uint64_t seed) {
            return std::make_shared<PolyadicSample>(make_fixture(name, seed));
        },
        py::arg("name"), py::arg("seed") = kDefaultFixtureSeed);
    m.def("fixture_names", &fixture_names);

    py::class_<BoundEstimator>(m, "Estimator")
        .def(py::init(&make_estimator), py::arg("sample"), py::arg("kind") = "ols", py::arg("y") = "",
             py::arg("x") = std::vector<std::string>{}, py::arg("z") = std::vector<std::string>{},
             py::arg("column") = "", py::arg("intercept") = false, py::arg("moment") = "linear-iv")
        .def_property_readonly("param_names", [](const BoundEstimator& b) { return b.est.param_names(); })
        .def("estimate",
             [](const BoundEstimator& b) { return Vector(b.est.estimate(uniform_weights(*b.sample))); })
        .def(
            "estimate_weighted",
            [](const BoundEstimator& b, const Vector& w) {
                if (static_cast<std::size_t>(w.size()) != b.sample->size()) {
                    throw ParamError("one weight per observation required");
                }
                ObservationWeights ow;
                ow.values = w / w.sum();
                return Vector(b.est.estimate(ow));
            },
            py::arg("weights"))
        .def(
            "bootstrap",
            [](const BoundEstimator& b, const std::string& method, std::size_t draws, std::uint64_t seed,
               double alpha, const std::vector<double>& levels, unsigned threads) {
                BootstrapOptions o;
                o.scheme = parse_scheme(method);
                o.draws = draws;
                o.seed = seed;
                o.alpha = alpha;
                o.threads = threads;
                BootstrapResult r;
                {
                    py::gil_scoped_release release;
                    r = run_bootstrap(b.est, o);
                }
                return bootstrap_dict(r, levels);
            },
            py::arg("method") = "bayes", py::arg("draws") = 1000, py::arg("seed"), py::arg("alpha") = 0.0,
            py::arg("levels") = std::vector<double>{0.95}, py::arg("threads") = 0)
        .def(
            "variance",
            [](const BoundEstimator& b, const std::string& method) {
                const ParamVector theta = b.est.estimate(uniform_weights(*b.sample));
                const auto z = b.est.z_system(theta);
                VarianceEstimate v;
                if (method == "graham") {
                    v = graham_variance(z.moment, *b.sample, z.point);
                } else if (method == "naive") {
                    v = naive_dyad_robust(z.moment, *b.sample, z.point);
                } else {
                    throw ConfigError("unknown variance method '" + method + "' (expected graham or naive)");
                }
                v = select_parameters(v, z.theta_index);
                py::dict d;
                d["method"] = v.method;
                d["point_estimate"] = Vector(theta);
                d["covariance"] = v.covariance;
                d["se"] = Vector(v.se());
                d["clamped"] = v.clamped;
                return d;
            },
            py::arg("method") = "graham");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
    m.attr("__version__") = "0.1.0";
}
