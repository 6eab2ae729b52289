#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gbath/background.hpp"
#include "gbath/diagnostics.hpp"
#include "gbath/error.hpp"
#include "gbath/experiment.hpp"
#include "gbath/kinematics.hpp"
#include "gbath/simulator.hpp"
#include "gbath/spectral.hpp"

namespace py = pybind11;
using namespace gbath;
using nlohmann::json;

namespace {

// dict <-> json through the json module, which keeps the bindings free of a converter
json to_json(const py::object& obj) {
    const auto dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Velocity to_vec(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

BathParams make_bath(double theta0, double e, const std::array<double, 3>& u0) {
    BathParams b;
    b.theta0 = theta0;
    b.e = e;
    b.u0 = to_vec(u0);
    b.validate();
    return b;
}

py::array_t<double> velocities_array(const ParticleEnsemble& e) {
    py::array_t<double> out({static_cast<py::ssize_t>(e.size()), py::ssize_t{3}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < e.size(); ++i) {
        m(i, 0) = e.velocities[i].x;
        m(i, 1) = e.velocities[i].y;
        m(i, 2) = e.velocities[i].z;
    }
    return out;
}

ParticleEnsemble ensemble_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& v, double mass) {
    if (v.ndim() != 2 || v.shape(1) != 3) throw InputError("velocities must have shape (N, 3)");
    ParticleEnsemble e;
    const auto r = v.unchecked<2>();
    e.velocities.resize(static_cast<std::size_t>(v.shape(0)));
    for (py::ssize_t i = 0; i < v.shape(0); ++i) e.velocities[i] = {r(i, 0), r(i, 1), r(i, 2)};
    e.weight = e.size() ? mass / double(e.size()) : 0.0;
    return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Granular gas in a thermal bath";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

    m.def(
        "run_experiment",
        [](const py::dict& config) {
            const auto cfg = ExperimentConfig::from_json(to_json(config));
            ExperimentReport rep;
            {
                py::gil_scoped_release release;
                rep = run_experiment(cfg);
            }
            return from_json(rep.to_json());
        },
        py::arg("config"), "Run one scenario; returns the report written to report.json.");

    m.def(
        "simulate",
        [](const py::dict& sim) {
            const auto cfg = SimConfig::from_json(to_json(sim));
            SteadyState ss;
            {
                py::gil_scoped_release release;
                ss = run_to_steady(cfg);
            }
            py::dict out;
            out["velocities"] = velocities_array(ss.ensemble);
            out["weight"] = ss.ensemble.weight;
            out["converged"] = ss.converged;
            out["time"] = ss.time;
            out["temperature"] = ss.ensemble.temperature();
            out["moments"] = from_json(ss.momentTable.to_json());
            return out;
        },
        py::arg("sim"), "March to a steady state; returns the pooled steady sample.");

    m.def(
        "sample_initial", [](const py::dict& sim) { return velocities_array(sample_initial(SimConfig::from_json(to_json(sim)))); },
        py::arg("sim"));

    m.def(
        "steps",
        [](const py::dict& sim, std::uint64_t count) {
            const auto cfg = SimConfig::from_json(to_json(sim));
            auto e = sample_initial(cfg);
            for (std::uint64_t k = 0; k < count; ++k) step(e, cfg);
            return velocities_array(e);
        },
        py::arg("sim"), py::arg("count"), "Velocities after `count` steps from the configured initial state.");

    m.def("theta_sharp", [](double theta0, double e) { return elastic_steady_state(make_bath(theta0, e, {})).theta; },
          py::arg("theta0") = 1.0, py::arg("e") = 1.0);

    m.def(
        "kernel_k",
        [](const std::array<double, 3>& v, const std::array<double, 3>& w, double theta0, double e,
           const std::array<double, 3>& u0) {
            return kernel_k(calibrate_kernel(make_bath(theta0, e, u0)), to_vec(v), to_vec(w));
        },
        py::arg("v"), py::arg("w"), py::arg("theta0") = 1.0, py::arg("e") = 1.0,
        py::arg("u0") = std::array<double, 3>{0, 0, 0});

    m.def(
        "sigma",
        [](const std::array<double, 3>& v, double theta0, double e, const std::array<double, 3>& u0) {
            return collision_frequency_sigma(make_bath(theta0, e, u0), to_vec(v));
        },
        py::arg("v"), py::arg("theta0") = 1.0, py::arg("e") = 1.0, py::arg("u0") = std::array<double, 3>{0, 0, 0});

    m.def(
        "spectral_gap",
        [](double e, double theta0, int n, const std::string& kind) {
            const auto bath = make_bath(theta0, e, {});
            const auto grid = default_speed_grid(bath, n);
            if (kind != "linear-L" && kind != "linearized-L1") throw InputError("kind must be linear-L or linearized-L1");
            const auto op = kind == "linear-L" ? discretize_L(grid, bath) : discretize_linearized(grid, bath);
            const auto g = spectral_gap(op);
            py::dict out;
            out["gap"] = g.gap;
            out["bound"] = gap_lower_bound(bath);
            out["eigenvalues"] = std::vector<double>(g.eigenvalues.data(), g.eigenvalues.data() + g.eigenvalues.size());
            out["null_count"] = g.nullCount;
            out["nu0"] = g.nu0;
            return out;
        },
        py::arg("e"), py::arg("theta0") = 1.0, py::arg("n") = 200, py::arg("kind") = "linear-L");

    m.def("gap_lower_bound", [](double e, double theta0) { return gap_lower_bound(make_bath(theta0, e, {})); },
          py::arg("e"), py::arg("theta0") = 1.0);

    m.def(
        "gamma_alpha_p",
        [](double p, double alpha) {
            const auto g = gamma_alpha_p(p, alpha);
            return py::make_tuple(g.gammaAlphaP, g.gammaP);
        },
        py::arg("p"), py::arg("alpha"), "(gamma_{alpha,p}, min(1, 4/(p+1)))");

    m.def(
        "moments",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& v, const std::vector<double>& p,
           double mass) { return from_json(moments(ensemble_from(v, mass), p).to_json()); },
        py::arg("velocities"), py::arg("p"), py::arg("mass") = 1.0);

    m.def(
        "tail_order",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
            const auto f = tail_order_fit(ensemble_from(v, 1.0));
            return py::make_tuple(f.s, f.r);
        },
        py::arg("velocities"), "(s, r) of P(|V| > R) ~ R^{3-s} exp(-r R^s)");

    m.def(
        "l1_distance",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b, int shells, double rmax) {
            return l1_distance(ensemble_from(a, 1.0), ensemble_from(b, 1.0), shells, rmax);
        },
        py::arg("a"), py::arg("b"), py::arg("shells"), py::arg("rmax"));
}
