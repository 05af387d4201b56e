#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ralab/bench.hpp"
#include "ralab/bound.hpp"
#include "ralab/cli.hpp"
#include "ralab/config.hpp"
#include "ralab/filtopt.hpp"
#include "ralab/io.hpp"

namespace py = pybind11;
using namespace ralab;

namespace {

ScenarioConfig scenario_from(const py::dict& d) {
    std::vector<std::string> sets;
    for (const auto& kv : d) sets.push_back("scenario." + py::str(kv.first).cast<std::string>() + "=" +
                                            py::str(kv.second).cast<std::string>());
    return load_config("", sets).scenario;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Asynchronous massive random access laboratory";

    // base first: pybind11 tries the most recently registered translator first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<PulseShape>(m, "PulseShape")
        .def_readonly("m_osf", &PulseShape::m_osf)
        .def_readonly("taps", &PulseShape::taps)
        .def_readonly("label", &PulseShape::label)
        .def("at", &PulseShape::at, py::arg("t"));

    m.def("catalog_pulse", &catalog_pulse, py::arg("name"), py::arg("m_osf"));
    m.def("pulse_from_taps", &pulse_from_taps, py::arg("taps"), py::arg("m_osf"), py::arg("label") = "taps");
    m.def("default_catalog", &default_catalog);
    m.def("zc", [](int root, int length) { return generate_zc(root, length).symbols; }, py::arg("root"),
          py::arg("length"));
    m.def("fejer_riesz_factorize", &fejer_riesz_factorize, py::arg("pulse"), py::arg("n_fft") = 4096);
    m.def("autocorrelation", &autocorrelation, py::arg("q"));
    m.def("real_half_spectrum", &real_half_spectrum, py::arg("taps"), py::arg("n_fft"));

    m.def(
        "shaping_matrices",
        [](const PulseShape& p, int window_len) {
            const auto s = build_shaping_matrices(p, window_len);
            py::dict d;
            d["Z"] = s.Z;
            d["F"] = s.F;
            d["Z_pinv"] = s.Z_pinv;
            d["min_eig"] = s.min_eig;
            return d;
        },
        py::arg("pulse"), py::arg("window_len"));

    m.def(
        "simulate_window",
        [](const std::string& filter, std::uint64_t seed, int trial, const py::dict& scenario) {
            const ScenarioConfig cfg = scenario_from(scenario);
            const auto sh = build_shaping_matrices(catalog_pulse(filter, cfg.m_osf), cfg.window_len);
            const auto pool = build_pool(cfg.n_preambles, cfg.preamble_len);
            const auto sc = trial_scene(cfg, sh, pool, default_window_start(cfg), seed, trial);
            py::dict d;
            d["Y"] = sc.Y;
            d["G"] = sc.G;
            d["X"] = sc.X;
            d["gamma"] = sc.gamma;
            d["delays"] = sc.true_delays;
            d["preambles"] = sc.preamble_assignment;
            d["noise_var"] = sc.noise_var;
            d["window_start"] = sc.window_start;
            return d;
        },
        py::arg("filter") = "rrc:0.4", py::arg("seed") = 1, py::arg("trial") = 0, py::arg("scenario") = py::dict());

    m.def(
        "detect",
        [](const CMat& Y, const std::string& filter, double noise_var, double window_start, const py::dict& scenario) {
            const ScenarioConfig cfg = scenario_from(scenario);
            const auto sh = build_shaping_matrices(catalog_pulse(filter, cfg.m_osf), cfg.window_len);
            const auto pool = build_pool(cfg.n_preambles, cfg.preamble_len);
            const auto rep = uad_dc(Y, sh, pool, noise_var, window_start, UadDcParams{}).report;
            py::dict d;
            d["preambles"] = rep.preambles;
            d["delays"] = rep.delays.delays;
            d["g_hat"] = rep.g_hat;
            d["nu"] = rep.nu;
            d["row_power"] = rep.row_power;
            d["active"] = rep.active_flags;
            d["eta_th"] = rep.eta_th;
            return d;
        },
        py::arg("Y"), py::arg("filter"), py::arg("noise_var"), py::arg("window_start"),
        py::arg("scenario") = py::dict());

    m.def(
        "bcrb_nmse",
        [](const CMat& X, const RVec& gamma, const std::string& filter, int m_osf, int n_antennas,
           const std::vector<double>& snrs, double prior_factor) {
            if (X.rows() % m_osf != 0) throw ShapeError("X rows must be a multiple of m_osf");
            const auto sh = build_shaping_matrices(catalog_pulse(filter, m_osf), static_cast<int>(X.rows()) / m_osf);
            std::vector<double> out;
            for (const auto& [snr, v] : bcrb_sweep(X, sh, gamma, n_antennas, snrs, prior_factor).per_snr) out.push_back(v);
            return out;
        },
        py::arg("X"), py::arg("gamma"), py::arg("filter"), py::arg("m_osf"), py::arg("n_antennas"), py::arg("snrs"),
        py::arg("prior_factor") = 2.0);

    m.def(
        "bcrb_variance",
        [](const CMat& D, const RVec& gamma, int n_antennas, double prior_factor) {
            return bcrb_from_bim(D, gamma, n_antennas, prior_factor).variance_total;
        },
        py::arg("D"), py::arg("gamma"), py::arg("n_antennas"), py::arg("prior_factor") = 2.0);

    m.def(
        "run_sweep",
        [](const std::vector<std::string>& overrides, bool with_wall_ms) {
            const RunConfig cfg = load_config("", overrides);
            py::gil_scoped_release release;
            return results_csv(run_experiment(cfg.experiment), with_wall_ms);
        },
        py::arg("overrides") = std::vector<std::string>{}, py::arg("with_wall_ms") = false,
        "Runs a Monte-Carlo sweep with section.key=value overrides; returns the CSV text.");

    m.def("config_help", &config_help);
    m.def("config_defaults", [] { return flat_defaults().dump(); }, "flat default config as JSON text");
    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "ra_lab");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            return run_cli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "Runs the ra_lab command line in-process; returns the exit code.");
}
