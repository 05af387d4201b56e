#include "ralab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ralab/bound.hpp"
#include "ralab/filtopt.hpp"
#include "ralab/io.hpp"

namespace ralab {

namespace fs = std::filesystem;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
    fs::create_directories(dir);
    return (fs::path(dir) / name).string();
}

double window_start_of(const RunConfig& cfg) {
    return cfg.window_start >= 0.0 ? cfg.window_start : default_window_start(cfg.scenario);
}

WindowScene simulate_scene(const RunConfig& cfg, const ShapingMatrices& shaping, const PreamblePool& pool) {
    return trial_scene(cfg.scenario, shaping, pool, window_start_of(cfg), cfg.scenario.seed, 0);
}

}  // namespace

std::string cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
    const PulseShape pulse = resolve_filter(cfg.filter, cfg.scenario.m_osf);
    const ShapingMatrices shaping = build_shaping_matrices(pulse, cfg.scenario.window_len);
    const PreamblePool pool = build_pool(cfg.scenario.n_preambles, cfg.scenario.preamble_len);
    const WindowScene sc = simulate_scene(cfg, shaping, pool);
    nlohmann::json j = scene_to_json(sc);
    j["filter"] = pulse.label;
    j["m_osf"] = cfg.scenario.m_osf;
    j["window_len"] = cfg.scenario.window_len;
    j["seed"] = cfg.scenario.seed;
    write_text(out_path(out_dir, "scenario.json"), j.dump(2) + "\n");
    const std::string obs = out_path(out_dir, "observation.csv");
    write_observation_csv(sc.Y, obs);
    return obs;
}

std::string cmd_detect(const RunConfig& cfg, const std::string& observation_path, const std::string& out_dir) {
    const int M = cfg.scenario.m_osf;
    const PulseShape pulse = resolve_filter(cfg.filter, M);
    const ShapingMatrices shaping = build_shaping_matrices(pulse, cfg.scenario.window_len);
    const PreamblePool pool = build_pool(cfg.scenario.n_preambles, cfg.scenario.preamble_len);
    const double ws = window_start_of(cfg);
    CMat Y;
    double noise_var = cfg.noise_var;
    if (!observation_path.empty()) {
        Y = read_observation_csv(observation_path);
        if (Y.rows() != shaping.lm)
            throw ParseError(observation_path + ": has " + std::to_string(Y.rows()) + " samples, expected L*M = " + std::to_string(shaping.lm));
        if (!(noise_var > 0.0)) noise_var = estimate_noise_var(Y, shaping);
    } else {
        const WindowScene sc = simulate_scene(cfg, shaping, pool);
        Y = sc.Y;
        if (!(noise_var > 0.0)) noise_var = sc.noise_var;
    }
    const Algorithm alg = algorithm_from_string(cfg.algorithm);
    DetectionReport rep;
    if (alg == Algorithm::Conventional)
        rep = conventional_ra(Y, pool, M, cfg.detector.peak_threshold, ws);
    else
        rep = uad_dc(Y, shaping, pool, noise_var, ws, cfg.detector).report;
    nlohmann::json j = report_to_json(rep, to_string(alg));
    j["noise_var"] = noise_var;
    const std::string path = out_path(out_dir, "detection.json");
    write_text(path, j.dump(2) + "\n");
    std::cout << "candidates " << rep.preambles.size() << ", active " << j["n_active"].get<int>() << "\n";
    return path;
}

std::string cmd_bcrb(const RunConfig& cfg, const std::string& out_dir) {
    const ScenarioConfig& s = cfg.scenario;
    const PreamblePool pool = build_pool(s.n_preambles, s.preamble_len);
    const double ws = window_start_of(cfg);
    std::ostringstream os;
    os << "filter_label,m_osf,snr_db,nmse_bound\n" << std::setprecision(12);
    for (const auto& name : cfg.bcrb_filters) {
        const PulseShape pulse = resolve_filter(name, s.m_osf);
        const ShapingMatrices shaping = build_shaping_matrices(pulse, s.window_len);
        std::vector<double> acc(cfg.bcrb_snrs.size(), 0.0);
        int used = 0;
        for (int t = 0; t < cfg.bcrb_scenes; ++t) {
            const WindowScene sc = trial_scene(s, shaping, pool, ws, s.seed, t);
            if (sc.X.cols() == 0) continue;
            const BcrbReport r = bcrb_sweep(sc.X, shaping, sc.gamma, s.n_antennas, cfg.bcrb_snrs, cfg.prior_factor);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += r.per_snr[i].second;
            ++used;
        }
        if (used == 0) throw NumericError("no window with active users; raise scenario.n_active or bcrb.n_scenes");
        for (std::size_t i = 0; i < acc.size(); ++i)
            os << pulse.label << "," << s.m_osf << "," << cfg.bcrb_snrs[i] << "," << acc[i] / used << "\n";
    }
    const std::string path = out_path(out_dir, "bcrb.csv");
    write_text(path, os.str());
    return path;
}

std::string cmd_optimize_filter(const RunConfig& cfg, const std::string& out_dir) {
    const ScenarioConfig& s = cfg.scenario;
    const FiltoptConfig& fo = cfg.filtopt;
    const int M = s.m_osf;
    const PulseShape ref = resolve_filter(fo.reference, M);
    const MaskSpec mask = fo.mask_path.empty()
                              ? mask_from_pulse(ref, fo.mask_bins, fo.mask_occupied, fo.mask_stop_floor, fo.mask_margin)
                              : read_mask_csv(fo.mask_path);
    PulseShape init = fo.init.empty() ? ref : resolve_filter(fo.init, M);
    const int h = 3 * M;
    if (fo.project_init) {
        const RVec z = project_free_taps(init.taps.tail(h), mask_box(mask, h, fo.spectral_floor));
        RVec taps(2 * h + 1);
        taps[h] = 1.0;
        for (int i = 1; i <= h; ++i) taps[h + i] = taps[h - i] = z[i - 1];
        init = pulse_from_taps(taps, M, init.label + "+proj");
    }
    const ShapingMatrices sh_init = build_shaping_matrices(init, s.window_len);
    const PreamblePool pool = build_pool(s.n_preambles, s.preamble_len);
    const double ws = window_start_of(cfg);
    DesignProblem prob;
    prob.m_osf = M;
    prob.support = h;
    prob.n_antennas = s.n_antennas;
    for (int t = 0; t < fo.n_scenes; ++t) {
        const WindowScene sc = trial_scene(s, sh_init, pool, ws, mix_seed(s.seed, 0xf117), t);
        if (sc.X.cols() == 0) continue;
        add_scenario(prob, sc.X, sc.gamma, expected_noise_var(sc.X, sh_init, sc.gamma, fo.snr_db), cfg.prior_factor);
    }
    if (prob.terms.empty()) throw NumericError("no design window with active users");
    FilterOptParams params;
    params.max_iters = fo.max_iters;
    params.spectral_floor = fo.spectral_floor;
    const FilterDesignResult res = optimize_filter(prob, mask, init, params);

    const std::string taps_path = out_path(out_dir, "optimized_taps.csv");
    write_taps_csv(res.pulse, taps_path);
    write_mask_csv(mask, out_path(out_dir, "mask.csv"));
    const RVec spec = real_half_spectrum(res.pulse.taps, 16 * mask.bins);
    nlohmann::json j{{"reference", ref.label},
                     {"init", init.label},
                     {"m_osf", M},
                     {"init_objective", res.init_objective},
                     {"objective", res.objective},
                     {"objective_not_above_init", res.objective <= res.init_objective},
                     {"iterations", res.iterations},
                     {"converged", res.converged},
                     {"max_mask_violation", res.max_violation},
                     {"min_spectrum", spec.minCoeff()},
                     {"design_scenes", prob.terms.size()},
                     {"design_snr_db", fo.snr_db}};
    write_text(out_path(out_dir, "optimize_report.json"), j.dump(2) + "\n");
    std::cout << "objective " << res.init_objective << " -> " << res.objective << " in " << res.iterations << " iterations\n";
    return taps_path;
}

std::string cmd_sweep(const RunConfig& cfg, const std::string& out_dir) {
    const auto rows = run_experiment(cfg.experiment);
    const std::string path = out_path(out_dir, "sweep.csv");
    write_text(path, results_csv(rows));
    return path;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"ra_lab: asynchronous massive random access laboratory"};
    app.require_subcommand(1);
    app.footer(config_help());

    struct Common {
        std::string config, out_dir = ".", algorithm, filter, observation;
        std::vector<std::string> sets;
        long seed = -1;
        int threads = 0;
        bool full_scale = false;
    } c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--set", c.sets, "override a config key: section.key=value (repeatable)");
        sub->add_option("--seed", c.seed, "overrides scenario.seed");
        sub->add_option("--threads", c.threads, "worker threads (falls back to RA_LAB_THREADS)");
        sub->add_option("--out-dir", c.out_dir, "output directory");
        sub->add_option("--algorithm", c.algorithm, "uad_dc or conventional (comma list for sweep)");
        sub->add_option("--filter", c.filter, "rrc:<beta>, gauss:<sigma_sq>, delta or file:<taps.csv> (comma list for sweep and bcrb)");
        sub->add_flag("--full-scale", c.full_scale, "full-scale scenario (1000 users, N_R=32, N_PL=139, L=187)");
        sub->footer(config_help());
    };
    auto* sim = app.add_subcommand("simulate", "synthesize one window: scenario.json and observation.csv");
    auto* det = app.add_subcommand("detect", "run UAD-DC (or the conventional baseline) on one window: detection.json");
    det->add_option("--observation", c.observation, "observation CSV (sample,antenna,re,im); default synthesizes a window");
    auto* bc = app.add_subcommand("bcrb", "BCRB SNR sweep per filter: bcrb.csv");
    auto* opt = app.add_subcommand("optimize-filter", "design a pulse under a spectral mask: optimized_taps.csv, optimize_report.json");
    std::string mask_path;
    opt->add_option("--mask", mask_path, "mask CSV (bin_index,b_up)");
    auto* sw = app.add_subcommand("sweep", "Monte-Carlo experiment: sweep.csv");
    for (auto* s : {sim, det, bc, opt, sw}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        std::vector<std::string> sets;
        if (c.full_scale) sets = full_scale_overrides();
        sets.insert(sets.end(), c.sets.begin(), c.sets.end());
        if (c.seed >= 0) sets.push_back("scenario.seed=" + std::to_string(c.seed));
        int threads = c.threads;
        if (threads <= 0)
            if (const char* env = std::getenv("RA_LAB_THREADS")) threads = std::atoi(env);
        if (threads > 0) sets.push_back("experiment.threads=" + std::to_string(threads));
        if (!c.algorithm.empty()) {
            if (c.algorithm.find(',') == std::string::npos) sets.push_back("detector.algorithm=" + c.algorithm);
            sets.push_back("experiment.algorithms=" + c.algorithm);
        }
        if (!c.filter.empty()) {
            if (c.filter.find(',') == std::string::npos) sets.push_back("filter.name=" + c.filter);
            sets.push_back("bcrb.filters=" + c.filter);
            sets.push_back("experiment.filters=" + c.filter);
        }
        if (!mask_path.empty()) sets.push_back("filtopt.mask_path=" + mask_path);
        const RunConfig cfg = load_config(c.config, sets);
        std::string out;
        if (*sim)
            out = cmd_simulate(cfg, c.out_dir);
        else if (*det)
            out = cmd_detect(cfg, c.observation, c.out_dir);
        else if (*bc)
            out = cmd_bcrb(cfg, c.out_dir);
        else if (*opt)
            out = cmd_optimize_filter(cfg, c.out_dir);
        else
            out = cmd_sweep(cfg, c.out_dir);
        std::cout << "wrote " << out << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ralab
