// Acceptance checks. `acceptance N` runs criterion N; no argument runs all nine.
// Each criterion prints one line: "criterion N PASS|FAIL: detail".

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>

#include "oracles.hpp"
#include "ralab/bench.hpp"
#include "ralab/bound.hpp"
#include "ralab/cli.hpp"
#include "ralab/config.hpp"
#include "ralab/filtopt.hpp"

using namespace ralab;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

CMat random_cmat(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    CMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = {n(rng), n(rng)};
    return m;
}

PulseShape with_taps(const RVec& free, int m, const std::string& label) {
    const int h = 3 * m;
    RVec t = RVec::Zero(2 * h + 1);
    t[h] = 1.0;
    for (int i = 1; i <= free.size(); ++i) t[h + i] = t[h - i] = free[i - 1];
    return pulse_from_taps(t, m, label);
}

Verdict c1_cache_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> um(1, 2), uk(1, 6), unr(1, 4);
    std::uniform_real_distribution<double> uv(0.05, 3.0);
    const std::vector<std::string> filters{"rrc:0.4", "gauss:0.49", "rrc:1", "delta"};
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int m = um(rng);
        const int L = 16 / m - std::uniform_int_distribution<int>(0, 2)(rng);
        const int K = uk(rng), nr = unr(rng);
        const auto sh = build_shaping_matrices(catalog_pulse(filters[t % filters.size()], m), L);
        const CMat A = sh.Z.cast<cx>() * random_cmat(sh.lm, K, rng);
        RVec v(nr);
        for (int a = 0; a < nr; ++a) v[a] = uv(rng);
        const GaussianBelief pri{random_cmat(K, nr, rng), v};
        const CMat Y = random_cmat(sh.lm, nr, rng);
        const double s2 = uv(rng);
        const auto fast = lmmse_posterior(pri, Y, build_eig_cache(sh, A), s2);
        const auto slow = lmmse_posterior_direct(pri, Y, sh, A, s2);
        worst = std::max(worst, (fast.mean - slow.mean).norm() / slow.mean.norm());
        worst = std::max(worst, (fast.var - slow.var).norm() / slow.var.norm());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 10.0, "max relative error " + fmt(worst) + " over 100 instances, " + fmt(secs) + " s"};
}

Verdict c2_turbo_vs_bcrb() {
    const auto t0 = Clock::now();
    ScenarioConfig cfg;
    cfg.snr_db = 10.0;
    const auto sh = build_shaping_matrices(catalog_pulse("rrc:0.4", cfg.m_osf), cfg.window_len);
    const auto pool = build_pool(cfg.n_preambles, cfg.preamble_len);
    const double ws = default_window_start(cfg);
    const int n = 500;
    std::vector<double> err(n, 0.0), bound(n, 0.0), energy(n, 0.0);
    parallel_for(n, 1, [&](int t) {
        const auto sc = trial_scene(cfg, sh, pool, ws, 0x7c2, t);
        if (sc.A.cols() == 0) return;
        // known delays and large-scale gains
        const auto tr = run_turbo_cs(sc.Y, sh, sc.A, PriorSpec{sc.gamma, 0.5}, sc.noise_var);
        err[t] = (tr.post.mean - sc.G).squaredNorm();
        bound[t] = bcrb_from_bim(bim_shaped(sc.A, sh, sc.noise_var), sc.gamma, cfg.n_antennas).variance_total;
        energy[t] = cfg.n_antennas * sc.gamma.sum();
    });
    double se = 0, sb = 0, sg = 0;
    for (int t = 0; t < n; ++t) {
        se += err[t];
        sb += bound[t];
        sg += energy[t];
    }
    const double nmse = se / sg, b = sb / sg, ratio = se / sb, secs = seconds_since(t0);
    return {ratio >= 1.0 && ratio <= 1.3 && secs < 300.0,
            "NMSE " + fmt(nmse) + " vs BCRB " + fmt(b) + " (ratio " + fmt(ratio) + ", " + std::to_string(n) +
                " trials, " + fmt(secs) + " s)"};
}

Verdict c3_denoiser_oracle() {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> ur(0.02, 0.98), ug(0.1, 3.0), uv(0.05, 3.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int nr = 1 + t % 2;
        const double rho = ur(rng), gamma = ug(rng);
        RVec v(nr);
        std::vector<double> vv(nr);
        for (int a = 0; a < nr; ++a) vv[a] = v[a] = uv(rng);
        const CMat g = random_cmat(1, nr, rng) * std::sqrt(ug(rng));
        const std::vector<cx> gv(g.data(), g.data() + nr);
        const auto res = denoiser_posterior(GaussianBelief{g, v}, PriorSpec{RVec::Constant(1, gamma), rho});
        const auto ref = oracle::bg_posterior_mean(rho, gamma, vv, gv);
        for (int a = 0; a < nr; ++a) worst = std::max(worst, std::abs(res.first.mean(0, a) - ref[a]));
    }
    return {worst <= 1e-6, "max |posterior mean - quadrature| " + fmt(worst) + " over 50 tuples"};
}

ExperimentSpec desk_spec() {
    ExperimentSpec s;
    s.n_trials = 200;
    s.calib_trials = 1000;
    s.seed = 1;
    if (const char* env = std::getenv("RA_LAB_THREADS")) s.threads = std::max(1, std::atoi(env));
    return s;
}

Verdict c4_em_iterations() {
    auto s = desk_spec();
    s.sweep_axis = SweepAxis::EmIter;
    s.sweep_values = {0, 1, 2, 3, 4, 5};
    s.algorithms = {Algorithm::UadDc};
    const auto rows = run_experiment(s);
    std::vector<double> p;
    std::string d = "P_md by u:";
    for (const auto& r : rows) {
        p.push_back(r.p_md);
        d += " " + fmt(r.p_md);
    }
    const double spread = std::max({p[3], p[4], p[5]}) - std::min({p[3], p[4], p[5]});
    const bool ok = p[1] <= p[0] && p[2] <= p[1] && p[2] < p[0] && spread < 0.01;
    return {ok, d + "; spread over u=3..5 " + fmt(spread)};
}

Verdict c5_oversampling() {
    auto s = desk_spec();
    s.m_osf_values = {1, 2, 3};
    const auto rows = run_experiment(s);
    auto find = [&](const std::string& alg, int m) -> const ResultRow& {
        for (const auto& r : rows)
            if (r.algorithm == alg && r.m_osf == m) return r;
        throw std::runtime_error("missing row");
    };
    bool ok = true;
    std::string d = "UAD-DC P_md";
    for (int m = 1; m <= 3; ++m) d += " M" + std::to_string(m) + "=" + fmt(find("uad_dc", m).p_md);
    for (int m = 2; m <= 3; ++m) {
        const auto &hi = find("uad_dc", m - 1), &lo = find("uad_dc", m);
        if (lo.p_md > hi.p_md + 2.0 * std::hypot(lo.p_md_stderr, hi.p_md_stderr)) ok = false;
    }
    d += "; SDR gap over conventional";
    for (int m = 1; m <= 3; ++m) {
        const auto &u = find("uad_dc", m), &c = find("conventional", m);
        const double gap = u.sdr - c.sdr, se = std::hypot(u.sdr_stderr, c.sdr_stderr);
        d += " M" + std::to_string(m) + "=" + fmt(gap) + "(2se " + fmt(2 * se) + ")";
        if (!(gap > 2.0 * se)) ok = false;
    }
    return {ok, d};
}

Verdict c6_bcrb_closed_forms() {
    ScenarioConfig cfg;
    const auto pool = build_pool(cfg.n_preambles, cfg.preamble_len);
    const double ws = default_window_start(cfg);
    const auto sh0 = build_shaping_matrices(catalog_pulse("rrc:0.4", cfg.m_osf), cfg.window_len);

    RVec gamma(4);
    gamma << 0.3, 1.0, 1.7, 2.2;
    const double v0 = bcrb(CMat::Zero(sh0.lm, 4), sh0, gamma, 0.1, cfg.n_antennas).variance_total;
    const double expect = cfg.n_antennas * gamma.sum() / 2.0;
    bool ok = std::abs(v0 - expect) <= 1e-12 * expect;

    const std::vector<std::string> order{"gauss:0.1", "rrc:1", "rrc:0", "gauss:0.5"};
    const std::vector<double> snrs{-10.0, 0.0, 10.0};
    std::vector<std::vector<double>> nm(order.size(), std::vector<double>(snrs.size(), 0.0));
    const int n = 20;
    for (std::size_t f = 0; f < order.size(); ++f) {
        const auto sh = build_shaping_matrices(catalog_pulse(order[f], cfg.m_osf), cfg.window_len);
        for (int t = 0; t < n; ++t) {
            const auto sc = trial_scene(cfg, sh0, pool, ws, 0xb0c, t);
            const auto r = bcrb_sweep(sc.X, sh, sc.gamma, cfg.n_antennas, snrs);
            for (std::size_t i = 0; i < snrs.size(); ++i) nm[f][i] += r.per_snr[i].second / n;
        }
    }
    std::string d = "X=0 gives " + fmt(v0) + " (expected " + fmt(expect) + "); nmse_bound at 10 dB:";
    for (std::size_t f = 0; f < order.size(); ++f) d += " " + order[f] + "=" + fmt(nm[f][2]);
    for (std::size_t i = 0; i < snrs.size(); ++i)
        for (std::size_t f = 1; f < order.size(); ++f)
            if (!(nm[f - 1][i] < nm[f][i])) {
                ok = false;
                d += "; order broken at " + fmt(snrs[i]) + " dB";
            }
    return {ok, d};
}

// Dense grid search over (z1, z2, z3) in the mask box, refined around the best point.
double grid_search_3tap(const DesignProblem& prob, const MaskSpec& mask, double floor) {
    auto feasible_obj = [&](const RVec& z3) -> double {
        const RVec F = real_half_spectrum(with_taps(z3, 1, "g").taps, mask.bins);
        if (F.minCoeff() < floor || (F - mask.b_up).maxCoeff() > 0.0) return HUGE_VAL;
        RVec z(4);
        z << 1.0, z3;
        try {
            return design_objective(prob, z);
        } catch (const InfeasiblePointError&) {
            return HUGE_VAL;
        }
    };
    RVec center = RVec::Zero(3);
    double half = 1.0, best = HUGE_VAL;
    RVec arg = center;
    const int g = 20;
    for (int level = 0; level < 14; ++level) {
        for (int a = 0; a <= g; ++a)
            for (int b = 0; b <= g; ++b)
                for (int c = 0; c <= g; ++c) {
                    RVec z(3);
                    z << center[0] - half + 2 * half * a / g, center[1] - half + 2 * half * b / g,
                        center[2] - half + 2 * half * c / g;
                    const double f = feasible_obj(z);
                    if (f < best) {
                        best = f;
                        arg = z;
                    }
                }
        center = arg;
        half *= 0.35;
    }
    return best;
}

Verdict c7_filter_optimization() {
    ScenarioConfig cfg;
    const int M = cfg.m_osf;
    const auto pool = build_pool(cfg.n_preambles, cfg.preamble_len);
    const double ws = default_window_start(cfg);
    const auto ref = catalog_pulse("rrc:0.4", M);
    const auto gauss = catalog_pulse("gauss:0.49", M);
    const auto mask = mask_from_pulse(ref, 1024, 0.01, 0.03, 0.0);
    const int h = 3 * M;
    FilterOptParams params;
    const auto init = with_taps(project_free_taps(ref.taps.tail(h), mask_box(mask, h, params.spectral_floor)), M, "init");
    const auto sh_init = build_shaping_matrices(init, cfg.window_len);

    bool ok = true;
    std::string d;
    double worst_grad = 0.0, worst_viol = 0.0;
    for (double snr : {0.0, 10.0}) {
        DesignProblem prob;
        prob.m_osf = M;
        prob.support = h;
        prob.n_antennas = cfg.n_antennas;
        for (int t = 0; t < 8; ++t) {
            const auto sc = trial_scene(cfg, sh_init, pool, ws, 0xde5, t);
            if (sc.X.cols() > 0) add_scenario(prob, sc.X, sc.gamma, expected_noise_var(sc.X, sh_init, sc.gamma, snr));
        }
        const auto res = optimize_filter(prob, mask, init, params);
        worst_viol = std::max(worst_viol, res.max_violation);
        const RVec Fopt = real_half_spectrum(res.pulse.taps, mask.bins);
        worst_viol = std::max(worst_viol, (Fopt - mask.b_up).maxCoeff());

        // gradient at the optimum and at the start
        for (const RVec& z : {free_coefficients(init, h), free_coefficients(res.pulse, h)}) {
            const auto [f, g] = objective_and_gradient(prob, z);
            for (int i = 1; i <= h; ++i) {
                const double e = 1e-6;
                RVec a = z, b = z;
                a[i] += e;
                b[i] -= e;
                const double fd = (design_objective(prob, a) - design_objective(prob, b)) / (2 * e);
                worst_grad = std::max(worst_grad, std::abs(fd - g[i]) / std::max(std::abs(g[i]), 1e-3 * std::abs(f)));
            }
        }

        // held-out windows
        double b_opt = 0, b_ref = 0, b_gauss = 0;
        const auto sh_opt = build_shaping_matrices(res.pulse, cfg.window_len);
        const auto sh_ref = build_shaping_matrices(ref, cfg.window_len);
        const auto sh_g = build_shaping_matrices(gauss, cfg.window_len);
        const int n = 20;
        for (int t = 0; t < n; ++t) {
            const auto sc = trial_scene(cfg, sh_init, pool, ws, 0x7e57, t);
            if (sc.X.cols() == 0) continue;
            b_opt += bcrb_sweep(sc.X, sh_opt, sc.gamma, cfg.n_antennas, {snr}).nmse_bound / n;
            b_ref += bcrb_sweep(sc.X, sh_ref, sc.gamma, cfg.n_antennas, {snr}).nmse_bound / n;
            b_gauss += bcrb_sweep(sc.X, sh_g, sc.gamma, cfg.n_antennas, {snr}).nmse_bound / n;
        }
        if (!(b_opt < b_ref && b_opt < b_gauss)) ok = false;
        d += fmt(snr) + " dB: opt " + fmt(b_opt) + " rrc " + fmt(b_ref) + " gauss " + fmt(b_gauss) + "; ";
    }
    if (worst_grad > 1e-5 || worst_viol > 1e-6) ok = false;
    d += "grad rel err " + fmt(worst_grad) + ", max violation " + fmt(worst_viol);

    // three free taps at symbol rate; the 1.1 ceiling binds at the optimum (1.12 unconstrained)
    ScenarioConfig c1 = cfg;
    c1.m_osf = 1;
    const auto sh1 = build_shaping_matrices(catalog_pulse("rrc:0.4", 1), c1.window_len);
    DesignProblem p3;
    p3.m_osf = 1;
    p3.support = 3;
    p3.n_antennas = c1.n_antennas;
    for (int t = 0; t < 2; ++t) {
        const auto sc = trial_scene(c1, sh1, pool, ws, 0x3a9, t);
        if (sc.X.cols() > 0) add_scenario(p3, sc.X, sc.gamma, expected_noise_var(sc.X, sh1, sc.gamma, 10.0));
    }
    const auto m3 = constant_mask(1.1, 256);
    FilterOptParams p3params;
    p3params.max_iters = 2000;
    p3params.rel_tol = 1e-12;
    const auto r3 = optimize_filter(p3, m3, delta_pulse(1), p3params);
    const double gs = grid_search_3tap(p3, m3, p3params.spectral_floor);
    const double rel = (r3.objective - gs) / gs;
    if (!(std::abs(rel) <= 1e-4)) ok = false;
    d += "; 3-tap objective " + fmt(r3.objective) + " vs grid " + fmt(gs) + " (rel " + fmt(rel) + ")";
    return {ok, d};
}

Verdict c8_fejer_riesz() {
    double worst = 0.0;
    for (int m : {1, 2, 3})
        for (const auto& name : default_catalog()) {
            const auto p = catalog_pulse(name, m);
            worst = std::max(worst, (autocorrelation(fejer_riesz_factorize(p, 8192)) - p.taps).cwiseAbs().maxCoeff());
        }
    std::mt19937_64 rng(808);
    std::normal_distribution<double> n;
    for (int t = 0; t < 50; ++t) {
        const int m = 1 + t % 3;
        RVec q(3 * m + 1);
        for (int i = 0; i < q.size(); ++i) q[i] = n(rng);
        RVec taps = autocorrelation(q);
        const auto p = pulse_from_taps(taps, m, "random");
        worst = std::max(worst, (autocorrelation(fejer_riesz_factorize(p, 8192)) - p.taps).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-6, "max tap error " + fmt(worst) + " over catalog and 50 random pulses"};
}

std::string strip_last_column(const std::string& path) {
    std::ifstream f(path);
    std::string line, out;
    while (std::getline(f, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

Verdict c9_determinism() {
    const std::string base = std::string(RALAB_TEST_TMP) + "/determinism";
    std::vector<std::string> outs;
    for (int threads : {1, 1, 3, 3}) {
        const std::string dir = base + "/run" + std::to_string(outs.size());
        std::filesystem::create_directories(dir);
        const auto cfg = load_config("", {"scenario.seed=42", "experiment.n_trials=24", "experiment.calib_trials=24",
                                          "experiment.m_osf_values=1,2", "experiment.sweep_values=0,10",
                                          "experiment.threads=" + std::to_string(threads)});
        outs.push_back(strip_last_column(cmd_sweep(cfg, dir)));
    }
    bool ok = !outs[0].empty();
    for (const auto& o : outs) ok = ok && o == outs[0];
    return {ok, "sweep.csv without wall_ms identical over 2 single-threaded and 2 three-threaded runs: " +
                    std::string(ok ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::function<Verdict()>> checks{c1_cache_equivalence, c2_turbo_vs_bcrb, c3_denoiser_oracle,
                                                        c4_em_iterations,     c5_oversampling,  c6_bcrb_closed_forms,
                                                        c7_filter_optimization, c8_fejer_riesz, c9_determinism};
    std::vector<int> which;
    if (argc > 1)
        which.push_back(std::atoi(argv[1]));
    else
        for (int i = 1; i <= 9; ++i) which.push_back(i);
    int failed = 0;
    for (int c : which) {
        if (c < 1 || c > 9) {
            std::cerr << "criterion must be 1..9\n";
            return 2;
        }
        Verdict v;
        try {
            v = checks[c - 1]();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << c << (v.pass ? " PASS: " : " FAIL: ") << v.detail << std::endl;
        if (!v.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
