#include "ralab/delaycal.hpp"

#include <algorithm>
#include <cmath>

namespace ralab {

EmContext make_em_context(const CMat& Y, const ShapingMatrices& shaping, const PreamblePool& pool,
                          std::vector<int> preambles, const CMat& g_hat, const RVec& v_g, double noise_var) {
    if (Y.rows() != shaping.lm) throw ShapeError("observation rows do not match LM");
    if (g_hat.rows() != static_cast<Eigen::Index>(preambles.size()) || g_hat.cols() != Y.cols() || v_g.size() != Y.cols())
        throw ShapeError("posterior moments do not match the candidate set");
    require(noise_var > 0.0, "noise variance must be positive");
    EmContext c;
    c.shaping = &shaping;
    c.pool = &pool;
    c.preambles = std::move(preambles);
    c.PY = shaping.Z_pinv.cast<cx>() * Y;
    c.g_hat = g_hat;
    c.v_g = v_g;
    c.noise_var = noise_var;
    return c;
}

namespace {

CMat second_moment(const EmContext& ctx) {
    const Eigen::Index K = ctx.g_hat.rows();
    CMat S = ctx.g_hat * ctx.g_hat.adjoint();
    S += ctx.v_g.sum() * CMat::Identity(K, K);
    return S;
}

}  // namespace

double em_objective(const RVec& tau, const EmContext& ctx) {
    const ShapingMatrices& sh = *ctx.shaping;
    const CMat A = shaped_matrix(*ctx.pool, ctx.preambles, tau, sh.pulse, sh.window_len);
    const CMat PA = sh.Z_pinv.cast<cx>() * A;
    const CMat Mm = A.adjoint() * PA;
    const double t1 = 2.0 * (ctx.PY.adjoint() * A * ctx.g_hat).trace().real();
    const double t2 = (Mm * second_moment(ctx)).trace().real();
    const double g = (t1 - t2) / ctx.noise_var;
    if (!std::isfinite(g)) throw NumericError("em objective is not finite");
    return g;
}

RVec greedy_calibrate(const RVec& tau_in, const EmContext& ctx, double epsilon, int kappa,
                      const std::vector<bool>& frozen) {
    require(epsilon >= 0.0, "search radius must be nonnegative");
    require(kappa >= 1, "kappa must be positive");
    const ShapingMatrices& sh = *ctx.shaping;
    const Eigen::Index K = tau_in.size();
    if (K != static_cast<Eigen::Index>(ctx.preambles.size())) throw ShapeError("delay vector does not match candidates");
    RVec tau = tau_in;
    if (K == 0) return tau;
    const CMat P = sh.Z_pinv.cast<cx>();
    CMat A = shaped_matrix(*ctx.pool, ctx.preambles, tau, sh.pulse, sh.window_len);
    const CMat S = second_moment(ctx);
    const int J = static_cast<int>(std::floor(epsilon * kappa + 1e-9));

    for (Eigen::Index k = 0; k < K; ++k) {
        if (!frozen.empty() && frozen[k]) continue;
        const auto& seq = ctx.pool->sequences.at(ctx.preambles[k]);
        // part of G that depends on column k; the rest is constant during this update
        auto phi = [&](const CVec& a) {
            const CVec pa = P * a;
            const CVec q = ctx.PY.adjoint() * a;
            double t1 = 0.0;
            for (Eigen::Index n = 0; n < q.size(); ++n) t1 += (q[n] * ctx.g_hat(k, n)).real();
            t1 *= 2.0;
            const CVec mk = A.adjoint() * pa;  // conj(M_kl)
            double t2 = a.dot(pa).real() * S(k, k).real();
            for (Eigen::Index l = 0; l < K; ++l)
                if (l != k) t2 += 2.0 * (std::conj(mk[l]) * S(l, k)).real();
            return (t1 - t2) / ctx.noise_var;
        };
        const double t0 = tau[k];
        double best = phi(A.col(k));
        double best_tau = t0;
        CVec best_col = A.col(k);
        for (int j = -J; j <= J; ++j) {
            if (j == 0) continue;
            const double t = t0 + static_cast<double>(j) / kappa;
            const CVec a = shaped_column(seq, t, sh.pulse, sh.window_len);
            const double v = phi(a);
            if (v > best + 1e-12 * (1.0 + std::abs(best))) {
                best = v;
                best_tau = t;
                best_col = a;
            }
        }
        tau[k] = best_tau;
        A.col(k) = best_col;
    }
    return tau;
}

std::vector<bool> threshold_activity(const CMat& g_hat, double eta_th) {
    require(eta_th >= 0.0, "eta_th must be nonnegative");
    std::vector<bool> f(g_hat.rows());
    for (Eigen::Index k = 0; k < g_hat.rows(); ++k) f[k] = g_hat.row(k).squaredNorm() > eta_th;
    return f;
}

double default_eta(const CMat& g_hat, const RVec& nu, int n_antennas, double scale) {
    std::vector<double> quiet;
    for (Eigen::Index k = 0; k < g_hat.rows(); ++k)
        if (nu[k] < 0.1) quiet.push_back(g_hat.row(k).squaredNorm());
    if (quiet.empty()) return 0.0;
    return scale * n_antennas * median(quiet);
}

CandidateSet initial_candidates(const CMat& Y, const PreamblePool& pool, int m_osf, double window_start,
                                const UadDcParams& params) {
    const auto r = cross_correlate(Y, pool, m_osf);
    const double thr = params.peak_threshold > 0.0 ? params.peak_threshold : robust_peak_threshold(r, params.peak_scale);
    if (!(thr > 0.0)) {
        CandidateSet empty;
        empty.window_start = window_start;
        return empty;
    }
    return extract_candidates(r, thr, m_osf, window_start, pool.length);
}

UadDcResult uad_dc(const CMat& Y, const ShapingMatrices& shaping, const PreamblePool& pool, double noise_var,
                   double window_start, const UadDcParams& params) {
    const int M = shaping.m_osf;
    const int kappa = params.kappa > 0 ? params.kappa : 4 * M;
    require(kappa > M, "kappa must exceed m_osf");
    require(params.em_iters >= 0, "em_iters must be nonnegative");
    if (Y.rows() != shaping.lm) throw ShapeError("observation rows do not match LM");

    const CandidateSet cs = initial_candidates(Y, pool, M, window_start, params);
    const Eigen::Index K = static_cast<Eigen::Index>(cs.entries.size());
    const Eigen::Index nr = Y.cols();

    UadDcResult res;
    DetectionReport& rep = res.report;
    rep.window_start = window_start;
    rep.delays.grid_step = 1.0 / kappa;
    rep.delays.search_radius = params.epsilon;
    rep.delays.delays.resize(K);
    rep.peaks.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        rep.preambles.push_back(cs.entries[k].preamble);
        rep.delays.delays[k] = cs.entries[k].delay - window_start;
        rep.peaks[k] = cs.entries[k].peak;
    }
    if (K == 0) {
        rep.g_hat.resize(0, nr);
        rep.v_g = RVec::Zero(nr);
        rep.nu.resize(0);
        rep.row_power.resize(0);
        if (params.keep_history) res.history.assign(params.em_iters + 1, EmSnapshot{RVec(0), CMat(0, nr), RVec(0)});
        return res;
    }

    PriorSpec prior;
    prior.gamma = RVec::Constant(K, params.prior_gamma);
    prior.rho = params.turbo.rho_init;

    RVec tau = rep.delays.delays;
    auto estep = [&](const RVec& t) {
        const CMat A = shaped_matrix(pool, rep.preambles, t, shaping.pulse, shaping.window_len);
        return run_turbo_cs(Y, shaping, A, prior, noise_var, params.turbo);
    };
    TurboResult tr = estep(tau);
    if (params.keep_history) res.history.push_back({tau, tr.post.mean, tr.nu});
    std::vector<int> quiet(K, 0);
    std::vector<bool> frozen(K, false);
    for (int u = 1; u <= params.em_iters; ++u) {
        for (Eigen::Index k = 0; k < K; ++k) {
            quiet[k] = tr.nu[k] < params.freeze_nu ? quiet[k] + 1 : 0;
            frozen[k] = quiet[k] >= 2;
        }
        const EmContext ctx = make_em_context(Y, shaping, pool, rep.preambles, tr.post.mean, tr.post.var, noise_var);
        const RVec next = greedy_calibrate(tau, ctx, params.epsilon, kappa, frozen);
        const double step = (next - tau).cwiseAbs().maxCoeff();
        tau = next;
        tr = estep(tau);
        rep.em_iters_used = u;
        if (params.keep_history) res.history.push_back({tau, tr.post.mean, tr.nu});
        if (step < params.eps3) break;
    }
    if (params.keep_history)
        while (static_cast<int>(res.history.size()) < params.em_iters + 1) res.history.push_back(res.history.back());

    rep.delays.delays = tau;
    rep.g_hat = tr.post.mean;
    rep.v_g = tr.post.var;
    rep.nu = tr.nu;
    rep.rho_hat = tr.rho;
    rep.row_power.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) rep.row_power[k] = rep.g_hat.row(k).squaredNorm();
    rep.eta_th = params.eta_mode == EtaMode::Fixed ? params.eta_fixed
                                                   : default_eta(rep.g_hat, rep.nu, static_cast<int>(nr), params.eta_scale);
    rep.active_flags = threshold_activity(rep.g_hat, rep.eta_th);
    return res;
}

}  // namespace ralab
