#pragma once

#include <vector>

#include "ralab/airsim.hpp"
#include "ralab/preambles.hpp"
#include "ralab/sparsecs.hpp"

namespace ralab {

struct DelayEstimate {
    RVec delays;  // window-relative, T_S units
    double grid_step = 0.0;
    double search_radius = 0.0;
};

struct DetectionReport {
    DelayEstimate delays;
    std::vector<int> preambles;
    RVec peaks;  // cross-correlation peak per candidate
    CMat g_hat;
    RVec v_g;
    RVec nu;
    std::vector<bool> active_flags;
    RVec row_power;
    double rho_hat = 0.0;
    double eta_th = 0.0;
    int em_iters_used = 0;
    double window_start = 0.0;
};

enum class EtaMode { Median, Fixed };

struct UadDcParams {
    double epsilon = 0.5;   // search half-width
    int kappa = 0;          // grid refinement; 0 -> 4 * M
    int em_iters = 5;       // U
    double eps3 = 1e-3;
    double freeze_nu = 1e-3;
    TurboParams turbo;
    double peak_scale = 4.0;  // eta'_th = median + scale * MAD
    double peak_threshold = 0.0;  // > 0 overrides the robust rule
    EtaMode eta_mode = EtaMode::Median;
    double eta_scale = 4.0;
    double eta_fixed = 0.0;
    double prior_gamma = 1.0;  // gamma assumed for every candidate
    bool keep_history = false;
};

// Everything fixed while delays move: P Y with P = (F F')^+, the posterior moments and sigma^2.
struct EmContext {
    const ShapingMatrices* shaping = nullptr;
    const PreamblePool* pool = nullptr;
    std::vector<int> preambles;
    CMat PY;
    CMat g_hat;
    RVec v_g;
    double noise_var = 1.0;
};

EmContext make_em_context(const CMat& Y, const ShapingMatrices& shaping, const PreamblePool& pool,
                          std::vector<int> preambles, const CMat& g_hat, const RVec& v_g, double noise_var);

double em_objective(const RVec& tau, const EmContext& ctx);

// Coordinate ascent over k in order; grid {tau_k + j/kappa : |j| <= eps*kappa}.
// `frozen[k]` skips a candidate. Ties keep the incumbent, so G never decreases.
RVec greedy_calibrate(const RVec& tau_in, const EmContext& ctx, double epsilon, int kappa,
                      const std::vector<bool>& frozen = {});

std::vector<bool> threshold_activity(const CMat& g_hat, double eta_th);
double default_eta(const CMat& g_hat, const RVec& nu, int n_antennas, double scale);

struct EmSnapshot {
    RVec delays;
    CMat g_hat;
    RVec nu;
};

struct UadDcResult {
    DetectionReport report;
    std::vector<EmSnapshot> history;  // entry u: delays after u calibrations and the Turbo-CS at them
};

CandidateSet initial_candidates(const CMat& Y, const PreamblePool& pool, int m_osf, double window_start,
                                const UadDcParams& params);

UadDcResult uad_dc(const CMat& Y, const ShapingMatrices& shaping, const PreamblePool& pool, double noise_var,
                   double window_start, const UadDcParams& params);

}  // namespace ralab
