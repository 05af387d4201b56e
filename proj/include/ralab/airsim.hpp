#pragma once

#include <random>
#include <vector>

#include "ralab/common.hpp"
#include "ralab/preambles.hpp"
#include "ralab/waveform.hpp"

namespace ralab {

struct ScenarioConfig {
    int n_users = 100;
    int n_active = 30;
    int n_antennas = 8;
    int n_preambles = 16;
    int preamble_len = 31;
    int window_len = 47;
    int m_osf = 2;
    double snr_db = 10.0;
    double gamma_db_lo = -128.1;
    double gamma_db_hi = -118.1;
    int horizon_symbols = 160;
    std::uint64_t seed = 1;

    void validate() const;
};

enum class WindowType { I, II, III, IV };
const char* to_string(WindowType t);

struct Arrival {
    int user = 0;
    double delay = 0.0;  // absolute, T_S units
    int preamble = 0;
    double gamma = 1.0;  // large-scale gain, normalised to unit ensemble mean
};

struct WindowScene {
    double window_start = 0.0;
    std::vector<int> users;          // Type I-III users present in the window
    std::vector<WindowType> types;
    RVec true_delays;                // absolute
    std::vector<int> preamble_assignment;
    RVec gamma;
    CMat G;  // K_real x N_R
    CMat X;  // LM x K_real, grid-quantised placement
    CMat A;  // LM x K_real, pulse-shaped columns at the exact delays ("Z X(tau)")
    CMat W;
    CMat Y;
    double noise_var = 0.0;
    int n_type1() const;
};

WindowType classify_preamble(double delay, double window_start, int window_len, int preamble_len);
double window_step(int window_len, int preamble_len);

// Zero-insertion placement; symbol n goes to sample round((d + n) M), dropped outside [0, LM).
CVec place_preamble(const PreambleSequence& seq, double delay_in_window, int window_len, int m_osf);
// Entry i = sum_n x_n z(i/M - d - n) over the symbols kept by place_preamble.
CVec shaped_column(const PreambleSequence& seq, double delay_in_window, const PulseShape& pulse, int window_len);
CMat shaped_matrix(const PreamblePool& pool, const std::vector<int>& preambles, const RVec& delays_in_window,
                   const PulseShape& pulse, int window_len);

std::vector<Arrival> draw_arrivals(const ScenarioConfig& cfg, std::uint64_t seed);

// Gains, noise and sigma^2 from the realised signal at cfg.snr_db.
WindowScene synthesize_window(const ScenarioConfig& cfg, const ShapingMatrices& shaping, const PreamblePool& pool,
                              double window_start, const std::vector<Arrival>& arrivals, std::mt19937_64& rng);

// sigma^2 = Tr(S^H S) / (LM N_R 10^(snr/10))
double noise_var_from_signal(const CMat& S, double snr_db);

cx complex_normal(std::mt19937_64& rng, double var);

}  // namespace ralab
