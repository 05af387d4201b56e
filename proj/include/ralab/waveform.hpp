#pragma once

#include <string>
#include <vector>

#include "ralab/common.hpp"

namespace ralab {

// Sampled combined response z = q * m on the grid t = i/M, |t| <= 3.
struct PulseShape {
    int m_osf = 1;
    RVec taps;  // length 6M+1, taps[3M] is z(0)
    std::string label;

    int half() const { return 3 * m_osf; }
    // z(t) off the grid: Catmull-Rom cubic through the taps, zero for |t| > 3.
    double at(double t) const;
};

struct ShapingMatrices {
    int m_osf = 1;
    int window_len = 0;
    int lm = 0;
    PulseShape pulse;
    RMat Z;
    RMat F;       // symmetric PSD square root of Z
    RMat Z_pinv;  // (F F')^+ with eigenvalues below 1e-10 * max clipped
    RMat F_pinv;
    double min_eig = 0.0;
};

PulseShape rrc_combined(double beta, int m_osf);
PulseShape gaussian_combined(double sigma_sq, int m_osf);
PulseShape delta_pulse(int m_osf);
PulseShape pulse_from_taps(const RVec& taps, int m_osf, std::string label);

// Throws SpectralError if Z has an eigenvalue below -1e-8.
ShapingMatrices build_shaping_matrices(const PulseShape& pulse, int window_len_symbols);

// Zero-padded DFT of the taps with the center tap at index 0.
CVec spectrum(const PulseShape& pulse, int n_fft);
// Real spectrum of symmetric taps on bins 0..n_fft/2.
RVec real_half_spectrum(const RVec& taps, int n_fft);

// Minimum-phase q (length 3M+1) with q conv reverse(q) = taps, by the cepstral method.
RVec fejer_riesz_factorize(const PulseShape& pulse, int n_fft);
RVec autocorrelation(const RVec& q);

// Box on the real spectrum of symmetric, unit-center taps with `support` free
// lags: lo[k] <= F_k <= hi[k] on bins k = 0..bins/2 (hi may be +inf).
struct SpectralBox {
    int bins = 1024;
    int support = 0;
    RVec lo;
    RVec hi;
};
SpectralBox nonnegative_box(int support, int bins, double floor);
// Nearest free-tap vector (Euclidean on the full symmetric taps) inside the box.
// Throws ProjectionError when the box is empty.
RVec project_free_taps(const RVec& free_taps, const SpectralBox& box);
double box_violation(const RVec& free_taps, const SpectralBox& box);

// Nearest pulse with the same support whose spectrum is >= floor, so that
// Z is PSD and the pulse factors into matched transmit/receive filters.
PulseShape realizable(const PulseShape& pulse, double floor = 1e-6, int bins = 2048);

// "rrc:0.4", "gauss:0.49", "delta" -> realizable pulse.
PulseShape catalog_pulse(const std::string& spec, int m_osf);
std::vector<std::string> default_catalog();

// Tap CSV: header "time_over_Ts,value", one row per tap.
void write_taps_csv(const PulseShape& pulse, const std::string& path);
PulseShape read_taps_csv(const std::string& path, std::string label = "file");

}  // namespace ralab
