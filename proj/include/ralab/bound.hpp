#pragma once

#include <utility>
#include <vector>

#include "ralab/common.hpp"
#include "ralab/waveform.hpp"

namespace ralab {

struct BcrbReport {
    double variance_total = 0.0;
    double nmse_bound = 0.0;
    std::vector<std::pair<double, double>> per_snr;  // (snr_db, nmse_bound)
};

// X^H Z X / sigma^2 for grid-placed columns X.
CMat bim_data(const CMat& X, const ShapingMatrices& shaping, double noise_var);
// A^H Z^+ A / sigma^2 for already shaped columns A (off-grid delays).
CMat bim_shaped(const CMat& A, const ShapingMatrices& shaping, double noise_var);

// Var = N_R Tr((D + f Gamma^-1)^-1) with f = prior_factor (2 by default).
BcrbReport bcrb_from_bim(const CMat& D, const RVec& gamma, int n_antennas, double prior_factor = 2.0);
BcrbReport bcrb(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, double noise_var, int n_antennas,
                double prior_factor = 2.0);

// Noise variance giving `snr_db` for the expected received power sum_k gamma_k ||Z x_k||^2 / LM.
double expected_noise_var(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, double snr_db);

// nmse_bound at each SNR with sigma^2 from expected_noise_var; fills per_snr.
BcrbReport bcrb_sweep(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, int n_antennas,
                      const std::vector<double>& snrs_db, double prior_factor = 2.0);

}  // namespace ralab
