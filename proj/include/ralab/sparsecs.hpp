#pragma once

#include <utility>

#include "ralab/common.hpp"
#include "ralab/waveform.hpp"

namespace ralab {

// Columns of `mean` are antennas; one scalar variance per antenna.
struct GaussianBelief {
    CMat mean;
    RVec var;
};

// Eigendecomposition of F^+ A A^H F^+ = Q diag(eigvals) Q^H, where A = Z X(tau)
// is the shaped sensing matrix. Q is unitary (complex in general).
struct EigCache {
    CMat Q;
    RVec eigvals;
    CMat FQ;
    CMat FQ_inv;  // Q^H F^+
    CMat B;       // FQ_inv * A, so B B^H = diag(eigvals)
};

struct PriorSpec {
    RVec gamma;
    double rho = 0.5;
};

struct TurboParams {
    int outer_iters = 10;  // J_O
    int inner_iters = 30;  // J_I
    double eps1 = 1e-6;
    double eps2 = 1e-6;
    double rho_init = 0.5;  // replaces rho(0) = 0, which would zero every nu
    double clamp = 0.999;
};

struct TurboResult {
    GaussianBelief post;  // module-B posterior (g_hat, V^G)
    RVec nu;
    double rho = 0.0;
    bool converged = false;
    int outer_used = 0;
    int inner_total = 0;
};

EigCache build_eig_cache(const ShapingMatrices& shaping, const CMat& A);

// Module A through the cache. The trace term uses the eigenvalues directly.
GaussianBelief lmmse_posterior(const GaussianBelief& pri, const CMat& Y, const EigCache& cache, double noise_var);
// Literal form with (A A^H + sigma^2/v F F^H)^{-1}; reference for the cache path.
GaussianBelief lmmse_posterior_direct(const GaussianBelief& pri, const CMat& Y, const ShapingMatrices& shaping,
                                      const CMat& A, double noise_var);

GaussianBelief extrinsic(const GaussianBelief& post, const GaussianBelief& pri);

// Bernoulli-Gaussian MMSE denoiser. nu_k combines all antennas in the log domain.
std::pair<GaussianBelief, RVec> denoiser_posterior(const GaussianBelief& pri, const PriorSpec& prior);

double update_rho(const RVec& nu);

TurboResult run_turbo_cs(const CMat& Y, const ShapingMatrices& shaping, const CMat& A, const PriorSpec& prior,
                         double noise_var, const TurboParams& params = {});
TurboResult run_turbo_cs(const CMat& Y, const EigCache& cache, const PriorSpec& prior, double noise_var,
                         const TurboParams& params = {});

}  // namespace ralab
