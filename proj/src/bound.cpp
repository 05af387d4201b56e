#include "ralab/bound.hpp"

#include <cmath>

namespace ralab {

CMat bim_data(const CMat& X, const ShapingMatrices& shaping, double noise_var) {
    if (X.rows() != shaping.lm) throw ShapeError("X rows do not match LM");
    require(noise_var > 0.0, "noise variance must be positive");
    return X.adjoint() * shaping.Z.cast<cx>() * X / noise_var;
}

CMat bim_shaped(const CMat& A, const ShapingMatrices& shaping, double noise_var) {
    if (A.rows() != shaping.lm) throw ShapeError("A rows do not match LM");
    require(noise_var > 0.0, "noise variance must be positive");
    return A.adjoint() * shaping.Z_pinv.cast<cx>() * A / noise_var;
}

BcrbReport bcrb_from_bim(const CMat& D, const RVec& gamma, int n_antennas, double prior_factor) {
    const Eigen::Index K = gamma.size();
    if (D.rows() != K || D.cols() != K) throw ShapeError("information matrix does not match gamma");
    require(n_antennas >= 1, "n_antennas must be positive");
    require(prior_factor > 0.0, "prior factor must be positive");
    for (Eigen::Index k = 0; k < K; ++k) require(gamma[k] > 0.0, "gamma entries must be positive");
    BcrbReport rep;
    if (K == 0) return rep;
    CMat J = 0.5 * (D + D.adjoint());
    for (Eigen::Index k = 0; k < K; ++k) J(k, k) += prior_factor / gamma[k];
    Eigen::LLT<CMat> llt(J);
    if (llt.info() != Eigen::Success) throw NumericError("Bayesian information matrix is not positive definite");
    const CMat Jinv = llt.solve(CMat::Identity(K, K));
    rep.variance_total = n_antennas * Jinv.trace().real();
    rep.nmse_bound = rep.variance_total / (n_antennas * gamma.sum());
    return rep;
}

BcrbReport bcrb(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, double noise_var, int n_antennas,
                double prior_factor) {
    if (X.cols() != gamma.size()) throw ShapeError("X columns do not match gamma");
    if (std::isinf(noise_var)) return bcrb_from_bim(CMat::Zero(X.cols(), X.cols()), gamma, n_antennas, prior_factor);
    return bcrb_from_bim(bim_data(X, shaping, noise_var), gamma, n_antennas, prior_factor);
}

double expected_noise_var(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, double snr_db) {
    if (X.cols() != gamma.size()) throw ShapeError("X columns do not match gamma");
    const CMat ZX = shaping.Z.cast<cx>() * X;
    double p = 0.0;
    for (Eigen::Index k = 0; k < X.cols(); ++k) p += gamma[k] * ZX.col(k).squaredNorm();
    if (!(p > 0.0)) throw NumericError("scenario carries no signal power");
    return p / (shaping.lm * std::pow(10.0, snr_db / 10.0));
}

BcrbReport bcrb_sweep(const CMat& X, const ShapingMatrices& shaping, const RVec& gamma, int n_antennas,
                      const std::vector<double>& snrs_db, double prior_factor) {
    BcrbReport last;
    std::vector<std::pair<double, double>> rows;
    for (double s : snrs_db) {
        last = bcrb(X, shaping, gamma, expected_noise_var(X, shaping, gamma, s), n_antennas, prior_factor);
        rows.emplace_back(s, last.nmse_bound);
    }
    last.per_snr = std::move(rows);
    return last;
}

}  // namespace ralab
