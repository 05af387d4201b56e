#include "ralab/sparsecs.hpp"

#include <cmath>
#include <limits>

namespace ralab {

namespace {

void check_finite(const CMat& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string(what) + " has non-finite entries");
}

// Range-space cache from the K x K Gram matrix; the null space of
// F^+ A A^H F^+ contributes nothing to module A, so it is not formed.
EigCache build_thin_cache(const ShapingMatrices& shaping, const CMat& A) {
    const CMat Fp = shaping.F_pinv.cast<cx>();
    const CMat Mx = Fp * A;
    const CMat gram = Mx.adjoint() * Mx;
    Eigen::SelfAdjointEigenSolver<CMat> es(gram);
    if (es.info() != Eigen::Success) throw NumericError("Gram eigendecomposition failed");
    const RVec& w = es.eigenvalues();
    const double wmax = w.size() ? std::max(w.maxCoeff(), 0.0) : 0.0;
    std::vector<int> keep;
    for (int i = 0; i < w.size(); ++i)
        if (w[i] > 1e-12 * wmax && w[i] > 0.0) keep.push_back(i);
    const int r = static_cast<int>(keep.size());
    EigCache c;
    c.eigvals.resize(r);
    c.Q.resize(Mx.rows(), r);
    for (int j = 0; j < r; ++j) {
        c.eigvals[j] = w[keep[j]];
        c.Q.col(j) = Mx * es.eigenvectors().col(keep[j]) / std::sqrt(w[keep[j]]);
    }
    c.FQ = shaping.F.cast<cx>() * c.Q;
    c.FQ_inv = c.Q.adjoint() * Fp;
    c.B = c.FQ_inv * A;
    return c;
}

GaussianBelief lmmse_projected(const GaussianBelief& pri, const CMat& CY, const EigCache& cache, double noise_var) {
    const Eigen::Index K = pri.mean.rows();
    const Eigen::Index nr = pri.mean.cols();
    GaussianBelief post;
    post.mean.resize(K, nr);
    post.var.resize(nr);
    for (Eigen::Index a = 0; a < nr; ++a) {
        const double v = pri.var[a];
        const double c = noise_var / v;
        RVec d = cache.eigvals.array() + c;
        if ((d.array() <= 0.0).any() || !d.allFinite()) throw NumericError("singular LMMSE system (eigval + sigma^2/v <= 0)");
        const CVec res = CY.col(a) - cache.B * pri.mean.col(a);
        const CVec scaled = res.cwiseQuotient(d.cast<cx>());
        post.mean.col(a) = pri.mean.col(a) + cache.B.adjoint() * scaled;
        const double tr = (cache.eigvals.array() / d.array()).sum();
        post.var[a] = v - v * tr / static_cast<double>(K);
    }
    return post;
}

void clamp_var(GaussianBelief& post, const GaussianBelief& pri, double clamp) {
    for (Eigen::Index a = 0; a < post.var.size(); ++a) {
        post.var[a] = std::min(post.var[a], clamp * pri.var[a]);
        post.var[a] = std::max(post.var[a], 1e-12 * pri.var[a]);
    }
}

}  // namespace

EigCache build_eig_cache(const ShapingMatrices& shaping, const CMat& A) {
    if (A.rows() != shaping.lm) throw ShapeError("sensing matrix rows do not match LM");
    check_finite(A, "sensing matrix");
    const CMat Fp = shaping.F_pinv.cast<cx>();
    const CMat Mx = Fp * A;
    const CMat H = Mx * Mx.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    EigCache c;
    c.Q = es.eigenvectors();
    c.eigvals = es.eigenvalues();
    for (Eigen::Index i = 0; i < c.eigvals.size(); ++i)
        if (c.eigvals[i] < 0.0) {
            if (c.eigvals[i] < -1e-8) throw NumericError("negative eigenvalue in F^+ A A^H F^+");
            c.eigvals[i] = 0.0;
        }
    c.FQ = shaping.F.cast<cx>() * c.Q;
    c.FQ_inv = c.Q.adjoint() * Fp;
    c.B = c.FQ_inv * A;
    return c;
}

GaussianBelief lmmse_posterior(const GaussianBelief& pri, const CMat& Y, const EigCache& cache, double noise_var) {
    if (pri.mean.rows() != cache.B.cols() || Y.cols() != pri.mean.cols()) throw ShapeError("lmmse_posterior: shape mismatch");
    for (Eigen::Index a = 0; a < pri.var.size(); ++a)
        if (!(pri.var[a] > 0.0) || !std::isfinite(pri.var[a])) throw ParameterError("prior variance must be finite and positive");
    return lmmse_projected(pri, cache.FQ_inv * Y, cache, noise_var);
}

GaussianBelief lmmse_posterior_direct(const GaussianBelief& pri, const CMat& Y, const ShapingMatrices& shaping,
                                      const CMat& A, double noise_var) {
    const Eigen::Index K = pri.mean.rows();
    const Eigen::Index nr = pri.mean.cols();
    const CMat FF = (shaping.F * shaping.F.transpose()).cast<cx>();
    const CMat AA = A * A.adjoint();
    GaussianBelief post;
    post.mean.resize(K, nr);
    post.var.resize(nr);
    for (Eigen::Index a = 0; a < nr; ++a) {
        const double v = pri.var[a];
        const CMat S = AA + (noise_var / v) * FF;
        Eigen::PartialPivLU<CMat> lu(S);
        post.mean.col(a) = pri.mean.col(a) + A.adjoint() * lu.solve(Y.col(a) - A * pri.mean.col(a));
        const CMat T = A.adjoint() * lu.solve(A);
        post.var[a] = v - v * T.trace().real() / static_cast<double>(K);
    }
    return post;
}

GaussianBelief extrinsic(const GaussianBelief& post, const GaussianBelief& pri) {
    GaussianBelief ext;
    ext.mean.resize(post.mean.rows(), post.mean.cols());
    ext.var.resize(post.var.size());
    for (Eigen::Index a = 0; a < post.var.size(); ++a) {
        const double vp = post.var[a];
        const double vq = pri.var[a];
        if (!(vp < vq)) throw DegenerateMessageError("extrinsic: posterior variance is not below the prior variance");
        const double inv_q = std::isinf(vq) ? 0.0 : 1.0 / vq;
        const double ve = 1.0 / (1.0 / vp - inv_q);
        ext.var[a] = ve;
        if (std::isinf(vq))
            ext.mean.col(a) = post.mean.col(a);
        else
            ext.mean.col(a) = ve * (post.mean.col(a) / vp - pri.mean.col(a) / vq);
    }
    return ext;
}

std::pair<GaussianBelief, RVec> denoiser_posterior(const GaussianBelief& pri, const PriorSpec& prior) {
    const Eigen::Index K = pri.mean.rows();
    const Eigen::Index nr = pri.mean.cols();
    if (prior.gamma.size() != K) throw ShapeError("prior gamma length does not match K");
    GaussianBelief post;
    post.mean.resize(K, nr);
    post.var = RVec::Zero(nr);
    RVec nu(K);
    const double rho = prior.rho;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double g = prior.gamma[k];
        double llr = 0.0;
        for (Eigen::Index a = 0; a < nr; ++a) {
            const double v = pri.var[a];
            const double p2 = std::norm(pri.mean(k, a));
            llr += std::log(v) - std::log(g + v) + p2 / v - p2 / (g + v);
        }
        double n;
        if (rho <= 0.0)
            n = 0.0;
        else if (rho >= 1.0)
            n = 1.0;
        else {
            const double x = std::log(rho) - std::log1p(-rho) + llr;
            n = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
        nu[k] = n;
        for (Eigen::Index a = 0; a < nr; ++a) {
            const double v = pri.var[a];
            const cx m = pri.mean(k, a) * (g / (g + v));
            const double s = g * v / (g + v);
            const cx gp = n * m;
            post.mean(k, a) = gp;
            post.var[a] += n * (std::norm(m) + s) - std::norm(gp);
        }
    }
    if (K > 0) post.var /= static_cast<double>(K);
    return {post, nu};
}

double update_rho(const RVec& nu) {
    if (nu.size() == 0) return 0.0;
    return nu.mean();
}

TurboResult run_turbo_cs(const CMat& Y, const ShapingMatrices& shaping, const CMat& A, const PriorSpec& prior,
                         double noise_var, const TurboParams& params) {
    if (A.rows() != shaping.lm || Y.rows() != shaping.lm) throw ShapeError("run_turbo_cs: row count differs from LM");
    if (A.cols() == 0) {
        TurboResult r;
        r.post.mean.resize(0, Y.cols());
        r.post.var = RVec::Zero(Y.cols());
        r.converged = true;
        return r;
    }
    check_finite(A, "sensing matrix");
    return run_turbo_cs(Y, build_thin_cache(shaping, A), prior, noise_var, params);
}

TurboResult run_turbo_cs(const CMat& Y, const EigCache& cache, const PriorSpec& prior, double noise_var,
                         const TurboParams& params) {
    const Eigen::Index K = cache.B.cols();
    const Eigen::Index nr = Y.cols();
    TurboResult out;
    if (K == 0) {
        out.post.mean.resize(0, nr);
        out.post.var = RVec::Zero(nr);
        out.converged = true;
        return out;
    }
    if (prior.gamma.size() != K) throw ShapeError("prior gamma length does not match K");
    require(noise_var > 0.0, "noise variance must be positive");
    const CMat CY = cache.FQ_inv * Y;

    GaussianBelief priA{CMat::Zero(K, nr), RVec::Ones(nr)};
    PriorSpec pr = prior;
    pr.rho = params.rho_init;
    GaussianBelief postB;
    RVec nu = RVec::Zero(K);
    RVec prev_vB = RVec::Constant(nr, std::numeric_limits<double>::quiet_NaN());
    for (int jo = 0; jo < params.outer_iters; ++jo) {
        out.outer_used = jo + 1;
        for (int ji = 0; ji < params.inner_iters; ++ji) {
            ++out.inner_total;
            GaussianBelief postA = lmmse_projected(priA, CY, cache, noise_var);
            clamp_var(postA, priA, params.clamp);
            const GaussianBelief priB = extrinsic(postA, priA);
            auto [pb, n] = denoiser_posterior(priB, pr);
            postB = std::move(pb);
            nu = std::move(n);
            GaussianBelief postBc = postB;
            clamp_var(postBc, priB, params.clamp);
            priA = extrinsic(postBc, priB);
            const double dv = (postB.var - prev_vB).cwiseAbs().sum();
            prev_vB = postB.var;
            if (dv < params.eps1) break;
        }
        const double rho_new = update_rho(nu);
        const double drho = std::abs(rho_new - pr.rho);
        pr.rho = rho_new;
        if (drho < params.eps2) {
            out.converged = true;
            break;
        }
    }
    out.post = std::move(postB);
    out.nu = std::move(nu);
    out.rho = pr.rho;
    return out;
}

}  // namespace ralab
