#include "ralab/filtopt.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <tuple>

namespace ralab {

MaskSpec mask_from_pulse(const PulseShape& ref, int bins, double occupied, double stop_floor, double margin) {
    require(bins >= 8 && bins % 2 == 0, "mask bins must be even and >= 8");
    require(occupied > 0.0 && stop_floor >= 0.0 && margin >= 0.0, "mask parameters must be nonnegative");
    const RVec F = real_half_spectrum(ref.taps, bins);
    const double peak = F.cwiseAbs().maxCoeff();
    MaskSpec m;
    m.bins = bins;
    m.b_up.resize(F.size());
    for (Eigen::Index k = 0; k < F.size(); ++k)
        m.b_up[k] = std::abs(F[k]) >= occupied * peak ? peak * (1.0 + margin) : stop_floor * peak;
    return m;
}

MaskSpec constant_mask(double ceiling, int bins) {
    require(ceiling >= 0.0, "mask ceiling must be nonnegative");
    MaskSpec m;
    m.bins = bins;
    m.b_up = RVec::Constant(bins / 2 + 1, ceiling);
    return m;
}

SpectralBox mask_box(const MaskSpec& mask, int support, double floor) {
    if (mask.b_up.size() != mask.bins / 2 + 1) throw ShapeError("mask length does not match bins/2 + 1");
    SpectralBox b = nonnegative_box(support, mask.bins, floor);
    b.hi = mask.b_up;
    return b;
}

void write_mask_csv(const MaskSpec& mask, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << "bin_index,b_up\n" << std::setprecision(17);
    for (Eigen::Index k = 0; k < mask.b_up.size(); ++k) f << k << "," << mask.b_up[k] << "\n";
}

MaskSpec read_mask_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    std::string line;
    int ln = 0;
    std::vector<double> vals;
    while (std::getline(f, line)) {
        ++ln;
        if (line.empty() || (ln == 1 && line.rfind("bin_index", 0) == 0)) continue;
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw ParseError(path + ":" + std::to_string(ln) + ": expected bin_index,b_up");
        try {
            std::size_t pa = 0, pb = 0;
            const long k = std::stol(a, &pa);
            const double v = std::stod(b, &pb);
            if (k != static_cast<long>(vals.size())) throw ParseError(path + ":" + std::to_string(ln) + ": bins must be consecutive from 0");
            if (v < 0.0) throw ParseError(path + ":" + std::to_string(ln) + ": b_up must be nonnegative");
            vals.push_back(v);
        } catch (const std::logic_error&) {
            throw ParseError(path + ":" + std::to_string(ln) + ": malformed number");
        }
    }
    if (vals.size() < 5) throw ParseError(path + ": mask needs at least 5 bins");
    MaskSpec m;
    m.bins = 2 * (static_cast<int>(vals.size()) - 1);
    m.b_up = Eigen::Map<RVec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    return m;
}

DesignTerm build_design_term(const CMat& X, const RVec& gamma, double noise_var, int support, double prior_factor) {
    if (X.cols() != gamma.size()) throw ShapeError("X columns do not match gamma");
    require(noise_var > 0.0, "noise variance must be positive");
    require(support >= 0, "support must be nonnegative");
    const Eigen::Index lm = X.rows();
    DesignTerm t;
    t.B.push_back(X.adjoint() * X / noise_var);
    for (int i = 1; i <= support; ++i) {
        if (i >= lm) {
            t.B.push_back(CMat::Zero(X.cols(), X.cols()));
            continue;
        }
        const CMat P = X.topRows(lm - i).adjoint() * X.bottomRows(lm - i);
        t.B.push_back((P + P.adjoint()) / noise_var);
    }
    t.prior = CMat::Zero(X.cols(), X.cols());
    for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        require(gamma[k] > 0.0, "gamma entries must be positive");
        t.prior(k, k) = prior_factor / gamma[k];
    }
    return t;
}

DesignProblem build_design_problem(const CMat& X, const RVec& gamma, double noise_var, int m_osf, int n_antennas,
                                   int support, double prior_factor) {
    require(m_osf >= 1 && n_antennas >= 1, "m_osf and n_antennas must be positive");
    DesignProblem p;
    p.m_osf = m_osf;
    p.support = support < 0 ? 3 * m_osf : support;
    require(p.support <= 3 * m_osf, "support exceeds 3 M");
    p.n_antennas = n_antennas;
    p.terms.push_back(build_design_term(X, gamma, noise_var, p.support, prior_factor));
    return p;
}

void add_scenario(DesignProblem& problem, const CMat& X, const RVec& gamma, double noise_var, double prior_factor) {
    problem.terms.push_back(build_design_term(X, gamma, noise_var, problem.support, prior_factor));
}

CMat design_matrix(const DesignTerm& term, const RVec& z) {
    if (z.size() != static_cast<Eigen::Index>(term.B.size())) throw ShapeError("z length does not match the design problem");
    CMat A = term.prior;
    for (Eigen::Index i = 0; i < z.size(); ++i) A += z[i] * term.B[i];
    return A;
}

std::pair<double, RVec> objective_and_gradient(const DesignProblem& problem, const RVec& z) {
    require(!problem.terms.empty(), "design problem has no scenarios");
    double f = 0.0;
    RVec g = RVec::Zero(z.size());
    for (const auto& term : problem.terms) {
        const CMat A = design_matrix(term, z);
        const Eigen::Index K = A.rows();
        if (K == 0) continue;
        Eigen::LLT<CMat> llt(A);
        if (llt.info() != Eigen::Success) throw InfeasiblePointError("A(z) is not positive definite");
        const CMat Ai = llt.solve(CMat::Identity(K, K));
        for (Eigen::Index k = 0; k < K; ++k)
            if (!(Ai(k, k).real() > 0.0)) throw InfeasiblePointError("A(z) is not positive definite");
        f += problem.n_antennas * Ai.trace().real();
        const CMat Ai2 = Ai * Ai;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            g[i] -= problem.n_antennas * Ai2.cwiseProduct(term.B[i].transpose()).sum().real();
    }
    const double n = static_cast<double>(problem.terms.size());
    return {f / n, g / n};
}

double design_objective(const DesignProblem& problem, const RVec& z) { return objective_and_gradient(problem, z).first; }

RVec free_coefficients(const PulseShape& pulse, int support) {
    require(support <= pulse.half(), "support exceeds the pulse length");
    return pulse.taps.segment(pulse.half(), support + 1);
}

namespace {

PulseShape pulse_from_coeffs(const RVec& z, int m_osf, const std::string& label) {
    const int h = 3 * m_osf;
    RVec taps = RVec::Zero(2 * h + 1);
    for (Eigen::Index i = 0; i < z.size(); ++i) taps[h + i] = taps[h - i] = z[i];
    return pulse_from_taps(taps, m_osf, label);
}

}  // namespace

FilterDesignResult optimize_filter(const DesignProblem& problem, const MaskSpec& mask, const PulseShape& init,
                                   const FilterOptParams& params) {
    const int s = problem.support;
    if (init.m_osf != problem.m_osf) throw ShapeError("init pulse oversampling differs from the design problem");
    for (int i = s + 1; i <= init.half(); ++i)
        require(init.taps[init.half() + i] == 0.0, "init pulse has taps outside the design support");
    const SpectralBox box = mask_box(mask, s, params.spectral_floor);
    RVec z = free_coefficients(init, s);
    const double viol0 = box_violation(z.tail(s), box);
    if (viol0 > params.feas_tol)
        throw ParameterError("init pulse violates the spectral mask by " + std::to_string(viol0));

    auto [f, g] = [&] {
        try {
            return objective_and_gradient(problem, z);
        } catch (const InfeasiblePointError&) {
            throw ParameterError("A(init) is not positive definite");
        }
    }();

    FilterDesignResult res;
    res.init_objective = f;
    res.objective_trace.push_back(f);
    res.max_violation = std::max(0.0, viol0);
    double step = 1.0;
    for (int it = 0; it < params.max_iters; ++it) {
        // the free taps appear twice in the symmetric filter, so the tap-space gradient is g/2
        const RVec dir = g.tail(s) / 2.0;
        bool accepted = false;
        RVec zn;
        double fn = 0.0;
        RVec gn;
        while (step > 1e-14) {
            zn = z;
            zn.tail(s) = project_free_taps(z.tail(s) - step * dir, box);
            try {
                std::tie(fn, gn) = objective_and_gradient(problem, zn);
                if (fn <= f - params.armijo * g.tail(s).dot(z.tail(s) - zn.tail(s)) && fn <= f) {
                    accepted = true;
                    break;
                }
            } catch (const InfeasiblePointError&) {
            }
            step /= 2.0;
        }
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double viol = box_violation(zn.tail(s), box);
        if (viol > params.feas_tol) throw ProjectionError("projected iterate violates the mask by " + std::to_string(viol));
        res.max_violation = std::max(res.max_violation, viol);
        const double rel = std::abs(f - fn) / std::max(std::abs(f), 1e-300);
        z = zn;
        f = fn;
        g = gn;
        res.objective_trace.push_back(f);
        res.iterations = it + 1;
        step *= 4.0;
        if (rel < params.rel_tol) {
            res.converged = true;
            break;
        }
    }
    res.objective = f;
    res.pulse = pulse_from_coeffs(z, problem.m_osf, "optimized");
    return res;
}

}  // namespace ralab
