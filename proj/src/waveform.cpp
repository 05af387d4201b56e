#include "ralab/waveform.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "ralab/qp.hpp"

namespace ralab {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double raised_cosine(double t, double beta) {
    if (beta > 0.0) {
        const double den = 1.0 - (2.0 * beta * t) * (2.0 * beta * t);
        if (std::abs(den) < 1e-10) return std::numbers::pi / 4.0 * sinc(1.0 / (2.0 * beta));
        return sinc(t) * std::cos(std::numbers::pi * beta * t) / den;
    }
    return sinc(t);
}

void check_symmetric(const RVec& taps) {
    const Eigen::Index n = taps.size();
    for (Eigen::Index i = 0; i < n / 2; ++i)
        if (std::abs(taps[i] - taps[n - 1 - i]) > 1e-12) throw ParameterError("pulse taps are not symmetric");
}

}  // namespace

double PulseShape::at(double t) const {
    const int h = half();
    if (std::abs(t) > 3.0 + 1e-12) return 0.0;
    const double u = t * m_osf + h;
    const double fl = std::floor(u);
    const int i0 = static_cast<int>(fl);
    const double f = u - fl;
    auto p = [&](int j) { return (j < 0 || j > 2 * h) ? 0.0 : taps[j]; };
    const double p0 = p(i0 - 1), p1 = p(i0), p2 = p(i0 + 1), p3 = p(i0 + 2);
    if (f == 0.0) return p1;
    return 0.5 * (2.0 * p1 + (p2 - p0) * f + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * f * f +
                  (3.0 * p1 - p0 - 3.0 * p2 + p3) * f * f * f);
}

PulseShape pulse_from_taps(const RVec& taps, int m_osf, std::string label) {
    require(m_osf >= 1, "m_osf must be positive");
    if (taps.size() != 6 * m_osf + 1) throw ShapeError("pulse needs 6*M+1 taps");
    check_symmetric(taps);
    const double c = taps[3 * m_osf];
    require(std::abs(c) > 0.0, "pulse center tap is zero");
    PulseShape p;
    p.m_osf = m_osf;
    p.label = std::move(label);
    p.taps = taps / c;
    // exact symmetry from here on
    const int n = static_cast<int>(p.taps.size());
    for (int i = 0; i < n / 2; ++i) {
        const double a = 0.5 * (p.taps[i] + p.taps[n - 1 - i]);
        p.taps[i] = a;
        p.taps[n - 1 - i] = a;
    }
    p.taps[3 * m_osf] = 1.0;
    return p;
}

PulseShape rrc_combined(double beta, int m_osf) {
    require(beta >= 0.0 && beta <= 1.0, "rrc beta must lie in [0, 1]");
    require(m_osf >= 1, "m_osf must be positive");
    const int h = 3 * m_osf;
    RVec taps(2 * h + 1);
    for (int i = -h; i <= h; ++i) taps[i + h] = raised_cosine(static_cast<double>(i) / m_osf, beta);
    std::ostringstream os;
    os << "rrc:" << beta;
    return pulse_from_taps(taps, m_osf, os.str());
}

PulseShape gaussian_combined(double sigma_sq, int m_osf) {
    require(sigma_sq > 0.0, "gaussian sigma_sq must be positive");
    require(m_osf >= 1, "m_osf must be positive");
    const int h = 3 * m_osf;
    RVec taps(2 * h + 1);
    for (int i = -h; i <= h; ++i) {
        const double t = static_cast<double>(i) / m_osf;
        taps[i + h] = std::exp(-t * t / (2.0 * sigma_sq));
    }
    std::ostringstream os;
    os << "gauss:" << sigma_sq;
    return pulse_from_taps(taps, m_osf, os.str());
}

PulseShape delta_pulse(int m_osf) {
    RVec taps = RVec::Zero(6 * m_osf + 1);
    taps[3 * m_osf] = 1.0;
    return pulse_from_taps(taps, m_osf, "delta");
}

ShapingMatrices build_shaping_matrices(const PulseShape& pulse, int window_len_symbols) {
    const int m = pulse.m_osf;
    const int h = pulse.half();
    const int lm = window_len_symbols * m;
    require(window_len_symbols >= 1, "window length must be positive");
    ShapingMatrices s;
    s.m_osf = m;
    s.window_len = window_len_symbols;
    s.lm = lm;
    s.pulse = pulse;
    s.Z = RMat::Zero(lm, lm);
    for (int i = 0; i < lm; ++i)
        for (int j = std::max(0, i - h); j <= std::min(lm - 1, i + h); ++j) s.Z(i, j) = pulse.taps[h + std::abs(i - j)];

    Eigen::SelfAdjointEigenSolver<RMat> es(s.Z);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of Z failed");
    const RVec& w = es.eigenvalues();
    s.min_eig = w.minCoeff();
    if (s.min_eig < -1e-8) {
        std::ostringstream os;
        os << "pulse '" << pulse.label << "' is not a valid autocorrelation at M=" << m << ": Z has eigenvalue "
           << s.min_eig;
        throw SpectralError(os.str());
    }
    const RMat& U = es.eigenvectors();
    const double wmax = std::max(w.maxCoeff(), 0.0);
    const double tol = 1e-10 * wmax;
    RVec sq(lm), inv(lm), isq(lm);
    for (int i = 0; i < lm; ++i) {
        const double wi = std::max(w[i], 0.0);
        sq[i] = std::sqrt(wi);
        inv[i] = wi > tol ? 1.0 / wi : 0.0;
        isq[i] = wi > tol ? 1.0 / std::sqrt(wi) : 0.0;
    }
    s.F = U * sq.asDiagonal() * U.transpose();
    s.Z_pinv = U * inv.asDiagonal() * U.transpose();
    s.F_pinv = U * isq.asDiagonal() * U.transpose();
    return s;
}

CVec spectrum(const PulseShape& pulse, int n_fft) {
    const int len = static_cast<int>(pulse.taps.size());
    require(n_fft >= len, "n_fft must be at least the number of taps");
    const int h = pulse.half();
    CVec out(n_fft);
    for (int k = 0; k < n_fft; ++k) {
        cx acc(0.0, 0.0);
        for (int i = 0; i < len; ++i) {
            const double ph = -2.0 * std::numbers::pi * static_cast<double>(k) * (i - h) / n_fft;
            acc += pulse.taps[i] * cx(std::cos(ph), std::sin(ph));
        }
        out[k] = acc;
    }
    return out;
}

RVec real_half_spectrum(const RVec& taps, int n_fft) {
    const int h = static_cast<int>(taps.size()) / 2;
    RVec out(n_fft / 2 + 1);
    for (int k = 0; k <= n_fft / 2; ++k) {
        double acc = taps[h];
        for (int i = 1; i <= h; ++i) acc += 2.0 * taps[h + i] * std::cos(2.0 * std::numbers::pi * i * k / n_fft);
        out[k] = acc;
    }
    return out;
}

RVec autocorrelation(const RVec& q) {
    const int n = static_cast<int>(q.size());
    RVec out = RVec::Zero(2 * n - 1);
    for (int lag = -(n - 1); lag <= n - 1; ++lag) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const int j = i + lag;
            if (j >= 0 && j < n) acc += q[i] * q[j];
        }
        out[lag + n - 1] = acc;
    }
    return out;
}

RVec fejer_riesz_factorize(const PulseShape& pulse, int n_fft) {
    const int len = static_cast<int>(pulse.taps.size());
    require(n_fft >= 16 * len, "n_fft must be at least 16x the number of taps");
    const RVec coarse = real_half_spectrum(pulse.taps, n_fft);
    if (coarse.minCoeff() < -1e-9) {
        std::ostringstream os;
        os << "spectrum of '" << pulse.label << "' is negative (min " << coarse.minCoeff() << "); no spectral factor";
        throw FactorizationError(os.str());
    }
    // A large internal grid keeps cepstral aliasing negligible when the
    // spectrum has near-zeros; a tiny relative floor keeps log() finite.
    int n = 1;
    while (n < std::max(n_fft, 1 << 16)) n <<= 1;
    const int h = pulse.half();
    std::vector<cx> buf(n, cx(0.0, 0.0)), spec;
    for (int i = -h; i <= h; ++i) buf[(i + n) % n] = pulse.taps[i + h];
    Eigen::FFT<double> fft;
    fft.fwd(spec, buf);
    double smax = 0.0;
    for (const auto& v : spec) smax = std::max(smax, v.real());
    const double reg = 1e-10 * smax;
    std::vector<cx> logs(n), cep;
    for (int k = 0; k < n; ++k) logs[k] = cx(0.5 * std::log(std::max(spec[k].real(), 0.0) + reg), 0.0);
    fft.inv(cep, logs);
    std::vector<cx> fold(n, cx(0.0, 0.0));
    fold[0] = cx(cep[0].real(), 0.0);
    for (int i = 1; i < n / 2; ++i) fold[i] = cx(2.0 * cep[i].real(), 0.0);
    fold[n / 2] = cx(cep[n / 2].real(), 0.0);
    std::vector<cx> fs, ex(n), qt;
    fft.fwd(fs, fold);
    for (int k = 0; k < n; ++k) ex[k] = std::exp(fs[k]);
    fft.inv(qt, ex);
    RVec q(h + 1);
    for (int i = 0; i <= h; ++i) q[i] = qt[i].real();
    return q;
}

SpectralBox nonnegative_box(int support, int bins, double floor) {
    SpectralBox b;
    b.bins = bins;
    b.support = support;
    b.lo = RVec::Constant(bins / 2 + 1, floor);
    b.hi = RVec::Constant(bins / 2 + 1, std::numeric_limits<double>::infinity());
    return b;
}

namespace {

RMat box_rows(const SpectralBox& box) {
    const int nk = box.bins / 2 + 1;
    RMat T(nk, box.support);
    for (int k = 0; k < nk; ++k)
        for (int i = 1; i <= box.support; ++i) T(k, i - 1) = 2.0 * std::cos(2.0 * std::numbers::pi * i * k / box.bins);
    return T;
}

}  // namespace

double box_violation(const RVec& free_taps, const SpectralBox& box) {
    const RVec F = RVec::Ones(box.bins / 2 + 1) + box_rows(box) * free_taps;
    double v = 0.0;
    for (Eigen::Index k = 0; k < F.size(); ++k) {
        v = std::max(v, box.lo[k] - F[k]);
        if (std::isfinite(box.hi[k])) v = std::max(v, F[k] - box.hi[k]);
    }
    return v;
}

RVec project_free_taps(const RVec& free_taps, const SpectralBox& box) {
    const int s = box.support;
    if (free_taps.size() != s) throw ShapeError("free tap vector does not match the box support");
    const int nk = box.bins / 2 + 1;
    if (box.lo.size() != nk || box.hi.size() != nk) throw ShapeError("spectral box bounds have the wrong length");
    const RMat T = box_rows(box);
    int n_hi = 0;
    for (int k = 0; k < nk; ++k) n_hi += std::isfinite(box.hi[k]) ? 1 : 0;
    RMat CI(s, nk + n_hi);
    RVec ci0(nk + n_hi);
    int c = 0;
    for (int k = 0; k < nk; ++k) {
        CI.col(c) = T.row(k).transpose();
        ci0[c++] = 1.0 - box.lo[k];
    }
    for (int k = 0; k < nk; ++k) {
        if (!std::isfinite(box.hi[k])) continue;
        CI.col(c) = -T.row(k).transpose();
        ci0[c++] = box.hi[k] - 1.0;
    }
    // full symmetric taps count each free lag twice
    const RMat G = 2.0 * RMat::Identity(s, s);
    const RVec g0 = -2.0 * free_taps;
    const QpResult r = solve_qp(G, g0, CI, ci0);
    if (!r.feasible) throw ProjectionError("spectral box is empty: no pulse satisfies the mask");
    return r.x;
}

PulseShape realizable(const PulseShape& pulse, double floor, int bins) {
    const int h = pulse.half();
    if (real_half_spectrum(pulse.taps, 16 * bins).minCoeff() >= floor) return pulse;
    // the constraint grid is refined until the spectrum is also nonnegative between bins
    for (int b = bins; b <= (1 << 17); b *= 4) {
        const SpectralBox box = nonnegative_box(h, b, floor);
        const RVec z = project_free_taps(pulse.taps.tail(h), box);
        RVec taps(2 * h + 1);
        taps[h] = 1.0;
        for (int i = 1; i <= h; ++i) taps[h + i] = taps[h - i] = z[i - 1];
        if (real_half_spectrum(taps, 16 * b).minCoeff() >= 0.0) return pulse_from_taps(taps, pulse.m_osf, pulse.label);
    }
    throw SpectralError("could not find a nonnegative-spectrum neighbour of '" + pulse.label + "'");
}

PulseShape catalog_pulse(const std::string& spec, int m_osf) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    double val = 0.0;
    if (colon != std::string::npos) {
        try {
            val = std::stod(spec.substr(colon + 1));
        } catch (const std::exception&) {
            throw ParameterError("bad filter parameter in '" + spec + "'");
        }
    }
    PulseShape p;
    if (kind == "rrc" && colon != std::string::npos)
        p = rrc_combined(val, m_osf);
    else if (kind == "gauss" && colon != std::string::npos)
        p = gaussian_combined(val, m_osf);
    else if (kind == "delta")
        p = delta_pulse(m_osf);
    else
        throw ParameterError("unknown filter '" + spec + "' (expected rrc:<beta>, gauss:<sigma_sq> or delta)");
    p.label = spec;
    return realizable(p);
}

std::vector<std::string> default_catalog() {
    return {"gauss:0.1", "rrc:1", "rrc:0", "gauss:0.5", "rrc:0.4", "gauss:0.49"};
}

void write_taps_csv(const PulseShape& pulse, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << "time_over_Ts,value\n" << std::setprecision(17);
    const int h = pulse.half();
    for (int i = -h; i <= h; ++i) f << static_cast<double>(i) / pulse.m_osf << "," << pulse.taps[i + h] << "\n";
}

PulseShape read_taps_csv(const std::string& path, std::string label) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open tap file " + path);
    std::string line;
    std::vector<double> t, v;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line.rfind("time_over_Ts", 0) == 0) continue;
        std::istringstream is(line);
        double a = 0, b = 0;
        char comma = 0;
        if (!(is >> a >> comma >> b) || comma != ',')
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'time_over_Ts,value'");
        t.push_back(a);
        v.push_back(b);
    }
    if (t.size() < 7 || t.size() % 6 != 1) throw ParseError(path + ": tap count must be 6*M+1");
    const int m = static_cast<int>((t.size() - 1) / 6);
    if (std::abs((t[1] - t[0]) * m - 1.0) > 1e-9) throw ParseError(path + ": tap spacing is not T_S/M");
    return pulse_from_taps(Eigen::Map<RVec>(v.data(), static_cast<Eigen::Index>(v.size())), m, std::move(label));
}

}  // namespace ralab
