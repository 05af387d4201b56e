#include "ralab/airsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ralab {

void ScenarioConfig::validate() const {
    require(n_users >= 1, "n_users must be positive");
    require(n_active >= 0 && n_active <= n_users, "n_active must lie in [0, n_users]");
    require(n_antennas >= 1, "n_antennas must be positive");
    require(preamble_len >= 2, "preamble_len must be >= 2");
    require(n_preambles >= 1 && n_preambles <= preamble_len - 1, "n_preambles must lie in [1, preamble_len-1]");
    require(window_len > preamble_len, "window_len must exceed preamble_len");
    require(m_osf >= 1, "m_osf must be positive");
    require(gamma_db_hi >= gamma_db_lo, "gamma_db range is reversed");
    require(horizon_symbols >= 1, "horizon_symbols must be positive");
}

const char* to_string(WindowType t) {
    switch (t) {
        case WindowType::I: return "I";
        case WindowType::II: return "II";
        case WindowType::III: return "III";
        default: return "IV";
    }
}

int WindowScene::n_type1() const {
    return static_cast<int>(std::count(types.begin(), types.end(), WindowType::I));
}

WindowType classify_preamble(double delay, double window_start, int window_len, int preamble_len) {
    const double d = delay - window_start;
    const double span = window_len - preamble_len;
    if (d >= 0.0 && d <= span) return WindowType::I;
    if (d >= -preamble_len && d < 0.0) return WindowType::II;
    if (d > span && d <= window_len) return WindowType::III;
    return WindowType::IV;
}

double window_step(int window_len, int preamble_len) {
    require(window_len > preamble_len, "window_len must exceed preamble_len");
    return static_cast<double>(window_len - preamble_len);
}

namespace {

long sample_index(double delay_in_window, int n, int m_osf) {
    return static_cast<long>(std::floor((delay_in_window + n) * m_osf + 0.5));
}

}  // namespace

CVec place_preamble(const PreambleSequence& seq, double delay_in_window, int window_len, int m_osf) {
    const long lm = static_cast<long>(window_len) * m_osf;
    CVec x = CVec::Zero(lm);
    for (int n = 0; n < seq.length; ++n) {
        const long pos = sample_index(delay_in_window, n, m_osf);
        if (pos >= 0 && pos < lm) x[pos] += seq.symbols[n];
    }
    return x;
}

CVec shaped_column(const PreambleSequence& seq, double delay_in_window, const PulseShape& pulse, int window_len) {
    const int m = pulse.m_osf;
    const long lm = static_cast<long>(window_len) * m;
    CVec a = CVec::Zero(lm);
    for (int n = 0; n < seq.length; ++n) {
        const long pos = sample_index(delay_in_window, n, m);
        if (pos < 0 || pos >= lm) continue;
        const double c = delay_in_window + n;
        const long i0 = std::max(0L, static_cast<long>(std::ceil((c - 3.0) * m)));
        const long i1 = std::min(lm - 1, static_cast<long>(std::floor((c + 3.0) * m)));
        for (long i = i0; i <= i1; ++i) a[i] += seq.symbols[n] * pulse.at(static_cast<double>(i) / m - c);
    }
    return a;
}

CMat shaped_matrix(const PreamblePool& pool, const std::vector<int>& preambles, const RVec& delays_in_window,
                   const PulseShape& pulse, int window_len) {
    if (static_cast<Eigen::Index>(preambles.size()) != delays_in_window.size())
        throw ShapeError("preamble and delay vectors differ in length");
    CMat A(static_cast<Eigen::Index>(window_len) * pulse.m_osf, static_cast<Eigen::Index>(preambles.size()));
    for (std::size_t k = 0; k < preambles.size(); ++k)
        A.col(k) = shaped_column(pool.sequences.at(preambles[k]), delays_in_window[k], pulse, window_len);
    return A;
}

cx complex_normal(std::mt19937_64& rng, double var) {
    if (var <= 0.0) return {0.0, 0.0};
    std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
    const double re = nd(rng);
    const double im = nd(rng);
    return {re, im};
}

std::vector<Arrival> draw_arrivals(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::vector<int> ids(cfg.n_users);
    std::iota(ids.begin(), ids.end(), 0);
    // partial Fisher-Yates
    for (int i = 0; i < cfg.n_active; ++i) {
        std::uniform_int_distribution<int> pick(i, cfg.n_users - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    std::vector<int> active(ids.begin(), ids.begin() + cfg.n_active);
    std::sort(active.begin(), active.end());

    const double a = cfg.gamma_db_lo, b = cfg.gamma_db_hi;
    const double mean = (b > a) ? (std::pow(10.0, b / 10.0) - std::pow(10.0, a / 10.0)) / ((b - a) * std::log(10.0) / 10.0)
                                : std::pow(10.0, a / 10.0);
    std::uniform_real_distribution<double> ud(0.0, static_cast<double>(cfg.horizon_symbols));
    std::uniform_int_distribution<int> up(0, cfg.n_preambles - 1);
    std::uniform_real_distribution<double> ug(a, b);
    std::vector<Arrival> out;
    out.reserve(active.size());
    for (int u : active) {
        Arrival ar;
        ar.user = u;
        ar.delay = ud(rng);
        ar.preamble = up(rng);
        ar.gamma = std::pow(10.0, ug(rng) / 10.0) / mean;
        out.push_back(ar);
    }
    return out;
}

double noise_var_from_signal(const CMat& S, double snr_db) {
    const double lm = static_cast<double>(S.rows());
    const double nr = static_cast<double>(S.cols());
    return S.squaredNorm() / (lm * nr * std::pow(10.0, snr_db / 10.0));
}

WindowScene synthesize_window(const ScenarioConfig& cfg, const ShapingMatrices& shaping, const PreamblePool& pool,
                              double window_start, const std::vector<Arrival>& arrivals, std::mt19937_64& rng) {
    const int L = cfg.window_len;
    const int M = cfg.m_osf;
    if (shaping.m_osf != M || shaping.window_len != L) throw ShapeError("shaping matrices do not match the scenario");
    if (pool.length != cfg.preamble_len) throw ShapeError("preamble pool length does not match the scenario");
    const int lm = L * M;
    const int nr = cfg.n_antennas;

    WindowScene sc;
    sc.window_start = window_start;
    std::vector<CVec> xs, as;
    std::vector<double> dl, gm;
    for (const auto& ar : arrivals) {
        const WindowType t = classify_preamble(ar.delay, window_start, L, cfg.preamble_len);
        if (t == WindowType::IV) continue;
        const auto& seq = pool.sequences.at(ar.preamble);
        CVec x = place_preamble(seq, ar.delay - window_start, L, M);
        if (x.squaredNorm() == 0.0) continue;
        xs.push_back(std::move(x));
        as.push_back(shaped_column(seq, ar.delay - window_start, shaping.pulse, L));
        sc.users.push_back(ar.user);
        sc.types.push_back(t);
        sc.preamble_assignment.push_back(ar.preamble);
        dl.push_back(ar.delay);
        gm.push_back(ar.gamma);
    }
    const int k = static_cast<int>(xs.size());
    sc.true_delays = Eigen::Map<RVec>(dl.data(), k);
    sc.gamma = Eigen::Map<RVec>(gm.data(), k);
    sc.X.resize(lm, k);
    sc.A.resize(lm, k);
    for (int i = 0; i < k; ++i) {
        sc.X.col(i) = xs[i];
        sc.A.col(i) = as[i];
    }
    sc.G.resize(k, nr);
    for (int i = 0; i < k; ++i)
        for (int a = 0; a < nr; ++a) sc.G(i, a) = complex_normal(rng, sc.gamma[i]);
    const CMat S = sc.A * sc.G;
    sc.noise_var = noise_var_from_signal(S, cfg.snr_db);
    // an empty window has no signal to reference; fall back to unit mean gain
    if (sc.noise_var == 0.0) sc.noise_var = std::pow(10.0, -cfg.snr_db / 10.0);
    sc.W.resize(lm, nr);
    for (int a = 0; a < nr; ++a)
        for (int i = 0; i < lm; ++i) sc.W(i, a) = complex_normal(rng, sc.noise_var);
    sc.Y = S + shaping.F.cast<cx>() * sc.W;
    return sc;
}

}  // namespace ralab
