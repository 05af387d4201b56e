#include "ralab/preambles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ralab {

PreambleSequence generate_zc(int root, int length) {
    require(length >= 2, "preamble length must be >= 2");
    require(root >= 1 && root < length, "zc root must lie in [1, length-1]");
    PreambleSequence s;
    s.root = root;
    s.length = length;
    s.symbols.resize(length);
    for (int n = 0; n < length; ++n) {
        // reduce n(n+1)*root mod 2*length before scaling to keep the phase exact
        const long long k = (static_cast<long long>(n) * (n + 1) % (2LL * length)) * root % (2LL * length);
        const double ph = -std::numbers::pi * static_cast<double>(k) / length;
        s.symbols[n] = cx(std::cos(ph), std::sin(ph));
    }
    return s;
}

PreamblePool build_pool(int n_preambles, int length) {
    require(n_preambles >= 1, "n_preambles must be positive");
    require(n_preambles <= length - 1, "n_preambles exceeds the number of zc roots (length-1)");
    PreamblePool p;
    p.length = length;
    for (int r = 1; r <= n_preambles; ++r) p.sequences.push_back(generate_zc(r, length));
    return p;
}

std::vector<RVec> cross_correlate(const CMat& y, const PreamblePool& pool, int m_osf) {
    require(m_osf >= 1, "m_osf must be positive");
    const int lm = static_cast<int>(y.rows());
    const int nr = static_cast<int>(y.cols());
    const int npl = pool.length;
    const int n_lags = lm + m_osf * npl;
    std::vector<RVec> out;
    out.reserve(pool.sequences.size());
    for (const auto& seq : pool.sequences) {
        if (seq.length != npl) throw ShapeError("pool sequences have inconsistent length");
        RVec r = RVec::Zero(n_lags);
        for (int m = 0; m < n_lags; ++m) {
            double acc = 0.0;
            for (int a = 0; a < nr; ++a) {
                cx s(0.0, 0.0);
                // only every M-th template entry is nonzero
                for (int n = 0; n < npl; ++n) {
                    const int idx = m - m_osf * npl + n * m_osf;
                    if (idx < 0) continue;
                    if (idx >= lm) break;
                    s += y(idx, a) * std::conj(seq.symbols[n]);
                }
                acc += std::abs(s);
            }
            r[m] = acc;
        }
        out.push_back(std::move(r));
    }
    return out;
}

CandidateSet extract_candidates(const std::vector<RVec>& r, double threshold, int m_osf, double window_start,
                                int preamble_len) {
    require(threshold > 0.0, "peak threshold must be positive");
    require(m_osf >= 1, "m_osf must be positive");
    const int rad = (m_osf + 1) / 2;
    CandidateSet cs;
    require(preamble_len >= 1, "preamble_len must be positive");
    const double span = preamble_len;
    cs.window_start = window_start;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const RVec& v = r[i];
        const int n = static_cast<int>(v.size());
        for (int m = 0; m < n; ++m) {
            if (!(v[m] > threshold)) continue;
            bool is_max = true;
            // ties resolve to the earliest lag
            for (int d = 1; d <= rad && is_max; ++d) {
                if (m - d >= 0 && v[m - d] >= v[m]) is_max = false;
                if (m + d < n && v[m + d] > v[m]) is_max = false;
            }
            if (is_max)
                cs.entries.push_back({static_cast<int>(i), window_start + static_cast<double>(m) / m_osf - span, v[m]});
        }
    }
    return cs;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    double m = v[h];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + h));
    }
    return m;
}

double robust_peak_threshold(const std::vector<RVec>& r, double scale) {
    std::vector<double> all;
    for (const auto& v : r) all.insert(all.end(), v.data(), v.data() + v.size());
    const double med = median(all);
    for (auto& x : all) x = std::abs(x - med);
    const double mad = median(all);
    return med + scale * mad;
}

}  // namespace ralab
