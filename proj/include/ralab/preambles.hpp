#pragma once

#include <vector>

#include "ralab/common.hpp"

namespace ralab {

struct PreambleSequence {
    int root = 0;
    int length = 0;
    CVec symbols;
};

struct PreamblePool {
    std::vector<PreambleSequence> sequences;
    int length = 0;
    int size() const { return static_cast<int>(sequences.size()); }
};

struct Candidate {
    int preamble = 0;
    double delay = 0.0;  // absolute, T_S units
    double peak = 0.0;
};

struct CandidateSet {
    std::vector<Candidate> entries;
    double window_start = 0.0;
};

PreambleSequence generate_zc(int root, int length);
PreamblePool build_pool(int n_preambles, int length);

// r[i][m] = sum_nR |sum_n y(n + m - M N_PL, nR) conj(xlo_i[n])|, m = 0 .. LM + M*N_PL - 1,
// with xlo_i the zero-insertion upsampled preamble and y zero outside [0, LM).
// Lag m therefore lines up with an in-window delay of m/M - N_PL.
std::vector<RVec> cross_correlate(const CMat& y, const PreamblePool& pool, int m_osf);

// Non-maximum suppression over ceil(M/2) samples. A peak at lag m maps to
// delay window_start + m/M - preamble_len.
CandidateSet extract_candidates(const std::vector<RVec>& r, double threshold, int m_osf, double window_start,
                                int preamble_len);

// median + scale * MAD over every entry of r.
double robust_peak_threshold(const std::vector<RVec>& r, double scale = 4.0);

double median(std::vector<double> v);

}  // namespace ralab
