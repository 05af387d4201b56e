#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "ralab/common.hpp"

namespace testutil {

inline std::string tmp_path(const std::string& name) {
    std::filesystem::create_directories(RALAB_TEST_TMP);
    return std::string(RALAB_TEST_TMP) + "/" + name;
}

inline ralab::CMat random_cmat(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    ralab::CMat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = {n(rng), n(rng)};
    return m;
}

inline double rel_err(const ralab::CMat& a, const ralab::CMat& b) {
    const double d = b.norm();
    return (a - b).norm() / (d > 0.0 ? d : 1.0);
}

}  // namespace testutil
