#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ralab/airsim.hpp"
#include "ralab/preambles.hpp"

using namespace ralab;

TEST_SUITE("preambles") {

TEST_CASE("zc values for root 1 length 3") {
    const auto s = generate_zc(1, 3);
    CHECK(std::abs(s.symbols[0] - cx(1, 0)) < 1e-14);
    CHECK(std::abs(s.symbols[1] - std::exp(cx(0, -2.0 * M_PI / 3.0))) < 1e-14);
    CHECK(std::abs(s.symbols[2] - cx(1, 0)) < 1e-12);
}

TEST_CASE("zc sequences are unit modulus with ideal cyclic autocorrelation") {
    const auto s = generate_zc(5, 31);
    for (int n = 0; n < 31; ++n) CHECK(std::abs(s.symbols[n]) == doctest::Approx(1.0));
    for (int shift = 1; shift < 31; ++shift) {
        cx acc = 0.0;
        for (int n = 0; n < 31; ++n) acc += s.symbols[n] * std::conj(s.symbols[(n + shift) % 31]);
        CHECK(std::abs(acc) < 1e-9);
    }
}

TEST_CASE("pool sizes and roots") {
    const auto p = build_pool(64, 139);
    REQUIRE(p.size() == 64);
    for (int i = 0; i < 64; ++i) CHECK(p.sequences[i].root == i + 1);
    const auto one = build_pool(1, 3);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one.sequences[0].symbols[1] - std::exp(cx(0, -2.0 * M_PI / 3.0))) < 1e-14);
    CHECK_THROWS_AS(build_pool(3, 3), ParameterError);
    CHECK_THROWS_AS(build_pool(0, 31), ParameterError);
}

TEST_CASE("correlation of zero input is zero") {
    const auto pool = build_pool(4, 7);
    const auto r = cross_correlate(CMat::Zero(22, 2), pool, 2);
    REQUIRE(r.size() == 4);
    for (const auto& v : r) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noiseless user at delay 0 peaks at the lag of in-window delay 0") {
    // N_PL = 7, L = 11, Z = I: brute force says the peak is the full-overlap lag
    const int M = 2, L = 11;
    const auto pool = build_pool(3, 7);
    const CVec x = place_preamble(pool.sequences[1], 0.0, L, M);
    const CMat y = x;
    const auto r = cross_correlate(y, pool, M);
    Eigen::Index arg = 0;
    r[1].maxCoeff(&arg);
    CHECK(arg == M * pool.length);
    CHECK(r[1][arg] == doctest::Approx(7.0));
    const auto cs = extract_candidates(r, 6.0, M, 0.0, pool.length);
    REQUIRE(cs.entries.size() == 1);
    CHECK(cs.entries[0].preamble == 1);
    CHECK(cs.entries[0].delay == doctest::Approx(0.0));
}

TEST_CASE("partially visible user at negative delay still correlates") {
    const int M = 1, L = 11;
    const auto pool = build_pool(2, 7);
    const CMat y = place_preamble(pool.sequences[0], -3.0, L, M);
    const auto r = cross_correlate(y, pool, M);
    Eigen::Index arg = 0;
    r[0].maxCoeff(&arg);
    CHECK(static_cast<double>(arg) / M - pool.length == doctest::Approx(-3.0));
    CHECK(r[0][arg] == doctest::Approx(4.0));
}

TEST_CASE("two identical antennas double the correlation") {
    const int M = 2, L = 11;
    const auto pool = build_pool(2, 7);
    std::mt19937_64 rng(3);
    const CMat y1 = testutil::random_cmat(L * M, 1, rng);
    CMat y2(L * M, 2);
    y2 << y1, y1;
    const auto r1 = cross_correlate(y1, pool, M);
    const auto r2 = cross_correlate(y2, pool, M);
    for (int i = 0; i < 2; ++i) CHECK((r2[i] - 2.0 * r1[i]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("candidate extraction on constructed correlations") {
    std::vector<RVec> r(3, RVec::Zero(40));
    SUBCASE("all below threshold") {
        CHECK(extract_candidates(r, 0.5, 2, 0.0, 7).entries.empty());
    }
    SUBCASE("one peak per preamble") {
        r[0][10] = 3.0;
        r[1][20] = 2.0;
        r[2][5] = 4.0;
        const auto cs = extract_candidates(r, 1.0, 2, 100.0, 7);
        REQUIRE(cs.entries.size() == 3);
        CHECK(cs.window_start == 100.0);
        for (const auto& c : cs.entries) {
            const int m = c.preamble == 0 ? 10 : c.preamble == 1 ? 20 : 5;
            CHECK(c.delay == doctest::Approx(100.0 + m / 2.0 - 7.0));
            CHECK(c.peak == r[c.preamble][m]);
        }
    }
    SUBCASE("two well separated peaks share a preamble") {
        r[1][10] = 3.0;
        r[1][14] = 2.5;
        const auto cs = extract_candidates(r, 1.0, 2, 0.0, 7);
        REQUIRE(cs.entries.size() == 2);
        CHECK(cs.entries[0].preamble == 1);
        CHECK(cs.entries[1].preamble == 1);
    }
    SUBCASE("adjacent samples collapse to the local maximum") {
        r[0][10] = 3.0;
        r[0][11] = 2.9;
        const auto cs = extract_candidates(r, 1.0, 2, 0.0, 7);
        REQUIRE(cs.entries.size() == 1);
        CHECK(cs.entries[0].peak == 3.0);
    }
}

TEST_CASE("median and robust threshold") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    std::vector<RVec> r{RVec::Constant(10, 1.0)};
    CHECK(robust_peak_threshold(r, 4.0) == doctest::Approx(1.0));
}

}
