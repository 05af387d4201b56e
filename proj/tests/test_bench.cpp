#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ralab/bench.hpp"

using namespace ralab;

namespace {

TruthUser tu(int p, double d, bool counted = true) { return TruthUser{p, d, counted, {}}; }
Detection det(int p, double d, double s = 1.0) { return Detection{p, d, s, {}}; }

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("matching examples") {
    const std::vector<TruthUser> three{tu(0, 1.0), tu(1, 2.0), tu(2, 3.0)};
    auto m = match_detections(three, {});
    CHECK(m.missed.size() == 3);
    CHECK(m.hits.empty());

    m = match_detections(three, {det(0, 1.0), det(1, 2.0), det(2, 3.0)});
    CHECK(m.hits.size() == 3);
    CHECK(m.missed.empty());
    CHECK(m.false_alarms.empty());

    m = match_detections({tu(0, 1.0)}, {det(0, 1.6)}, 0.5);
    CHECK(m.missed.size() == 1);
    CHECK(m.false_alarms.size() == 1);
}

TEST_CASE("matching is greedy by delay error and preamble aware") {
    // both detections could take truth 0; the closer one wins and the other falls back to truth 1
    const auto m = match_detections({tu(3, 5.0), tu(3, 5.6)}, {det(3, 5.3), det(3, 5.05)}, 0.5);
    REQUIRE(m.hits.size() == 2);
    for (auto [t, d] : m.hits) {
        if (t == 0) CHECK(d == 1);
        if (t == 1) CHECK(d == 0);
    }
    const auto w = match_detections({tu(1, 5.0)}, {det(2, 5.0)});
    CHECK(w.false_alarms.size() == 1);
    CHECK(w.missed.size() == 1);
}

TEST_CASE("detections of boundary users are dropped, not false alarms") {
    const auto m = match_detections({tu(1, -3.0, false), tu(2, 4.0)}, {det(1, -3.1), det(2, 4.2)});
    CHECK(m.hits.size() == 1);
    CHECK(m.dropped.size() == 1);
    CHECK(m.false_alarms.empty());
    CHECK(m.missed.empty());
}

TEST_CASE("metrics") {
    TrialOutcome a;
    a.n_true = 5;
    a.hits = 3;
    a.misses = 2;
    a.false_alarms = 1;
    a.detected = 4;
    TrialOutcome b;
    b.n_true = 5;
    b.hits = 5;
    b.detected = 5;
    CHECK(prob_misdetection({a}) == doctest::Approx(0.4));
    CHECK(prob_false_alarm({a}) == doctest::Approx(0.25));
    CHECK(prob_misdetection({a, b}) == doctest::Approx(0.2));
    CHECK(prob_misdetection({b}) == 0.0);
    TrialOutcome none;
    none.n_true = 4;
    none.misses = 4;
    CHECK(prob_misdetection({none}) == 1.0);
    CHECK(prob_false_alarm({none}) == 0.0);
    CHECK(successful_detection_ratio({a, b}) == doctest::Approx(0.8));
    CHECK(std::isnan(pooled_nmse({a})));
    CMat g = CMat::Ones(2, 2);
    CHECK(nmse(g, g) == 0.0);
    CHECK(nmse(CMat::Zero(2, 2), g) == doctest::Approx(1.0));
}

TEST_CASE("trial evaluation and thresholds") {
    TrialRecord r;
    r.truth = {tu(0, 1.0), tu(1, 5.0)};
    r.candidates = {det(0, 1.1, 10.0), det(1, 5.0, 3.0), det(2, 7.0, 5.0)};
    r.default_active = {true, false, true};
    auto o = evaluate_trial(r, 4.0, false);
    CHECK(o.hits == 1);
    CHECK(o.false_alarms == 1);
    CHECK(o.misses == 1);
    o = evaluate_trial(r, 0.0, true);
    CHECK(o.hits == 1);
    CHECK(o.false_alarms == 1);
    o = evaluate_trial(r, 2.0, false);
    CHECK(o.hits == 2);
    CHECK(o.detected == 3);

    // the false alarm scores 5, so every threshold at or above 5 gives P_fa = 0
    CHECK(calibrate_threshold({r}, 1e-3) == doctest::Approx(5.0));
    CHECK(calibrate_threshold({r}, 0.5) == doctest::Approx(5.0));
    CHECK(calibrate_threshold({r}, 0.6) < 3.0);
}

TEST_CASE("zone restriction keeps aligned flags") {
    TrialRecord r;
    r.candidates = {det(0, -5.0), det(1, 3.0), det(2, 20.0)};
    r.default_active = {true, false, true};
    restrict_to_zone(r, -0.5, 16.5);
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.candidates[0].preamble == 1);
    CHECK(r.default_active == std::vector<bool>{false});
}

TEST_CASE("conventional baseline") {
    const int M = 2, L = 47;
    const auto pool = build_pool(16, 31);
    const auto sh = build_shaping_matrices(catalog_pulse("rrc:0.4", M), L);
    SUBCASE("noiseless single user") {
        const CMat Y = shaped_column(pool.sequences[4], 6.0, sh.pulse, L) * CMat::Ones(1, 2);
        const auto rep = conventional_ra(Y, pool, M, 10.0, 0.0);
        bool found = false;
        for (std::size_t k = 0; k < rep.preambles.size(); ++k)
            if (rep.preambles[k] == 4 && std::abs(rep.delays.delays[k] - 6.0) < 0.5 && rep.active_flags[k]) found = true;
        CHECK(found);
    }
    SUBCASE("two users on one preamble at the same delay collapse to one detection") {
        CMat Y(L * M, 1);
        Y.col(0) = shaped_column(pool.sequences[2], 6.0, sh.pulse, L) * cx(1.0, 0.5) +
                   shaped_column(pool.sequences[2], 6.0, sh.pulse, L) * cx(-0.3, 0.8);
        const auto rep = conventional_ra(Y, pool, M, 5.0, 0.0);
        int near = 0;
        for (std::size_t k = 0; k < rep.preambles.size(); ++k)
            if (rep.preambles[k] == 2 && std::abs(rep.delays.delays[k] - 6.0) < 1.0) ++near;
        CHECK(near <= 1);
    }
}

TEST_CASE("experiments are deterministic") {
    ExperimentSpec s;
    s.n_trials = 1;
    s.calib_trials = 2;
    s.sweep_values = {10.0};
    const auto a = results_csv(run_experiment(s), false);
    const auto b = results_csv(run_experiment(s), false);
    CHECK(a == b);
    CHECK(a.rfind("algorithm,filter_label,m_osf,sweep_axis,sweep_value,p_md,p_md_stderr,p_fa,nmse,sdr,n_trials\n", 0) == 0);
    s.n_trials = 0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("snr sweep lowers misdetection") {
    ExperimentSpec s;
    s.n_trials = 60;
    s.calib_trials = 0;
    s.algorithms = {Algorithm::UadDc};
    s.sweep_values = {-10.0, 0.0, 10.0};
    const auto rows = run_experiment(s);
    REQUIRE(rows.size() == 3);
    for (int i = 1; i < 3; ++i)
        CHECK(rows[i].p_md <= rows[i - 1].p_md + 2.0 * std::hypot(rows[i].p_md_stderr, rows[i - 1].p_md_stderr));
}

TEST_CASE("parallel_for reports the first failing index") {
    std::vector<int> out(50, 0);
    parallel_for(50, 4, [&](int i) { out[i] = i * i; });
    for (int i = 0; i < 50; ++i) CHECK(out[i] == i * i);
    try {
        parallel_for(20, 3, [](int i) {
            if (i == 7 || i == 12) throw NumericError("boom");
        });
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("trial 7") != std::string::npos);
    }
}

TEST_CASE("enum names round trip") {
    for (auto a : {SweepAxis::Snr, SweepAxis::EmIter, SweepAxis::NActive, SweepAxis::PfaThreshold})
        CHECK(sweep_axis_from_string(to_string(a)) == a);
    for (auto a : {Algorithm::UadDc, Algorithm::Conventional}) CHECK(algorithm_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(sweep_axis_from_string("bogus"), ParameterError);
}

}
