#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "ralab/cli.hpp"
#include "ralab/config.hpp"
#include "ralab/io.hpp"

using namespace ralab;

namespace {

void write(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ra_lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("config_io") {

TEST_CASE("defaults") {
    const auto c = load_config("");
    CHECK(c.scenario.n_users == 100);
    CHECK(c.scenario.n_active == 30);
    CHECK(c.scenario.window_len == 47);
    CHECK(c.detector.em_iters == 5);
    CHECK(c.experiment.pfa_target == 1e-3);
    CHECK(c.filter == "rrc:0.4");
}

TEST_CASE("file and overrides") {
    const auto path = testutil::tmp_path("cfg.json");
    write(path, R"({"scenario": {"m_osf": 3, "snr_db": 0}, "detector": {"em_iters": 2}})");
    const auto c = load_config(path, {"scenario.snr_db=5", "experiment.m_osf_values=1,2", "filter.name=gauss:0.49"});
    CHECK(c.scenario.m_osf == 3);
    CHECK(c.scenario.snr_db == 5.0);
    CHECK(c.detector.em_iters == 2);
    CHECK(c.experiment.m_osf_values == std::vector<int>{1, 2});
    CHECK(c.filter == "gauss:0.49");
}

TEST_CASE("errors name the key") {
    auto msg = [](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg([] { load_config("", {"scenario.bogus=1"}); }).find("scenario.bogus") != std::string::npos);
    CHECK(msg([] { load_config("", {"scenario.n_users=abc"}); }).find("scenario.n_users") != std::string::npos);
    CHECK(msg([] { load_config("", {"scenario.n_active=500"}); }).find("n_active") != std::string::npos);
    CHECK(msg([] { load_config("", {"noequals"}); }) != "");
    const auto bad = testutil::tmp_path("bad.json");
    write(bad, "{not json");
    CHECK_THROWS_AS(load_config(bad), ConfigError);
    CHECK(!config_help().empty());
}

TEST_CASE("observation csv round trip") {
    std::mt19937_64 rng(1);
    const CMat Y = testutil::random_cmat(10, 3, rng);
    const auto path = testutil::tmp_path("obs.csv");
    write_observation_csv(Y, path);
    CHECK(read_observation_csv(path) == Y);
}

TEST_CASE("observation parse errors carry the line") {
    const auto path = testutil::tmp_path("obs_bad.csv");
    write(path, "sample,antenna,re,im\n0,0,1,2\n0,1,x,2\n");
    try {
        read_observation_csv(path);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    write(path, "sample,antenna,re,im\n0,0,1,2\n0,0,1,2\n");
    CHECK_THROWS_AS(read_observation_csv(path), ParseError);
    write(path, "sample,antenna,re,im\n0,0,1\n");
    CHECK_THROWS_AS(read_observation_csv(path), ParseError);
}

TEST_CASE("noise estimate on pure noise") {
    const auto sh = build_shaping_matrices(catalog_pulse("rrc:0.4", 2), 47);
    std::mt19937_64 rng(2);
    CMat W(94, 8);
    for (int i = 0; i < 94; ++i)
        for (int a = 0; a < 8; ++a) W(i, a) = complex_normal(rng, 0.3);
    const double est = estimate_noise_var(sh.F.cast<cx>() * W, sh);
    CHECK(est == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("cli commands and exit codes") {
    const std::string dir = testutil::tmp_path("cli");
    std::filesystem::create_directories(dir);
    CHECK(cli({"simulate", "--out-dir", dir, "--seed", "3"}) == 0);
    CHECK(std::filesystem::exists(dir + "/scenario.json"));
    CHECK(std::filesystem::exists(dir + "/observation.csv"));
    CHECK(cli({"detect", "--out-dir", dir, "--observation", dir + "/observation.csv"}) == 0);
    CHECK(std::filesystem::exists(dir + "/detection.json"));
    CHECK(cli({"bcrb", "--out-dir", dir, "--set", "bcrb.n_scenes=2", "--filter", "rrc:0.4,gauss:0.49"}) == 0);
    CHECK(std::filesystem::exists(dir + "/bcrb.csv"));
    CHECK(cli({"sweep", "--out-dir", dir, "--set", "experiment.n_trials=2", "--set", "experiment.calib_trials=2"}) == 0);
    CHECK(std::filesystem::exists(dir + "/sweep.csv"));
    CHECK(cli({"sweep", "--set", "nope.key=1"}) == 2);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"detect", "--out-dir", dir, "--observation", dir + "/scenario.json"}) == 2);
}

}
