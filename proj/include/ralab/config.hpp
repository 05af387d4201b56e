#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ralab/bench.hpp"

namespace ralab {

struct FiltoptConfig {
    std::string reference = "rrc:0.4";
    std::string init;  // empty: the reference
    bool project_init = true;
    int mask_bins = 1024;
    double mask_occupied = 0.01;
    double mask_stop_floor = 0.03;
    double mask_margin = 0.0;
    std::string mask_path;
    int n_scenes = 8;
    double snr_db = 10.0;
    int max_iters = 200;
    double spectral_floor = 1e-6;
};

struct RunConfig {
    ScenarioConfig scenario;
    double window_start = -1.0;
    UadDcParams detector;
    std::string algorithm = "uad_dc";
    double noise_var = 0.0;
    std::string filter = "rrc:0.4";
    std::vector<std::string> bcrb_filters;
    std::vector<double> bcrb_snrs{-10.0, 0.0, 10.0};
    double prior_factor = 2.0;
    int bcrb_scenes = 20;
    FiltoptConfig filtopt;
    ExperimentSpec experiment;
};

struct ConfigKey {
    std::string key;
    nlohmann::json default_value;
    std::string doc;
};

const std::vector<ConfigKey>& config_keys();
std::string config_help();

// Defaults, then the file (if any), then each "key=value" override.
// Unknown keys, wrong types and out-of-range values throw ConfigError naming the key.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig config_from_flat(const nlohmann::json& flat);

// Full-scale scenario (1000 users, 300 active, 32 antennas, 64 preambles of length 139,
// L = 187) as overrides. They take precedence over a config file; later --set values win.
std::vector<std::string> full_scale_overrides();
nlohmann::json flat_defaults();

}  // namespace ralab
