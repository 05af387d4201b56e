#include "ralab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ralab {

using nlohmann::json;

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"scenario.n_users", 100, "users in the cell"},
        {"scenario.n_active", 30, "users active over the horizon"},
        {"scenario.n_antennas", 8, "base-station antennas N_R"},
        {"scenario.n_preambles", 16, "preamble pool size N_P"},
        {"scenario.preamble_len", 31, "Zadoff-Chu length N_PL (prime)"},
        {"scenario.window_len", 47, "window length L in symbols"},
        {"scenario.m_osf", 2, "oversampling factor M_OSF"},
        {"scenario.snr_db", 10.0, "SNR in dB"},
        {"scenario.gamma_db_lo", -128.1, "large-scale gain range, low end (dB)"},
        {"scenario.gamma_db_hi", -118.1, "large-scale gain range, high end (dB)"},
        {"scenario.horizon_symbols", 160, "arrival delays are uniform on [0, horizon)"},
        {"scenario.seed", 1, "master seed"},
        {"scenario.window_start", -1.0, "window start t_l in symbols; < 0 centers the window in the horizon"},
        {"detector.algorithm", "uad_dc", "uad_dc or conventional"},
        {"detector.epsilon", 0.5, "delay search half-width in symbols"},
        {"detector.kappa", 0, "search grid refinement (step 1/kappa); 0 means 4 M_OSF"},
        {"detector.em_iters", 5, "EM iterations U"},
        {"detector.eps1", 1e-6, "Turbo-CS inner stop on summed variance change"},
        {"detector.eps2", 1e-6, "Turbo-CS outer stop on rho change"},
        {"detector.eps3", 1e-3, "EM stop on max delay change"},
        {"detector.outer_iters", 10, "Turbo-CS outer iterations J_O"},
        {"detector.inner_iters", 30, "Turbo-CS inner iterations J_I"},
        {"detector.rho_init", 0.5, "initial activity ratio"},
        {"detector.freeze_nu", 1e-3, "freeze a candidate's delay after two EM iterations with nu below this"},
        {"detector.peak_scale", 4.0, "correlation threshold = median + peak_scale * MAD"},
        {"detector.peak_threshold", 0.0, "fixed correlation threshold; > 0 overrides peak_scale"},
        {"detector.eta_mode", "median", "activity threshold: median or fixed"},
        {"detector.eta_scale", 4.0, "median mode: eta = eta_scale * N_R * median(row power with nu < 0.1)"},
        {"detector.eta_fixed", 0.0, "fixed mode: row-power threshold"},
        {"detector.prior_gamma", 1.0, "gain variance assumed for every candidate"},
        {"detector.noise_var", 0.0, "noise variance for a loaded observation; 0 estimates it"},
        {"filter.name", "rrc:0.4", "filter for simulate/detect: rrc:<beta>, gauss:<sigma_sq>, delta, file:<taps.csv>"},
        {"bcrb.filters", json::array({"gauss:0.1", "rrc:1", "rrc:0", "gauss:0.5", "rrc:0.4", "gauss:0.49"}), "filters swept by bcrb"},
        {"bcrb.snrs", json::array({-10.0, 0.0, 10.0}), "SNR points in dB"},
        {"bcrb.prior_factor", 2.0, "factor on Gamma^-1 in the Bayesian information"},
        {"bcrb.n_scenes", 20, "windows averaged per point"},
        {"filtopt.reference", "rrc:0.4", "pulse whose bandwidth defines the mask"},
        {"filtopt.init", "", "initial pulse; empty uses the reference"},
        {"filtopt.project_init", true, "project the initial pulse onto the mask first"},
        {"filtopt.mask_bins", 1024, "DFT size of the mask"},
        {"filtopt.mask_occupied", 0.01, "bins with |F_ref| >= this * peak get the passband ceiling"},
        {"filtopt.mask_stop_floor", 0.03, "stopband ceiling relative to the peak"},
        {"filtopt.mask_margin", 0.0, "passband ceiling = peak * (1 + margin)"},
        {"filtopt.mask_path", "", "mask CSV (bin_index,b_up); overrides the reference mask"},
        {"filtopt.n_scenes", 8, "design windows averaged in the objective"},
        {"filtopt.snr_db", 10.0, "design SNR in dB"},
        {"filtopt.max_iters", 200, "projected-gradient iteration cap"},
        {"filtopt.spectral_floor", 1e-6, "lower bound on the spectrum"},
        {"experiment.sweep_axis", "snr", "snr, em_iter, n_active or pfa_threshold"},
        {"experiment.sweep_values", json::array({10.0}), "values along the sweep axis"},
        {"experiment.filters", json::array({"rrc:0.4"}), "filters compared in the sweep"},
        {"experiment.m_osf_values", json::array({2}), "oversampling factors compared in the sweep"},
        {"experiment.algorithms", json::array({"uad_dc", "conventional"}), "algorithms compared in the sweep"},
        {"experiment.n_trials", 200, "windows per sweep point"},
        {"experiment.calib_trials", 1000, "threshold calibration windows; 0 keeps the detectors' own thresholds"},
        {"experiment.pfa_target", 1e-3, "calibrated false-alarm level"},
        {"experiment.delay_tol", 0.5, "hit tolerance on delay error in symbols"},
        {"experiment.type1_zone_only", true, "score only candidates inside the Type I delay zone"},
        {"experiment.threads", 1, "worker threads"},
    };
    return keys;
}

std::string config_help() {
    std::ostringstream os;
    os << "Config keys (JSON file with nested sections, or --set section.key=value):\n";
    for (const auto& k : config_keys()) os << "  " << k.key << " = " << k.default_value.dump() << "\n      " << k.doc << "\n";
    return os.str();
}

json flat_defaults() {
    json j = json::object();
    for (const auto& k : config_keys()) j[k.key] = k.default_value;
    return j;
}

namespace {

void flatten(const json& j, const std::string& prefix, json& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it->is_object())
            flatten(*it, key, out);
        else
            out[key] = *it;
    }
}

bool is_integral(const json& v) {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
}

void check_type(const std::string& key, const json& def, const json& v) {
    auto fail = [&](const std::string& what) { throw ConfigError("config key '" + key + "': expected " + what + ", got " + v.dump()); };
    if (def.is_boolean()) {
        if (!v.is_boolean()) fail("a boolean");
    } else if (def.is_number_integer()) {
        if (!is_integral(v)) fail("an integer");
    } else if (def.is_number()) {
        if (!v.is_number()) fail("a number");
    } else if (def.is_string()) {
        if (!v.is_string()) fail("a string");
    } else if (def.is_array()) {
        if (!v.is_array()) fail("a list");
        const json& elem = def.empty() ? json() : def.front();
        for (const auto& e : v) {
            if (elem.is_string() && !e.is_string()) fail("a list of strings");
            if (elem.is_number_integer() && !is_integral(e)) fail("a list of integers");
            if (elem.is_number() && !e.is_number()) fail("a list of numbers");
        }
    }
}

void assign(json& flat, const std::string& key, const json& v) {
    if (!flat.contains(key)) throw ConfigError("unknown config key '" + key + "' (see --help)");
    check_type(key, flat_defaults()[key], v);
    flat[key] = v;
}

struct Reader {
    const json& f;
    int i(const std::string& k, long lo, long hi = 1L << 40) const {
        const long v = std::lround(f.at(k).get<double>());
        if (v < lo || v > hi)
            throw ConfigError("config key '" + k + "': " + std::to_string(v) + " is outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }
    double d(const std::string& k, double lo = -HUGE_VAL, double hi = HUGE_VAL, bool open_lo = false) const {
        const double v = f.at(k).get<double>();
        if (!std::isfinite(v) || v < lo || v > hi || (open_lo && v == lo)) {
            std::ostringstream os;
            os << "config key '" << k << "': " << v << " is out of range";
            throw ConfigError(os.str());
        }
        return v;
    }
    std::string s(const std::string& k) const { return f.at(k).get<std::string>(); }
    bool b(const std::string& k) const { return f.at(k).get<bool>(); }
};

template <class F>
auto keyed(const std::string& key, F&& fn) {
    try {
        return fn();
    } catch (const ParameterError& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

}  // namespace

RunConfig config_from_flat(const json& flat) {
    const Reader r{flat};
    RunConfig c;
    ScenarioConfig& sc = c.scenario;
    sc.n_users = r.i("scenario.n_users", 1);
    sc.n_active = r.i("scenario.n_active", 0, sc.n_users);
    sc.n_antennas = r.i("scenario.n_antennas", 1);
    sc.preamble_len = r.i("scenario.preamble_len", 2);
    sc.n_preambles = r.i("scenario.n_preambles", 1, sc.preamble_len - 1);
    sc.window_len = r.i("scenario.window_len", sc.preamble_len + 1);
    sc.m_osf = r.i("scenario.m_osf", 1, 16);
    sc.snr_db = r.d("scenario.snr_db", -100.0, 200.0);
    sc.gamma_db_lo = r.d("scenario.gamma_db_lo");
    sc.gamma_db_hi = r.d("scenario.gamma_db_hi", sc.gamma_db_lo);
    sc.horizon_symbols = r.i("scenario.horizon_symbols", 1);
    sc.seed = static_cast<std::uint64_t>(r.i("scenario.seed", 0));
    c.window_start = r.d("scenario.window_start");

    c.algorithm = r.s("detector.algorithm");
    keyed("detector.algorithm", [&] { return algorithm_from_string(c.algorithm); });
    UadDcParams& d = c.detector;
    d.epsilon = r.d("detector.epsilon", 0.0);
    d.kappa = r.i("detector.kappa", 0);
    if (d.kappa != 0 && d.kappa <= sc.m_osf) throw ConfigError("config key 'detector.kappa': must exceed scenario.m_osf (or be 0)");
    d.em_iters = r.i("detector.em_iters", 0, 1000);
    d.turbo.eps1 = r.d("detector.eps1", 0.0);
    d.turbo.eps2 = r.d("detector.eps2", 0.0);
    d.eps3 = r.d("detector.eps3", 0.0);
    d.turbo.outer_iters = r.i("detector.outer_iters", 1, 100000);
    d.turbo.inner_iters = r.i("detector.inner_iters", 1, 100000);
    d.turbo.rho_init = r.d("detector.rho_init", 0.0, 1.0, true);
    d.freeze_nu = r.d("detector.freeze_nu", 0.0, 1.0);
    d.peak_scale = r.d("detector.peak_scale", 0.0);
    d.peak_threshold = r.d("detector.peak_threshold", 0.0);
    const std::string em = r.s("detector.eta_mode");
    if (em == "median")
        d.eta_mode = EtaMode::Median;
    else if (em == "fixed")
        d.eta_mode = EtaMode::Fixed;
    else
        throw ConfigError("config key 'detector.eta_mode': expected median or fixed, got '" + em + "'");
    d.eta_scale = r.d("detector.eta_scale", 0.0);
    d.eta_fixed = r.d("detector.eta_fixed", 0.0);
    d.prior_gamma = r.d("detector.prior_gamma", 0.0, HUGE_VAL, true);
    c.noise_var = r.d("detector.noise_var", 0.0);

    c.filter = r.s("filter.name");
    c.bcrb_filters = flat.at("bcrb.filters").get<std::vector<std::string>>();
    if (c.bcrb_filters.empty()) throw ConfigError("config key 'bcrb.filters': must not be empty");
    c.bcrb_snrs = flat.at("bcrb.snrs").get<std::vector<double>>();
    if (c.bcrb_snrs.empty()) throw ConfigError("config key 'bcrb.snrs': must not be empty");
    c.prior_factor = r.d("bcrb.prior_factor", 0.0, HUGE_VAL, true);
    c.bcrb_scenes = r.i("bcrb.n_scenes", 1);

    FiltoptConfig& fo = c.filtopt;
    fo.reference = r.s("filtopt.reference");
    fo.init = r.s("filtopt.init");
    fo.project_init = r.b("filtopt.project_init");
    fo.mask_bins = r.i("filtopt.mask_bins", 8, 1 << 16);
    if (fo.mask_bins % 2) throw ConfigError("config key 'filtopt.mask_bins': must be even");
    fo.mask_occupied = r.d("filtopt.mask_occupied", 0.0, 1.0, true);
    fo.mask_stop_floor = r.d("filtopt.mask_stop_floor", 0.0);
    fo.mask_margin = r.d("filtopt.mask_margin", 0.0);
    fo.mask_path = r.s("filtopt.mask_path");
    fo.n_scenes = r.i("filtopt.n_scenes", 1);
    fo.snr_db = r.d("filtopt.snr_db", -100.0, 200.0);
    fo.max_iters = r.i("filtopt.max_iters", 0);
    fo.spectral_floor = r.d("filtopt.spectral_floor", 0.0);

    ExperimentSpec& ex = c.experiment;
    ex.scenario = sc;
    ex.detector = d;
    ex.seed = sc.seed;
    ex.window_start = c.window_start;
    ex.sweep_axis = keyed("experiment.sweep_axis", [&] { return sweep_axis_from_string(r.s("experiment.sweep_axis")); });
    ex.sweep_values = flat.at("experiment.sweep_values").get<std::vector<double>>();
    ex.filters = flat.at("experiment.filters").get<std::vector<std::string>>();
    ex.m_osf_values.clear();
    for (const auto& v : flat.at("experiment.m_osf_values")) ex.m_osf_values.push_back(static_cast<int>(std::lround(v.get<double>())));
    ex.algorithms.clear();
    for (const auto& a : flat.at("experiment.algorithms"))
        ex.algorithms.push_back(keyed("experiment.algorithms", [&] { return algorithm_from_string(a.get<std::string>()); }));
    ex.n_trials = r.i("experiment.n_trials", 1);
    ex.calib_trials = r.i("experiment.calib_trials", 0);
    ex.pfa_target = r.d("experiment.pfa_target", 0.0, 1.0, true);
    ex.delay_tol = r.d("experiment.delay_tol", 0.0, HUGE_VAL, true);
    ex.type1_zone_only = flat.at("experiment.type1_zone_only").get<bool>();
    ex.threads = r.i("experiment.threads", 1, 1024);
    keyed("scenario", [&] {
        sc.validate();
        return 0;
    });
    keyed("experiment", [&] {
        ex.validate();
        return 0;
    });
    return c;
}

std::vector<std::string> full_scale_overrides() {
    // the horizon keeps the desk-scale arrival density (30 users per 160 symbols)
    return {"scenario.n_users=1000",    "scenario.n_active=300",  "scenario.n_antennas=32",
            "scenario.n_preambles=64",  "scenario.preamble_len=139", "scenario.window_len=187",
            "scenario.horizon_symbols=1600"};
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json flat = flat_defaults();
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        json file;
        try {
            file = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config file '" + path + "' must hold a JSON object");
        json ff = json::object();
        flatten(file, "", ff);
        for (auto it = ff.begin(); it != ff.end(); ++it) assign(flat, it.key(), *it);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
        const std::string key = o.substr(0, eq);
        const std::string raw = o.substr(eq + 1);
        json v;
        try {
            v = json::parse(raw);
        } catch (const json::parse_error&) {
            v = raw;
        }
        // bare words for string keys stay strings even if they parse as JSON numbers
        if (flat.contains(key) && flat[key].is_string() && !v.is_string()) v = raw;
        // comma lists for list keys: a,b,c
        if (flat.contains(key) && flat[key].is_array() && !v.is_array()) {
            json arr = json::array();
            std::istringstream ss(raw);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    arr.push_back(json::parse(item));
                } catch (const json::parse_error&) {
                    arr.push_back(item);
                }
            }
            v = arr;
        }
        assign(flat, key, v);
    }
    return config_from_flat(flat);
}

}  // namespace ralab
