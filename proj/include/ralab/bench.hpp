#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ralab/airsim.hpp"
#include "ralab/delaycal.hpp"

namespace ralab {

struct TruthUser {
    int preamble = 0;
    double delay = 0.0;  // window-relative
    bool counted = true;  // Type I in this window
    CVec g;               // channel row, may be empty
};

struct Detection {
    int preamble = 0;
    double delay = 0.0;  // window-relative
    double score = 0.0;  // row power (UAD-DC) or correlation peak (conventional)
    CVec g;              // channel estimate, empty when the detector has none
};

struct MatchResult {
    std::vector<std::pair<int, int>> hits;  // (truth index, detection index) on counted users
    std::vector<int> missed;                 // counted truth indices left unmatched
    std::vector<int> false_alarms;           // detection indices left unmatched
    std::vector<int> dropped;                // detections matched to uncounted (Type II/III) users
};

// Greedy bipartite matching by ascending |delay error| among same-preamble pairs within delay_tol.
MatchResult match_detections(const std::vector<TruthUser>& truth, const std::vector<Detection>& dets,
                             double delay_tol = 0.5);

// Per-trial record before thresholding: every candidate with its score.
struct TrialRecord {
    std::vector<TruthUser> truth;
    std::vector<Detection> candidates;
    std::vector<bool> default_active;  // the detector's own decision
};

struct TrialOutcome {
    int n_true = 0;  // counted truth users
    int hits = 0;
    int misses = 0;
    int false_alarms = 0;
    int dropped = 0;
    int detected = 0;  // hits + false alarms
    double err_energy = 0.0;
    double true_energy = 0.0;
};

// Drops candidates whose delay lies outside [lo, hi].
void restrict_to_zone(TrialRecord& rec, double lo, double hi);

TrialOutcome evaluate_trial(const TrialRecord& rec, double threshold, bool use_default, double delay_tol = 0.5);

// Averages over trials; P_md and SDR skip trials with no counted user, P_fa is 0 for a trial with no detections.
double prob_misdetection(const std::vector<TrialOutcome>& outcomes);
double prob_false_alarm(const std::vector<TrialOutcome>& outcomes);
double successful_detection_ratio(const std::vector<TrialOutcome>& outcomes);
double nmse(const CMat& g_hat, const CMat& g_true);
// Pooled ||G_hat - G||^2 / ||G||^2 over hits; NaN when no detector estimate exists.
double pooled_nmse(const std::vector<TrialOutcome>& outcomes);

// Smallest threshold t (from the candidate scores) such that P_fa < target for t and every larger threshold.
double calibrate_threshold(const std::vector<TrialRecord>& batch, double pfa_target, double delay_tol = 0.5);

DetectionReport conventional_ra(const CMat& Y, const PreamblePool& pool, int m_osf, double threshold,
                                double window_start = 0.0);

enum class SweepAxis { Snr, EmIter, NActive, PfaThreshold };
const char* to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

enum class Algorithm { UadDc, Conventional };
const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

struct ExperimentSpec {
    ScenarioConfig scenario;
    UadDcParams detector;
    SweepAxis sweep_axis = SweepAxis::Snr;
    std::vector<double> sweep_values{10.0};
    std::vector<std::string> filters{"rrc:0.4"};
    std::vector<int> m_osf_values{2};
    std::vector<Algorithm> algorithms{Algorithm::UadDc, Algorithm::Conventional};
    int n_trials = 200;
    int calib_trials = 1000;  // resolves P_fa near 1e-3; 0 uses the detectors' own thresholds
    double pfa_target = 1e-3;
    double delay_tol = 0.5;
    // report only candidates with delay in [-delay_tol, L - N_PL + delay_tol]; boundary
    // users belong to the neighbouring window where they are Type I
    bool type1_zone_only = true;
    double window_start = -1.0;  // < 0: floor((H - L) / 2)
    std::uint64_t seed = 1;
    int threads = 1;
    void validate() const;
};

struct ResultRow {
    std::string algorithm;
    std::string filter_label;
    int m_osf = 0;
    std::string sweep_axis;
    double sweep_value = 0.0;
    double p_md = 0.0;
    double p_md_stderr = 0.0;
    double p_fa = 0.0;
    double nmse = 0.0;
    double sdr = 0.0;
    double sdr_stderr = 0.0;
    double threshold = 0.0;
    int n_trials = 0;
    double wall_ms = 0.0;
    std::vector<double> trial_sdr;  // NaN where the trial has no counted user
};

double default_window_start(const ScenarioConfig& cfg);

// One window: arrivals from mix_seed(seed, trial), so every algorithm, filter and
// oversampling factor sees the same users at the same trial index.
WindowScene trial_scene(const ScenarioConfig& cfg, const ShapingMatrices& shaping, const PreamblePool& pool,
                        double window_start, std::uint64_t seed, int trial);

std::vector<TruthUser> truth_of(const WindowScene& scene);

// "rrc:0.4", "gauss:0.49", "delta" or "file:<taps.csv>"
PulseShape resolve_filter(const std::string& name, int m_osf);

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec);

// Parallel map over [0, n) on up to `threads` workers; results land by index.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

std::string results_csv(const std::vector<ResultRow>& rows, bool with_wall_ms = true);

}  // namespace ralab
