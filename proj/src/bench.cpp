#include "ralab/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace ralab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

MatchResult match_detections(const std::vector<TruthUser>& truth, const std::vector<Detection>& dets,
                             double delay_tol) {
    require(delay_tol > 0.0, "delay_tol must be positive");
    struct Pair {
        double err;
        int t, d;
    };
    std::vector<Pair> pairs;
    for (int t = 0; t < static_cast<int>(truth.size()); ++t)
        for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
            if (truth[t].preamble != dets[d].preamble) continue;
            const double e = std::abs(truth[t].delay - dets[d].delay);
            if (e <= delay_tol) pairs.push_back({e, t, d});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.err != b.err) return a.err < b.err;
        if (a.t != b.t) return a.t < b.t;
        return a.d < b.d;
    });
    std::vector<int> t_of(dets.size(), -1), d_of(truth.size(), -1);
    for (const auto& p : pairs) {
        if (t_of[p.d] >= 0 || d_of[p.t] >= 0) continue;
        t_of[p.d] = p.t;
        d_of[p.t] = p.d;
    }
    MatchResult m;
    for (int t = 0; t < static_cast<int>(truth.size()); ++t) {
        if (!truth[t].counted) continue;
        if (d_of[t] >= 0)
            m.hits.emplace_back(t, d_of[t]);
        else
            m.missed.push_back(t);
    }
    for (int d = 0; d < static_cast<int>(dets.size()); ++d) {
        if (t_of[d] < 0)
            m.false_alarms.push_back(d);
        else if (!truth[t_of[d]].counted)
            m.dropped.push_back(d);
    }
    return m;
}

TrialOutcome evaluate_trial(const TrialRecord& rec, double threshold, bool use_default, double delay_tol) {
    std::vector<Detection> active;
    for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
        const bool on = use_default ? rec.default_active.at(i) : rec.candidates[i].score > threshold;
        if (on) active.push_back(rec.candidates[i]);
    }
    const MatchResult m = match_detections(rec.truth, active, delay_tol);
    TrialOutcome o;
    for (const auto& u : rec.truth) o.n_true += u.counted ? 1 : 0;
    o.hits = static_cast<int>(m.hits.size());
    o.misses = static_cast<int>(m.missed.size());
    o.false_alarms = static_cast<int>(m.false_alarms.size());
    o.dropped = static_cast<int>(m.dropped.size());
    o.detected = o.hits + o.false_alarms;
    if (o.hits + o.misses != o.n_true || o.detected + o.dropped != static_cast<int>(active.size()))
        throw NumericError("matching bookkeeping is inconsistent");
    for (const auto& [t, d] : m.hits) {
        const CVec& g = rec.truth[t].g;
        const CVec& gh = active[d].g;
        if (gh.size() == 0 || g.size() != gh.size()) {
            o.err_energy = kNaN;
        } else if (!std::isnan(o.err_energy)) {
            o.err_energy += (gh - g).squaredNorm();
        }
        o.true_energy += g.squaredNorm();
    }
    return o;
}

namespace {

std::pair<double, double> mean_stderr(const std::vector<double>& v) {
    if (v.empty()) return {kNaN, kNaN};
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double q = 0.0;
    for (double x : v) q += (x - m) * (x - m);
    return {m, std::sqrt(q / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

std::vector<double> per_trial_md(const std::vector<TrialOutcome>& outcomes) {
    std::vector<double> v;
    for (const auto& o : outcomes)
        if (o.n_true > 0) v.push_back(static_cast<double>(o.misses) / o.n_true);
    return v;
}

double trial_pfa(const TrialOutcome& o) {
    return o.detected > 0 ? static_cast<double>(o.false_alarms) / o.detected : 0.0;
}

}  // namespace

double prob_misdetection(const std::vector<TrialOutcome>& outcomes) {
    const auto v = per_trial_md(outcomes);
    return v.empty() ? 0.0 : mean_stderr(v).first;
}

double prob_false_alarm(const std::vector<TrialOutcome>& outcomes) {
    if (outcomes.empty()) return 0.0;
    double s = 0.0;
    for (const auto& o : outcomes) s += trial_pfa(o);
    return s / static_cast<double>(outcomes.size());
}

double successful_detection_ratio(const std::vector<TrialOutcome>& outcomes) {
    std::vector<double> v;
    for (const auto& o : outcomes)
        if (o.n_true > 0) v.push_back(static_cast<double>(o.hits) / o.n_true);
    return v.empty() ? 0.0 : mean_stderr(v).first;
}

double nmse(const CMat& g_hat, const CMat& g_true) {
    if (g_hat.rows() != g_true.rows() || g_hat.cols() != g_true.cols()) throw ShapeError("nmse: shape mismatch");
    const double den = g_true.squaredNorm();
    if (!(den > 0.0)) throw NumericError("nmse undefined for an all-zero reference");
    return (g_hat - g_true).squaredNorm() / den;
}

double pooled_nmse(const std::vector<TrialOutcome>& outcomes) {
    double e = 0.0, t = 0.0;
    for (const auto& o : outcomes) {
        e += o.err_energy;
        t += o.true_energy;
    }
    return t > 0.0 ? e / t : kNaN;
}

double calibrate_threshold(const std::vector<TrialRecord>& batch, double pfa_target, double delay_tol) {
    require(pfa_target > 0.0, "pfa target must be positive");
    // per trial, P_fa only depends on how many of its top-scored candidates are active
    std::vector<std::vector<double>> sorted(batch.size());
    std::vector<std::vector<double>> pfa_at(batch.size());
    std::vector<double> all;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& rec = batch[i];
        std::vector<int> order(rec.candidates.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return rec.candidates[a].score > rec.candidates[b].score; });
        for (int j : order) {
            sorted[i].push_back(rec.candidates[j].score);
            all.push_back(rec.candidates[j].score);
        }
        for (std::size_t c = 0; c <= order.size(); ++c) {
            TrialRecord sub;
            sub.truth = rec.truth;
            for (std::size_t j = 0; j < c; ++j) sub.candidates.push_back(rec.candidates[order[j]]);
            sub.default_active.assign(c, true);
            pfa_at[i].push_back(trial_pfa(evaluate_trial(sub, 0.0, true, delay_tol)));
        }
    }
    std::sort(all.begin(), all.end(), std::greater<double>());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    all.push_back(-std::numeric_limits<double>::infinity());
    double best = all.empty() ? 0.0 : all.front();
    for (double t : all) {
        double s = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& sc = sorted[i];
            const auto c = std::partition_point(sc.begin(), sc.end(), [t](double x) { return x > t; }) - sc.begin();
            s += pfa_at[i][c];
        }
        const double pfa = batch.empty() ? 0.0 : s / static_cast<double>(batch.size());
        if (!(pfa < pfa_target)) break;
        best = t;
    }
    return best;
}

DetectionReport conventional_ra(const CMat& Y, const PreamblePool& pool, int m_osf, double threshold,
                                double window_start) {
    const auto r = cross_correlate(Y, pool, m_osf);
    const double thr = threshold > 0.0 ? threshold : robust_peak_threshold(r);
    DetectionReport rep;
    rep.window_start = window_start;
    rep.delays.grid_step = 1.0 / m_osf;
    rep.g_hat.resize(0, Y.cols());
    rep.v_g = RVec::Zero(Y.cols());
    if (!(thr > 0.0)) return rep;
    const CandidateSet cs = extract_candidates(r, thr, m_osf, window_start, pool.length);
    const Eigen::Index K = static_cast<Eigen::Index>(cs.entries.size());
    rep.delays.delays.resize(K);
    rep.peaks.resize(K);
    rep.nu = RVec::Ones(K);
    rep.row_power = RVec::Zero(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        rep.preambles.push_back(cs.entries[k].preamble);
        rep.delays.delays[k] = cs.entries[k].delay - window_start;
        rep.peaks[k] = cs.entries[k].peak;
    }
    rep.active_flags.assign(K, true);
    rep.eta_th = thr;
    return rep;
}

const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Snr: return "snr";
        case SweepAxis::EmIter: return "em_iter";
        case SweepAxis::NActive: return "n_active";
        default: return "pfa_threshold";
    }
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    if (s == "snr") return SweepAxis::Snr;
    if (s == "em_iter") return SweepAxis::EmIter;
    if (s == "n_active") return SweepAxis::NActive;
    if (s == "pfa_threshold") return SweepAxis::PfaThreshold;
    throw ParameterError("unknown sweep axis '" + s + "' (snr, em_iter, n_active, pfa_threshold)");
}

const char* to_string(Algorithm a) { return a == Algorithm::UadDc ? "uad_dc" : "conventional"; }

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "uad_dc") return Algorithm::UadDc;
    if (s == "conventional" || s == "conventional_ra") return Algorithm::Conventional;
    throw ParameterError("unknown algorithm '" + s + "' (uad_dc, conventional)");
}

void ExperimentSpec::validate() const {
    scenario.validate();
    require(n_trials >= 1, "n_trials must be >= 1");
    require(calib_trials >= 0, "calib_trials must be >= 0");
    require(!sweep_values.empty(), "sweep_values must not be empty");
    require(!filters.empty(), "filters must not be empty");
    require(!m_osf_values.empty(), "m_osf_values must not be empty");
    require(!algorithms.empty(), "algorithms must not be empty");
    require(delay_tol > 0.0, "delay_tol must be positive");
    require(threads >= 1, "threads must be >= 1");
    for (int m : m_osf_values) require(m >= 1, "m_osf_values entries must be positive");
    for (double v : sweep_values) {
        if (sweep_axis == SweepAxis::EmIter) require(v >= 0 && v == std::floor(v), "em_iter sweep values must be nonnegative integers");
        if (sweep_axis == SweepAxis::NActive)
            require(v >= 0 && v == std::floor(v) && v <= scenario.n_users, "n_active sweep values must be integers in [0, n_users]");
        if (sweep_axis == SweepAxis::PfaThreshold) require(v > 0.0 && v < 1.0, "pfa_threshold sweep values must lie in (0, 1)");
    }
}

double default_window_start(const ScenarioConfig& cfg) {
    return std::floor(static_cast<double>(cfg.horizon_symbols - cfg.window_len) / 2.0);
}

WindowScene trial_scene(const ScenarioConfig& cfg, const ShapingMatrices& shaping, const PreamblePool& pool,
                        double window_start, std::uint64_t seed, int trial) {
    const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(trial));
    const auto arrivals = draw_arrivals(cfg, s);
    std::mt19937_64 rng(mix_seed(s, 1));
    return synthesize_window(cfg, shaping, pool, window_start, arrivals, rng);
}

std::vector<TruthUser> truth_of(const WindowScene& scene) {
    std::vector<TruthUser> t;
    for (std::size_t k = 0; k < scene.users.size(); ++k) {
        TruthUser u;
        u.preamble = scene.preamble_assignment[k];
        u.delay = scene.true_delays[k] - scene.window_start;
        u.counted = scene.types[k] == WindowType::I;
        u.g = scene.G.row(k).transpose();
        t.push_back(std::move(u));
    }
    return t;
}

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    const int nt = std::max(1, std::min(threads, n));
    if (nt <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mu;
    int failed_at = -1;
    std::string failure;
    std::vector<std::thread> pool;
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lk(mu);
                    if (failed_at < 0 || i < failed_at) {
                        failed_at = i;
                        failure = e.what();
                    }
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failed_at >= 0) throw Error("trial " + std::to_string(failed_at) + ": " + failure);
}

namespace {

std::vector<Detection> detections_from(const std::vector<int>& preambles, const RVec& delays, const CMat& g_hat) {
    std::vector<Detection> out;
    for (std::size_t k = 0; k < preambles.size(); ++k) {
        Detection d;
        d.preamble = preambles[k];
        d.delay = delays[k];
        d.g = g_hat.row(k).transpose();
        d.score = d.g.squaredNorm();
        out.push_back(std::move(d));
    }
    return out;
}

// records[u][trial] for each requested EM stage (u = -1 means the final report).
std::vector<std::vector<TrialRecord>> make_records(const ScenarioConfig& cfg, const ShapingMatrices& shaping,
                                                   const PreamblePool& pool, Algorithm alg, UadDcParams det,
                                                   const std::vector<int>& stages, double window_start,
                                                   std::uint64_t seed, int n, int threads) {
    std::vector<std::vector<TrialRecord>> rec(stages.size(), std::vector<TrialRecord>(n));
    int max_stage = -1;
    for (int u : stages) max_stage = std::max(max_stage, u);
    if (max_stage >= 0) {
        det.em_iters = max_stage;
        det.keep_history = true;
    }
    parallel_for(n, threads, [&](int i) {
        const WindowScene sc = trial_scene(cfg, shaping, pool, window_start, seed, i);
        const auto truth = truth_of(sc);
        if (alg == Algorithm::Conventional) {
            const DetectionReport rep = conventional_ra(sc.Y, pool, cfg.m_osf, 0.0, window_start);
            TrialRecord r;
            r.truth = truth;
            for (std::size_t k = 0; k < rep.preambles.size(); ++k) {
                Detection d;
                d.preamble = rep.preambles[k];
                d.delay = rep.delays.delays[k];
                d.score = rep.peaks[k];
                r.candidates.push_back(d);
            }
            r.default_active = rep.active_flags;
            for (std::size_t s = 0; s < stages.size(); ++s) rec[s][i] = r;
            return;
        }
        const UadDcResult res = uad_dc(sc.Y, shaping, pool, sc.noise_var, window_start, det);
        const DetectionReport& rep = res.report;
        for (std::size_t s = 0; s < stages.size(); ++s) {
            TrialRecord r;
            r.truth = truth;
            if (stages[s] < 0) {
                r.candidates = detections_from(rep.preambles, rep.delays.delays, rep.g_hat);
                r.default_active = rep.active_flags;
            } else {
                const EmSnapshot& snap = res.history.at(stages[s]);
                r.candidates = detections_from(rep.preambles, snap.delays, snap.g_hat);
                const double eta = det.eta_mode == EtaMode::Fixed
                                       ? det.eta_fixed
                                       : default_eta(snap.g_hat, snap.nu, cfg.n_antennas, det.eta_scale);
                r.default_active = threshold_activity(snap.g_hat, eta);
            }
            rec[s][i] = std::move(r);
        }
    });
    return rec;
}

}  // namespace

void restrict_to_zone(TrialRecord& r, double lo, double hi) {
    TrialRecord out;
    out.truth = std::move(r.truth);
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        if (r.candidates[i].delay < lo || r.candidates[i].delay > hi) continue;
        out.candidates.push_back(std::move(r.candidates[i]));
        out.default_active.push_back(r.default_active[i]);
    }
    r = std::move(out);
}

PulseShape resolve_filter(const std::string& name, int m_osf) {
    if (name.rfind("file:", 0) == 0) {
        PulseShape p = read_taps_csv(name.substr(5), name);
        if (p.m_osf != m_osf) throw ParameterError("filter file '" + name + "' has m_osf " + std::to_string(p.m_osf));
        return p;
    }
    return catalog_pulse(name, m_osf);
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<ResultRow> rows;
    const std::uint64_t eval_seed = mix_seed(spec.seed, 0xe5a1);
    const std::uint64_t calib_seed = mix_seed(spec.seed, 0xca1b);
    for (int m : spec.m_osf_values) {
        ScenarioConfig base = spec.scenario;
        base.m_osf = m;
        const PreamblePool pool = build_pool(base.n_preambles, base.preamble_len);
        const double ws = spec.window_start >= 0.0 ? spec.window_start : default_window_start(base);
        for (const auto& fname : spec.filters) {
            const PulseShape pulse = resolve_filter(fname, m);
            const ShapingMatrices shaping = build_shaping_matrices(pulse, base.window_len);
            for (Algorithm alg : spec.algorithms) {
                // scenario-changing sweep points need their own runs; EM stages and P_fa targets share one
                std::vector<std::pair<ScenarioConfig, std::vector<std::size_t>>> groups;
                if (spec.sweep_axis == SweepAxis::Snr || spec.sweep_axis == SweepAxis::NActive) {
                    for (std::size_t j = 0; j < spec.sweep_values.size(); ++j) {
                        ScenarioConfig c = base;
                        if (spec.sweep_axis == SweepAxis::Snr)
                            c.snr_db = spec.sweep_values[j];
                        else
                            c.n_active = static_cast<int>(spec.sweep_values[j]);
                        groups.push_back({c, {j}});
                    }
                } else {
                    std::vector<std::size_t> all(spec.sweep_values.size());
                    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
                    groups.push_back({base, all});
                }
                for (const auto& [cfg, idx] : groups) {
                    const auto t0 = std::chrono::steady_clock::now();
                    std::vector<int> stages;
                    for (std::size_t j : idx)
                        stages.push_back(spec.sweep_axis == SweepAxis::EmIter ? static_cast<int>(spec.sweep_values[j]) : -1);
                    auto eval = make_records(cfg, shaping, pool, alg, spec.detector, stages, ws, eval_seed,
                                                   spec.n_trials, spec.threads);
                    std::vector<std::vector<TrialRecord>> calib;
                    if (spec.calib_trials > 0)
                        calib = make_records(cfg, shaping, pool, alg, spec.detector, stages, ws, calib_seed,
                                             spec.calib_trials, spec.threads);
                    if (spec.type1_zone_only) {
                        const double hi = cfg.window_len - cfg.preamble_len + spec.delay_tol;
                        for (auto* set : {&eval, &calib})
                            for (auto& stage : *set)
                                for (auto& r : stage) restrict_to_zone(r, -spec.delay_tol, hi);
                    }
                    const double ms =
                        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                    for (std::size_t s = 0; s < idx.size(); ++s) {
                        const double v = spec.sweep_values[idx[s]];
                        const double target = spec.sweep_axis == SweepAxis::PfaThreshold ? v : spec.pfa_target;
                        const bool use_default = spec.calib_trials == 0;
                        // EM stages share the receiver threshold, calibrated on the last stage
                        std::size_t cs = s;
                        if (spec.sweep_axis == SweepAxis::EmIter)
                            cs = static_cast<std::size_t>(std::max_element(stages.begin(), stages.end()) - stages.begin());
                        const double thr = use_default ? 0.0 : calibrate_threshold(calib[cs], target, spec.delay_tol);
                        std::vector<TrialOutcome> out;
                        for (const auto& r : eval[s]) out.push_back(evaluate_trial(r, thr, use_default, spec.delay_tol));
                        ResultRow row;
                        row.algorithm = to_string(alg);
                        row.filter_label = pulse.label;
                        row.m_osf = m;
                        row.sweep_axis = to_string(spec.sweep_axis);
                        row.sweep_value = v;
                        const auto md = mean_stderr(per_trial_md(out));
                        row.p_md = std::isnan(md.first) ? 0.0 : md.first;
                        row.p_md_stderr = std::isnan(md.second) ? 0.0 : md.second;
                        row.p_fa = prob_false_alarm(out);
                        row.nmse = pooled_nmse(out);
                        std::vector<double> sdr;
                        for (const auto& o : out) {
                            const double x = o.n_true > 0 ? static_cast<double>(o.hits) / o.n_true : kNaN;
                            row.trial_sdr.push_back(x);
                            if (o.n_true > 0) sdr.push_back(x);
                        }
                        const auto sd = mean_stderr(sdr);
                        row.sdr = std::isnan(sd.first) ? 0.0 : sd.first;
                        row.sdr_stderr = std::isnan(sd.second) ? 0.0 : sd.second;
                        row.threshold = thr;
                        row.n_trials = spec.n_trials;
                        row.wall_ms = ms;
                        rows.push_back(std::move(row));
                    }
                }
            }
        }
    }
    return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows, bool with_wall_ms) {
    std::ostringstream os;
    os << "algorithm,filter_label,m_osf,sweep_axis,sweep_value,p_md,p_md_stderr,p_fa,nmse,sdr,n_trials";
    if (with_wall_ms) os << ",wall_ms";
    os << "\n" << std::setprecision(12);
    for (const auto& r : rows) {
        os << r.algorithm << "," << r.filter_label << "," << r.m_osf << "," << r.sweep_axis << "," << r.sweep_value << ","
           << r.p_md << "," << r.p_md_stderr << "," << r.p_fa << "," << r.nmse << "," << r.sdr << "," << r.n_trials;
        if (with_wall_ms) os << "," << std::fixed << std::setprecision(1) << r.wall_ms << std::defaultfloat << std::setprecision(12);
        os << "\n";
    }
    return os.str();
}

}  // namespace ralab
