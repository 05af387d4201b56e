#include "ralab/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace ralab {

void write_observation_csv(const CMat& Y, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path);
    f << "sample,antenna,re,im\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index a = 0; a < Y.cols(); ++a) f << i << "," << a << "," << Y(i, a).real() << "," << Y(i, a).imag() << "\n";
}

CMat read_observation_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot read observation file " + path);
    struct Entry {
        long i, a;
        double re, im;
    };
    std::vector<Entry> rows;
    std::string line;
    int ln = 0;
    long ni = 0, na = 0;
    while (std::getline(f, line)) {
        ++ln;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (ln == 1 && line.rfind("sample", 0) == 0) continue;
        const std::string where = path + ":" + std::to_string(ln);
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (cells.size() != 4) throw ParseError(where + ": expected 4 fields (sample,antenna,re,im)");
        Entry e{};
        try {
            std::size_t p = 0;
            e.i = std::stol(cells[0], &p);
            if (p != cells[0].size()) throw std::invalid_argument("trailing");
            e.a = std::stol(cells[1], &p);
            if (p != cells[1].size()) throw std::invalid_argument("trailing");
            e.re = std::stod(cells[2], &p);
            if (p != cells[2].size()) throw std::invalid_argument("trailing");
            e.im = std::stod(cells[3], &p);
            if (p != cells[3].size()) throw std::invalid_argument("trailing");
        } catch (const std::logic_error&) {
            throw ParseError(where + ": malformed number");
        }
        if (e.i < 0 || e.a < 0) throw ParseError(where + ": negative index");
        ni = std::max(ni, e.i + 1);
        na = std::max(na, e.a + 1);
        rows.push_back(e);
    }
    if (rows.empty()) throw ParseError(path + ": no observation rows");
    if (static_cast<long>(rows.size()) != ni * na) throw ParseError(path + ": expected " + std::to_string(ni * na) + " rows, found " + std::to_string(rows.size()));
    CMat Y = CMat::Constant(ni, na, cx(std::nan(""), 0.0));
    for (const auto& e : rows) Y(e.i, e.a) = cx(e.re, e.im);
    if (!Y.allFinite()) throw ParseError(path + ": missing or duplicate (sample, antenna) entries");
    return Y;
}

namespace {

nlohmann::json cvec_json(const CVec& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
    return a;
}

}  // namespace

nlohmann::json scene_to_json(const WindowScene& scene) {
    nlohmann::json j;
    j["window_start"] = scene.window_start;
    j["noise_var"] = scene.noise_var;
    j["lm"] = scene.Y.rows();
    j["n_antennas"] = scene.Y.cols();
    auto users = nlohmann::json::array();
    for (std::size_t k = 0; k < scene.users.size(); ++k) {
        users.push_back({{"user", scene.users[k]},
                         {"type", to_string(scene.types[k])},
                         {"delay", scene.true_delays[k]},
                         {"delay_in_window", scene.true_delays[k] - scene.window_start},
                         {"preamble", scene.preamble_assignment[k]},
                         {"gamma", scene.gamma[k]},
                         {"g", cvec_json(scene.G.row(k).transpose())}});
    }
    j["users"] = users;
    j["n_type1"] = scene.n_type1();
    return j;
}

nlohmann::json report_to_json(const DetectionReport& r, const std::string& algorithm) {
    nlohmann::json j;
    j["algorithm"] = algorithm;
    j["window_start"] = r.window_start;
    j["eta_th"] = r.eta_th;
    j["rho_hat"] = r.rho_hat;
    j["em_iters_used"] = r.em_iters_used;
    j["grid_step"] = r.delays.grid_step;
    auto c = nlohmann::json::array();
    int n_active = 0;
    for (std::size_t k = 0; k < r.preambles.size(); ++k) {
        nlohmann::json e{{"preamble", r.preambles[k]},
                         {"delay_in_window", r.delays.delays[k]},
                         {"peak", r.peaks[k]},
                         {"active", static_cast<bool>(r.active_flags[k])}};
        if (r.nu.size() > static_cast<Eigen::Index>(k)) e["nu"] = r.nu[k];
        if (r.g_hat.rows() > static_cast<Eigen::Index>(k)) {
            e["row_power"] = r.row_power[k];
            e["g"] = cvec_json(r.g_hat.row(k).transpose());
        }
        n_active += r.active_flags[k] ? 1 : 0;
        c.push_back(e);
    }
    j["candidates"] = c;
    j["n_candidates"] = r.preambles.size();
    j["n_active"] = n_active;
    return j;
}

double estimate_noise_var(const CMat& Y, const ShapingMatrices& shaping) {
    if (Y.rows() != shaping.lm) throw ShapeError("observation rows do not match LM");
    const CMat W = shaping.F_pinv.cast<cx>() * Y;
    std::vector<double> p;
    p.reserve(W.size());
    for (Eigen::Index i = 0; i < W.size(); ++i) p.push_back(std::norm(W.data()[i]));
    const double v = median(p) / std::log(2.0);
    if (!(v > 0.0)) throw NumericError("noise variance estimate is not positive");
    return v;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

}  // namespace ralab
