#pragma once

#include <string>

#include "json.hpp"
#include "ralab/airsim.hpp"
#include "ralab/delaycal.hpp"

namespace ralab {

// Observation CSV: header "sample,antenna,re,im", row-major over samples.
void write_observation_csv(const CMat& Y, const std::string& path);
CMat read_observation_csv(const std::string& path);

nlohmann::json scene_to_json(const WindowScene& scene);
nlohmann::json report_to_json(const DetectionReport& report, const std::string& algorithm);

// Robust sigma^2 from the whitened observation: median |F^+ y|^2 / ln 2.
double estimate_noise_var(const CMat& Y, const ShapingMatrices& shaping);

void write_text(const std::string& path, const std::string& text);

}  // namespace ralab
