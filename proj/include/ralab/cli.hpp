#pragma once

#include <string>
#include <vector>

#include "ralab/config.hpp"

namespace ralab {

// Each command writes into out_dir and returns the primary output path.
std::string cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
std::string cmd_detect(const RunConfig& cfg, const std::string& observation_path, const std::string& out_dir);
std::string cmd_bcrb(const RunConfig& cfg, const std::string& out_dir);
std::string cmd_optimize_filter(const RunConfig& cfg, const std::string& out_dir);
std::string cmd_sweep(const RunConfig& cfg, const std::string& out_dir);

// Exit codes: 0 success, 1 runtime/numeric error, 2 usage/config error.
int run_cli(int argc, char** argv);

}  // namespace ralab
