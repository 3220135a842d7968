#pragma once

#include <string>
#include <vector>

#include "flcc/config.hpp"

namespace flcc {

struct RunArtifacts {
    std::string out_dir;
    std::vector<std::string> files;
};

/// Sweeps the SINR threshold over the configured dB grid for every configured
/// intensity, writing analytic and Monte Carlo success-probability curves plus
/// the capacity curve, and an SVG overlaying analytic vs. simulated P_s(T).
RunArtifacts cmd_net_analyze(const ExperimentConfig& cfg, const std::string& out_dir);

/// Full federated run in the chosen mode. Baseline = random channels, uniform
/// trust, attackers never down-weighted; Flcc = planned channels plus the
/// trust machinery. Writes layout, partition, round/trust/MAC logs, the final
/// model checkpoint, accuracy+loss SVG curves and the frozen resolved config.
RunArtifacts cmd_fl_run(const ExperimentConfig& cfg, MacMode mode, const std::string& out_dir);

/// Merge the round logs from completed run directories into one overlay chart.
RunArtifacts cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace flcc
