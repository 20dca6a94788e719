#pragma once

// Report bundle over the six-configuration evaluation grid: plot-ready CSV
// and JSON tables for hits/misses, hit rates, per-cell heatmaps, hitting
// speeds, hammer depths, and the fatigue-by-placement comparisons.

#include <string>
#include <vector>

#include "whacsim/rollout.hpp"

namespace whacsim {

struct ReportResult {
  std::vector<std::string> files_written;
  std::vector<std::string> warnings;  // e.g. missing grid configurations
};

ReportResult write_report(const std::vector<EvalRoundRecord>& records,
                          const std::string& out_dir);

}  // namespace whacsim
