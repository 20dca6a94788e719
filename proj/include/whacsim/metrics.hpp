#pragma once

// Round metrics computed from application episode logs and session trace
// dumps, plus parsers for the JSON-lines files the trainer and app emit.

#include <array>
#include <string>
#include <vector>

#include "whacsim/rollout.hpp"

namespace whacsim {

struct RoundMetrics {
  int episode = 0;
  int hits = 0;
  int misses = 0;
  int slow_contacts = 0;
  double hit_rate = 0.0;
  std::vector<double> hitting_speeds;      // m/s at hit events
  std::vector<double> hammer_depths;       // per step, signed along the hit axis
  std::array<double, 9> per_cell_hit_rate{};
  double max_fatigued = 0.0;  // max over the round of mean fatigued fraction
  std::string difficulty;
  std::string placement;
};

struct MetricsResult {
  std::vector<RoundMetrics> rounds;
  std::vector<std::string> warnings;  // includes malformed-line reports
};

// episode_log_path: application JSONL (one line per completed round).
// dump_path: optional session trace dump; adds hitting speeds, hammer
// depths and fatigue extracted from the recorded frames.
MetricsResult metrics_from_log(const std::string& episode_log_path,
                               const std::string& dump_path = "");

std::vector<EvalRoundRecord> read_eval_log(const std::string& path);

}  // namespace whacsim
