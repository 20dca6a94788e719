#pragma once

// Reward scaling forecasts: closed-form per-step evaluation of the reward
// components under stylized scenarios, to check that no component drowns
// out the others before any training is run.

#include <string>
#include <vector>

#include "whacsim/game.hpp"
#include "whacsim/geom.hpp"

namespace whacsim {

enum class ScalingScenario { kWorstCase, kBestCase, kLinearInterp, kQuadraticInterp };

ScalingScenario parse_scaling_scenario(const std::string& s);
const char* scaling_scenario_name(ScalingScenario s);

struct ScalingConfig {
  ScalingScenario scenario = ScalingScenario::kWorstCase;
  int horizon_steps = 1200;
  double dt = 0.05;
  Vec3 initial_pos{0.15, -0.60, 0.10};  // hammer at rest
  Vec3 target_pos{0.15, -0.10, 0.40};   // one active target
  double effort_level = 0.1;            // constant fatigue proxy in [0,1]
  double target_lifespan = 1.0;
  RewardWeights weights{};
};

struct ScalingRow {
  int step = 0;
  double score = 0.0;     // S this step
  double contact = 0.0;   // C_c this step
  double distance = 0.0;  // C_d this step
  double effort = 0.0;    // C_e this step
  double cum_score = 0.0;     // weighted cumulative sums
  double cum_contact = 0.0;
  double cum_distance = 0.0;
  double cum_effort = 0.0;
  double cum_total = 0.0;
  double ratio_score = 0.0;  // |weighted cumulative| / |cumulative total|
  double ratio_contact = 0.0;
  double ratio_distance = 0.0;
  double ratio_effort = 0.0;
};

std::vector<ScalingRow> reward_scale_report(const ScalingConfig& cfg);

std::string scaling_csv(const std::vector<ScalingRow>& rows);

}  // namespace whacsim
