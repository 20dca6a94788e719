#include "whacsim/scaling.hpp"

#include <cmath>

#include "whacsim/textio.hpp"

namespace whacsim {

ScalingScenario parse_scaling_scenario(const std::string& s) {
  if (s == "worst_case") return ScalingScenario::kWorstCase;
  if (s == "best_case") return ScalingScenario::kBestCase;
  if (s == "linear_interp") return ScalingScenario::kLinearInterp;
  if (s == "quadratic_interp") return ScalingScenario::kQuadraticInterp;
  throw ConfigError("unknown scaling scenario: " + s);
}

const char* scaling_scenario_name(ScalingScenario s) {
  switch (s) {
    case ScalingScenario::kWorstCase: return "worst_case";
    case ScalingScenario::kBestCase: return "best_case";
    case ScalingScenario::kLinearInterp: return "linear_interp";
    case ScalingScenario::kQuadraticInterp: return "quadratic_interp";
  }
  return "?";
}

std::vector<ScalingRow> reward_scale_report(const ScalingConfig& cfg) {
  if (cfg.horizon_steps < 1) throw ConfigError("scaling horizon must be at least 1 step");
  if (!(cfg.dt > 0.0)) throw ConfigError("scaling dt must be positive");
  int steps_per_lifespan = std::max(1, static_cast<int>(std::lround(cfg.target_lifespan / cfg.dt)));
  const RewardWeights& w = cfg.weights;

  std::vector<ScalingRow> rows;
  rows.reserve(cfg.horizon_steps);
  double cum_score = 0.0, cum_contact = 0.0, cum_distance = 0.0, cum_effort = 0.0;
  int last = cfg.horizon_steps - 1;
  for (int k = 0; k < cfg.horizon_steps; ++k) {
    double s = 0.0;
    double c_d = 0.0;
    switch (cfg.scenario) {
      case ScalingScenario::kWorstCase:
        c_d = -(cfg.initial_pos - cfg.target_pos).norm();
        break;
      case ScalingScenario::kBestCase:
        // Already at the target: distance zero, one hit per target lifespan.
        s = (k % steps_per_lifespan == 0) ? 1.0 : 0.0;
        break;
      case ScalingScenario::kLinearInterp:
      case ScalingScenario::kQuadraticInterp: {
        double frac = last > 0 ? static_cast<double>(k) / last : 1.0;
        if (cfg.scenario == ScalingScenario::kQuadraticInterp) frac *= frac;
        Vec3 pos = cfg.initial_pos + frac * (cfg.target_pos - cfg.initial_pos);
        c_d = -(pos - cfg.target_pos).norm();
        s = (k == last) ? 1.0 : 0.0;
        break;
      }
    }
    double c_c = 0.0;  // the stylized paths never make sub-threshold contact
    double c_e = -cfg.effort_level;
    double v_h = 0.0;

    ScalingRow row;
    row.step = k;
    row.score = s;
    row.contact = c_c;
    row.distance = c_d;
    row.effort = c_e;
    cum_score += w.score * s;
    cum_contact += w.contact * v_h * c_c;
    cum_distance += w.distance * c_d;
    cum_effort += w.effort * c_e;
    row.cum_score = cum_score;
    row.cum_contact = cum_contact;
    row.cum_distance = cum_distance;
    row.cum_effort = cum_effort;
    // Recomposed from the component sums in a fixed order so the table
    // reconstructs exactly.
    double cum_total = cum_score + cum_contact + cum_distance + cum_effort;
    row.cum_total = cum_total;
    double denom = std::abs(cum_total);
    row.ratio_score = denom > 0.0 ? std::abs(cum_score) / denom : 0.0;
    row.ratio_contact = denom > 0.0 ? std::abs(cum_contact) / denom : 0.0;
    row.ratio_distance = denom > 0.0 ? std::abs(cum_distance) / denom : 0.0;
    row.ratio_effort = denom > 0.0 ? std::abs(cum_effort) / denom : 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
  std::string out =
      "step,score,contact,distance,effort,cum_score,cum_contact,cum_distance,cum_effort,"
      "cum_total,ratio_score,ratio_contact,ratio_distance,ratio_effort\n";
  for (const ScalingRow& r : rows) {
    out += std::to_string(r.step);
    out += "," + f64_repr(r.score);
    out += "," + f64_repr(r.contact);
    out += "," + f64_repr(r.distance);
    out += "," + f64_repr(r.effort);
    out += "," + f64_repr(r.cum_score);
    out += "," + f64_repr(r.cum_contact);
    out += "," + f64_repr(r.cum_distance);
    out += "," + f64_repr(r.cum_effort);
    out += "," + f64_repr(r.cum_total);
    out += "," + f64_repr(r.ratio_score);
    out += "," + f64_repr(r.ratio_contact);
    out += "," + f64_repr(r.ratio_distance);
    out += "," + f64_repr(r.ratio_effort);
    out += "\n";
  }
  return out;
}

}  // namespace whacsim
