#include "whacsim/metrics.hpp"

#include <fstream>

#include <json.hpp>

#include "whacsim/session.hpp"

namespace whacsim {

namespace {

using nlohmann::json;

double entry_value(const std::vector<std::pair<std::string, double>>& entries,
                   const std::string& key, double def) {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return def;
}

}  // namespace

MetricsResult metrics_from_log(const std::string& episode_log_path,
                               const std::string& dump_path) {
  MetricsResult result;
  std::ifstream in(episode_log_path);
  if (!in) throw ConfigError("cannot open episode log: " + episode_log_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      result.warnings.push_back(episode_log_path + ":" + std::to_string(lineno) +
                                ": malformed log line");
      continue;
    }
    try {
      RoundMetrics m;
      m.episode = j.value("episode", 0);
      m.hits = j.value("hits", 0);
      m.misses = j.value("misses", 0);
      m.slow_contacts = j.value("slow_contacts", 0);
      int denom = m.hits + m.misses;
      m.hit_rate = denom > 0 ? static_cast<double>(m.hits) / denom : 0.0;
      m.difficulty = j.value("difficulty", "");
      m.placement = j.value("placement", "");
      if (j.contains("per_cell") && j["per_cell"].is_array() && j["per_cell"].size() == 9) {
        for (int c = 0; c < 9; ++c) {
          const json& cell = j["per_cell"][c];
          int spawns = cell.value("spawns", 0);
          int hits = cell.value("hits", 0);
          m.per_cell_hit_rate[c] = spawns > 0 ? static_cast<double>(hits) / spawns : 0.0;
        }
      }
      result.rounds.push_back(std::move(m));
    } catch (const json::exception&) {
      result.warnings.push_back(episode_log_path + ":" + std::to_string(lineno) +
                                ": malformed log line");
    }
  }

  if (dump_path.empty()) return result;

  // Walk the trace: hitting speed is v_h on steps where the hit counter
  // advances; hammer depth is logged per step; fatigue rides the
  // STATE_UPDATE channels.
  FrameDumpReader dump(dump_path);
  size_t round_idx = 0;
  int prev_hits = 0;
  double max_fatigued = 0.0;
  double pending_fatigue = 0.0;
  std::vector<double> speeds;
  std::vector<double> depths;
  for (size_t i = 0; i < dump.size(); ++i) {
    wire::Message msg = dump.decode(i);
    if (const auto* reset_ack = std::get_if<wire::ResetAckMsg>(&msg)) {
      (void)reset_ack;
      prev_hits = 0;
      max_fatigued = 0.0;
      speeds.clear();
      depths.clear();
    } else if (const auto* update = std::get_if<wire::StateUpdateMsg>(&msg)) {
      pending_fatigue = entry_value(update->channels, "fatigue", 0.0);
    } else if (const auto* obs = std::get_if<wire::ObservationMsg>(&msg)) {
      max_fatigued = std::max(max_fatigued, pending_fatigue);
      int hits_now = static_cast<int>(entry_value(obs->log_entries, "hits", 0.0));
      double v_h = entry_value(obs->log_entries, "v_h", 0.0);
      for (int h = prev_hits; h < hits_now; ++h) speeds.push_back(v_h);
      prev_hits = hits_now;
      depths.push_back(entry_value(obs->log_entries, "hammer_depth", 0.0));
      if (obs->is_finished) {
        if (round_idx < result.rounds.size()) {
          result.rounds[round_idx].hitting_speeds = speeds;
          result.rounds[round_idx].hammer_depths = depths;
          result.rounds[round_idx].max_fatigued = max_fatigued;
        } else {
          result.warnings.push_back(dump_path + ": more completed rounds than log lines");
        }
        ++round_idx;
        prev_hits = 0;
        max_fatigued = 0.0;
        speeds.clear();
        depths.clear();
      }
    }
  }
  if (round_idx < result.rounds.size()) {
    result.warnings.push_back(dump_path + ": trace ends before all logged rounds completed");
  }
  return result;
}

std::vector<EvalRoundRecord> read_eval_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open evaluation log: " + path);
  std::vector<EvalRoundRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed evaluation record");
    }
    EvalRoundRecord rec;
    rec.difficulty = j.value("difficulty", "");
    rec.placement = j.value("placement", "");
    rec.round = j.value("round", 0);
    rec.hits = j.value("hits", 0);
    rec.misses = j.value("misses", 0);
    rec.slow_contacts = j.value("slow_contacts", 0);
    rec.score = j.value("score", 0);
    rec.hit_rate = j.value("hit_rate", 0.0);
    rec.max_fatigued = j.value("max_fatigued", 0.0);
    rec.episode_reward = j.value("episode_reward", 0.0);
    auto read_cells = [&](const char* key, std::array<int, 9>& arr) {
      if (j.contains(key) && j[key].is_array() && j[key].size() == 9) {
        for (int c = 0; c < 9; ++c) arr[c] = j[key][c].get<int>();
      }
    };
    read_cells("cell_spawns", rec.cell_spawns);
    read_cells("cell_hits", rec.cell_hits);
    read_cells("cell_misses", rec.cell_misses);
    if (j.contains("hitting_speeds") && j["hitting_speeds"].is_array()) {
      for (const auto& v : j["hitting_speeds"]) rec.hitting_speeds.push_back(v.get<double>());
    }
    if (j.contains("hammer_depths") && j["hammer_depths"].is_array()) {
      for (const auto& v : j["hammer_depths"]) rec.hammer_depths.push_back(v.get<double>());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace whacsim
