#pragma once

// The application endpoint: serves the game over the bridge protocol,
// renders the negotiated RGB-D view, assembles per-step observations and
// writes the per-episode JSON-lines log.

#include <memory>
#include <string>
#include <vector>

#include "whacsim/game.hpp"
#include "whacsim/render.hpp"
#include "whacsim/server.hpp"
#include "whacsim/wire.hpp"

namespace whacsim {

struct EpisodeRecord {
  int episode = 0;
  int hits = 0;
  int misses = 0;
  int slow_contacts = 0;
  int score = 0;
  PerCellCounters per_cell{};
  std::string difficulty;
  std::string placement;
  bool constrained = true;
  uint64_t seed = 0;
};

std::string episode_record_json(const EpisodeRecord& rec);

class WhacApp : public AppHandler {
 public:
  explicit WhacApp(GameConfig base, std::string episode_log_path = "");

  wire::HelloAckMsg on_hello(const wire::HelloMsg& hello) override;
  wire::ObservationMsg on_reset(
      const std::vector<std::pair<std::string, std::string>>& episode_config) override;
  wire::ObservationMsg on_step(const wire::StateUpdateMsg& update) override;

  const Game& game() const { return game_; }
  const std::vector<EpisodeRecord>& completed_episodes() const { return completed_; }
  int episodes_started() const { return episodes_started_; }

  std::vector<uint8_t> save_snapshot() const;
  void restore_snapshot(std::span<const uint8_t> bytes);

 private:
  wire::ObservationMsg make_observation(const Game::StepResult* step);
  void finish_episode();

  GameConfig base_cfg_;
  Game game_;
  wire::HelloAckMsg negotiated_{};
  bool hello_done_ = false;
  int episodes_started_ = 0;
  bool episode_open_ = false;
  bool have_hammer_ = false;
  Vec3 hammer_tip_{};
  Pose hmd_{};
  std::vector<EpisodeRecord> completed_;
  std::string episode_log_path_;
};

}  // namespace whacsim
