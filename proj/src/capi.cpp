#include "whacsim.h"

#include <cstring>
#include <string>
#include <vector>

#include "whacsim/arm.hpp"
#include "whacsim/game.hpp"
#include "whacsim/ppo.hpp"
#include "whacsim/runner.hpp"
#include "whacsim/stats.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const whacsim::ConfigError& e) {
    set_error(e.what());
    return WSIM_ERR_INVALID_ARG;
  } catch (const whacsim::ProtocolError& e) {
    set_error(e.what());
    return WSIM_ERR_PROTOCOL;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return WSIM_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return WSIM_ERR_RUNTIME;
  }
}

}  // namespace

struct wsim_arm {
  whacsim::Arm impl;
};

struct wsim_game {
  whacsim::Game impl;
  whacsim::GameConfig base;
};

extern "C" {

int wsim_version(void) { return 100; }

const char* wsim_last_error(void) { return g_last_error.c_str(); }

int wsim_run(const char* subcommand, const char* config_path_or_null,
             const char* const* overrides, size_t n_overrides) {
  if (!subcommand) {
    set_error("subcommand is null");
    return WSIM_ERR_INVALID_ARG;
  }
  std::vector<std::string> ov;
  for (size_t i = 0; i < n_overrides; ++i) {
    if (!overrides || !overrides[i]) {
      set_error("override entry is null");
      return WSIM_ERR_INVALID_ARG;
    }
    ov.emplace_back(overrides[i]);
  }
  return whacsim::run_command(subcommand, config_path_or_null ? config_path_or_null : "", ov);
}

wsim_arm* wsim_arm_create(const char* config_path_or_null) {
  try {
    whacsim::ArmModel model;
    if (config_path_or_null && *config_path_or_null) {
      model = whacsim::ArmModel::from_config(
          whacsim::KeyValueConfig::parse_file(config_path_or_null));
    }
    return new wsim_arm{whacsim::Arm(model)};
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

void wsim_arm_destroy(wsim_arm* arm) { delete arm; }

int wsim_arm_reset(wsim_arm* arm) {
  if (!arm) {
    set_error("arm handle is null");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    arm->impl.reset();
    return WSIM_OK;
  });
}

int wsim_arm_step(wsim_arm* arm, const double controls[WSIM_ARM_ACTUATORS], double dt) {
  if (!arm || !controls) {
    set_error("arm handle or controls are null");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    std::array<double, whacsim::kArmActuators> u;
    std::memcpy(u.data(), controls, sizeof(u));
    arm->impl.step(u, dt);
    return WSIM_OK;
  });
}

int wsim_arm_joint_state(const wsim_arm* arm, double q[WSIM_ARM_DOFS],
                         double qdot[WSIM_ARM_DOFS]) {
  if (!arm || !q || !qdot) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  const whacsim::ArmState& s = arm->impl.state();
  std::memcpy(q, s.q.data(), sizeof(double) * WSIM_ARM_DOFS);
  std::memcpy(qdot, s.qdot.data(), sizeof(double) * WSIM_ARM_DOFS);
  return WSIM_OK;
}

int wsim_arm_activations(const wsim_arm* arm, double activations[WSIM_ARM_ACTUATORS]) {
  if (!arm || !activations) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  std::memcpy(activations, arm->impl.state().activations.data(),
              sizeof(double) * WSIM_ARM_ACTUATORS);
  return WSIM_OK;
}

int wsim_arm_hammer_tip(const wsim_arm* arm, double position[3]) {
  if (!arm || !position) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  whacsim::Vec3 p = arm->impl.hammer_tip_pose().position;
  position[0] = p.x;
  position[1] = p.y;
  position[2] = p.z;
  return WSIM_OK;
}

int wsim_arm_fatigue(const wsim_arm* arm, double* mean_fatigued_fraction) {
  if (!arm || !mean_fatigued_fraction) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  *mean_fatigued_fraction = arm->impl.fatigue().mean_fatigued_fraction();
  return WSIM_OK;
}

wsim_game* wsim_game_create(const char* const* keys, const char* const* values, size_t n) {
  try {
    whacsim::KeyValueConfig cfg;
    for (size_t i = 0; i < n; ++i) {
      if (!keys || !values || !keys[i] || !values[i]) {
        set_error("config key/value entry is null");
        return nullptr;
      }
      cfg.set(keys[i], values[i]);
    }
    whacsim::GameConfig game = whacsim::GameConfig::from_config(cfg);
    return new wsim_game{whacsim::Game(game), game};
  } catch (const std::exception& e) {
    set_error(e.what());
    return nullptr;
  }
}

void wsim_game_destroy(wsim_game* game) { delete game; }

int wsim_game_reset(wsim_game* game, uint64_t seed) {
  if (!game) {
    set_error("game handle is null");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    whacsim::GameConfig cfg = game->base;
    cfg.seed = seed;
    game->impl.reset(cfg);
    return WSIM_OK;
  });
}

int wsim_game_step(wsim_game* game, double t_next, const double tip_pos[3], double effort,
                   double* reward, int* finished) {
  if (!game || !tip_pos) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    // The C surface drives the game with a raw tip position; undo the
    // configured tip offset so Game::step recomputes the same point.
    whacsim::Pose controller;
    whacsim::Vec3 tip{tip_pos[0], tip_pos[1], tip_pos[2]};
    controller.position = tip - game->impl.config().hammer_tip_offset.position;
    auto res = game->impl.step(t_next, controller, effort);
    if (reward) *reward = res.reward.total;
    if (finished) *finished = res.finished ? 1 : 0;
    return WSIM_OK;
  });
}

int wsim_game_counters(const wsim_game* game, int* score, int* hits, int* misses,
                       int* slow_contacts) {
  if (!game) {
    set_error("game handle is null");
    return WSIM_ERR_INVALID_ARG;
  }
  if (score) *score = game->impl.score();
  if (hits) *hits = game->impl.hits();
  if (misses) *misses = game->impl.misses();
  if (slow_contacts) *slow_contacts = game->impl.slow_contacts();
  return WSIM_OK;
}

int wsim_game_target_count(const wsim_game* game) {
  if (!game) {
    set_error("game handle is null");
    return -1;
  }
  return static_cast<int>(game->impl.targets().size());
}

int wsim_game_target(const wsim_game* game, int index, double position[3], double* age) {
  if (!game || !position) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  const auto& targets = game->impl.targets();
  if (index < 0 || index >= static_cast<int>(targets.size())) {
    set_error("target index out of range");
    return WSIM_ERR_INVALID_ARG;
  }
  position[0] = targets[index].position.x;
  position[1] = targets[index].position.y;
  position[2] = targets[index].position.z;
  if (age) *age = targets[index].age;
  return WSIM_OK;
}

int wsim_wilcoxon_signed_rank(const double* x, const double* y, size_t n, int alternative,
                              double* z, double* p) {
  if (!x || !y || !z || !p) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  if (alternative < 0 || alternative > 2) {
    set_error("alternative must be 0 (less), 1 (greater) or 2 (two-sided)");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    whacsim::Alternative alt = alternative == 0   ? whacsim::Alternative::kLess
                               : alternative == 1 ? whacsim::Alternative::kGreater
                                                  : whacsim::Alternative::kTwoSided;
    auto res = whacsim::wilcoxon_signed_rank(std::span(x, n), std::span(y, n), alt);
    *z = res.z;
    *p = res.p;
    return WSIM_OK;
  });
}

int wsim_ks_normality(const double* sample, size_t n, double* statistic, double* p) {
  if (!sample || !statistic || !p) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    auto res = whacsim::ks_normality_test(std::span(sample, n));
    *statistic = res.statistic;
    *p = res.p;
    return WSIM_OK;
  });
}

int wsim_gae(const double* rewards, const double* values, const uint8_t* dones, size_t n,
             double bootstrap_value, double gamma, double lambda, double* advantages,
             double* returns) {
  if (!rewards || !values || !dones || !advantages || !returns) {
    set_error("null argument");
    return WSIM_ERR_INVALID_ARG;
  }
  return guarded([&] {
    whacsim::compute_gae(std::span(rewards, n), std::span(values, n), std::span(dones, n),
                         bootstrap_value, gamma, lambda, std::span(advantages, n),
                         std::span(returns, n));
    return WSIM_OK;
  });
}

}  // extern "C"
