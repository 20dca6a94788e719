#pragma once

// Subcommand orchestration behind the CLI and the C API. Every command is
// driven by one flat key-value config (file + overrides); outputs are
// deterministic given the config and seed, with wall-clock metadata kept in
// a separate sidecar file.

#include <string>
#include <vector>

#include "whacsim/config.hpp"
#include "whacsim/rollout.hpp"
#include "whacsim/trainer.hpp"

namespace whacsim {

// Builds the env/trainer configs from the flat config keys (sections arm.*,
// game.*, ppo.*, env.*, run.*).
TrainerConfig trainer_config_from(const KeyValueConfig& cfg);
BridgeEnvConfig env_config_from(const KeyValueConfig& cfg);
ArmModel arm_model_from(const KeyValueConfig& cfg);

int cmd_train(const KeyValueConfig& cfg);
int cmd_eval(const KeyValueConfig& cfg);
int cmd_replay(const KeyValueConfig& cfg);
int cmd_envelope(const KeyValueConfig& cfg);
int cmd_reward_scale(const KeyValueConfig& cfg);
int cmd_report(const KeyValueConfig& cfg);
int cmd_serve(const KeyValueConfig& cfg);

// Loads the config file (optional), applies overrides and environment
// variables (WHACSIM_OUT_DIR, WHACSIM_BRIDGE_ADDR), then dispatches.
// Returns a process exit code; all errors are reported on stderr.
int run_command(const std::string& subcommand, const std::string& config_path,
                const std::vector<std::string>& overrides);

}  // namespace whacsim
