// Exercises the shared library's C surface the way an embedder would:
// opaque handles, error codes, and the batch analysis functions.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>

#include "whacsim.h"

TEST_CASE("version and error reporting") {
  CHECK(wsim_version() >= 100);
  CHECK(wsim_arm_step(nullptr, nullptr, 0.05) == WSIM_ERR_INVALID_ARG);
  CHECK(std::strlen(wsim_last_error()) > 0);
}

TEST_CASE("arm handle lifecycle and stepping") {
  wsim_arm* arm = wsim_arm_create(nullptr);
  REQUIRE(arm != nullptr);

  double q[WSIM_ARM_DOFS], qdot[WSIM_ARM_DOFS];
  REQUIRE(wsim_arm_joint_state(arm, q, qdot) == WSIM_OK);
  for (int d = 0; d < WSIM_ARM_DOFS; ++d) {
    CHECK(q[d] == 0.0);
    CHECK(qdot[d] == 0.0);
  }

  double tip[3];
  REQUIRE(wsim_arm_hammer_tip(arm, tip) == WSIM_OK);
  CHECK(tip[1] < 0.0);  // arm hangs down at rest

  double controls[WSIM_ARM_ACTUATORS] = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 40; ++i) {
    REQUIRE(wsim_arm_step(arm, controls, 0.05) == WSIM_OK);
  }
  double act[WSIM_ARM_ACTUATORS];
  REQUIRE(wsim_arm_activations(arm, act) == WSIM_OK);
  CHECK(act[0] > 0.9);

  double fatigued = -1.0;
  REQUIRE(wsim_arm_fatigue(arm, &fatigued) == WSIM_OK);
  CHECK(fatigued > 0.0);
  CHECK(fatigued < 1.0);

  REQUIRE(wsim_arm_reset(arm) == WSIM_OK);
  REQUIRE(wsim_arm_fatigue(arm, &fatigued) == WSIM_OK);
  CHECK(fatigued == 0.0);

  CHECK(wsim_arm_step(arm, controls, -1.0) != WSIM_OK);  // bad dt reported

  wsim_arm_destroy(arm);
}

TEST_CASE("game handle scores hits through the C surface") {
  const char* keys[] = {"difficulty", "constrained", "seed"};
  const char* values[] = {"easy", "0", "4"};
  wsim_game* game = wsim_game_create(keys, values, 3);
  REQUIRE(game != nullptr);
  REQUIRE(wsim_game_reset(game, 99) == WSIM_OK);

  // Chase the active target directly; in unconstrained mode any contact
  // scores.
  double reward = 0.0;
  int finished = 0;
  for (int k = 1; k <= 100; ++k) {
    double tip[3] = {0.0, -1.0, 0.0};
    if (wsim_game_target_count(game) > 0) {
      double age = 0.0;
      REQUIRE(wsim_game_target(game, 0, tip, &age) == WSIM_OK);
      CHECK(age >= 0.0);
    }
    REQUIRE(wsim_game_step(game, 0.05 * k, tip, 0.0, &reward, &finished) == WSIM_OK);
  }
  int score, hits, misses, slow;
  REQUIRE(wsim_game_counters(game, &score, &hits, &misses, &slow) == WSIM_OK);
  CHECK(hits > 0);
  CHECK(score == hits);
  CHECK(slow == 0);

  wsim_game* bad = wsim_game_create(keys, values, 0);
  REQUIRE(bad != nullptr);  // zero entries are just defaults
  wsim_game_destroy(bad);

  const char* bad_keys[] = {"difficulty"};
  const char* bad_values[] = {"impossible"};
  CHECK(wsim_game_create(bad_keys, bad_values, 1) == nullptr);
  CHECK(std::string(wsim_last_error()).find("difficulty") != std::string::npos);

  wsim_game_destroy(game);
}

TEST_CASE("wilcoxon and ks through the C API") {
  double x[10], y[10];
  for (int i = 0; i < 10; ++i) {
    x[i] = i;
    y[i] = i + 1.0;
  }
  double z = 0.0, p = 0.0;
  REQUIRE(wsim_wilcoxon_signed_rank(x, y, 10, 0, &z, &p) == WSIM_OK);
  CHECK(std::abs(p - 1.0 / 1024.0) < 1e-12);
  CHECK(wsim_wilcoxon_signed_rank(x, y, 10, 7, &z, &p) == WSIM_ERR_INVALID_ARG);

  double sample[100];
  for (int i = 0; i < 100; ++i) sample[i] = std::sin(i * 12.9898) * 43758.5453;
  for (int i = 0; i < 100; ++i) sample[i] -= std::floor(sample[i]);  // uniform-ish
  double stat = 0.0, kp = 0.0;
  REQUIRE(wsim_ks_normality(sample, 100, &stat, &kp) == WSIM_OK);
  CHECK(stat > 0.0);
}

TEST_CASE("gae through the C API matches the recursion") {
  double rewards[4] = {1.0, 1.0, 1.0, 1.0};
  double values[4] = {0.0, 0.0, 0.0, 0.0};
  uint8_t dones[4] = {0, 0, 0, 0};
  double adv[4], ret[4];
  REQUIRE(wsim_gae(rewards, values, dones, 4, 0.0, 1.0, 1.0, adv, ret) == WSIM_OK);
  CHECK(adv[0] == 4.0);
  CHECK(adv[3] == 1.0);
  CHECK(wsim_gae(nullptr, values, dones, 4, 0.0, 1.0, 1.0, adv, ret) == WSIM_ERR_INVALID_ARG);
}

TEST_CASE("runner subcommands pass through wsim_run") {
  const char* overrides[] = {"run.out_dir=/tmp/wsim_capi_scale", "scale.horizon=10"};
  CHECK(wsim_run("reward-scale", nullptr, overrides, 2) == 0);
  CHECK(wsim_run("no-such-command", nullptr, nullptr, 0) == 2);
  CHECK(wsim_run(nullptr, nullptr, nullptr, 0) == WSIM_ERR_INVALID_ARG);
}
