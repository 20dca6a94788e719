/* whacsim — co-simulation testbed: a muscle-driven arm model plays a
 * Whac-A-Mole reaction game over a lockstep wire protocol, with a PPO
 * trainer and analysis tools behind it.
 *
 * C API of the shared library. Objects are opaque handles; functions
 * return 0 on success or a WSIM_ERR_* code, with a human-readable message
 * available from wsim_last_error() (thread-local).
 */

#ifndef WHACSIM_H
#define WHACSIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define WSIM_OK 0
#define WSIM_ERR_INVALID_ARG 1
#define WSIM_ERR_IO 2
#define WSIM_ERR_PROTOCOL 3
#define WSIM_ERR_RUNTIME 4

#define WSIM_ARM_DOFS 3
#define WSIM_ARM_ACTUATORS 6

/* Library version, encoded as major*10000 + minor*100 + patch. */
int wsim_version(void);

/* Message for the most recent failing call on this thread. */
const char* wsim_last_error(void);

/* ------------------------------------------------------------------ */
/* Runner: the CLI subcommands ("train", "eval", "replay", "envelope",
 * "reward-scale", "report", "serve") driven by a key-value config file
 * plus "key=value" overrides. Returns the process-style exit code. */
int wsim_run(const char* subcommand, const char* config_path_or_null,
             const char* const* overrides, size_t n_overrides);

/* ------------------------------------------------------------------ */
/* Simulated arm. */
typedef struct wsim_arm wsim_arm;

/* config_path NULL selects the built-in default model. */
wsim_arm* wsim_arm_create(const char* config_path_or_null);
void wsim_arm_destroy(wsim_arm* arm);
int wsim_arm_reset(wsim_arm* arm);
/* controls in [0,1], actuator order: (agonist, antagonist) per DOF for
 * shoulder elevation, shoulder azimuth, elbow flexion. */
int wsim_arm_step(wsim_arm* arm, const double controls[WSIM_ARM_ACTUATORS], double dt);
int wsim_arm_joint_state(const wsim_arm* arm, double q[WSIM_ARM_DOFS],
                         double qdot[WSIM_ARM_DOFS]);
int wsim_arm_activations(const wsim_arm* arm, double activations[WSIM_ARM_ACTUATORS]);
int wsim_arm_hammer_tip(const wsim_arm* arm, double position[3]);
/* Mean fatigued motor-unit fraction in [0,1]. */
int wsim_arm_fatigue(const wsim_arm* arm, double* mean_fatigued_fraction);

/* ------------------------------------------------------------------ */
/* Game instance (application side). */
typedef struct wsim_game wsim_game;

/* keys/values follow the game.* config schema (difficulty, placement,
 * constrained, seed, ...); n = 0 gives the defaults. */
wsim_game* wsim_game_create(const char* const* keys, const char* const* values, size_t n);
void wsim_game_destroy(wsim_game* game);
int wsim_game_reset(wsim_game* game, uint64_t seed);
/* Advances the game clock to t_next with the hammer tip at tip_pos;
 * effort is the fatigue level entering the reward. */
int wsim_game_step(wsim_game* game, double t_next, const double tip_pos[3], double effort,
                   double* reward, int* finished);
int wsim_game_counters(const wsim_game* game, int* score, int* hits, int* misses,
                       int* slow_contacts);
/* Active targets; index < wsim_game_target_count(). */
int wsim_game_target_count(const wsim_game* game);
int wsim_game_target(const wsim_game* game, int index, double position[3], double* age);

/* ------------------------------------------------------------------ */
/* Analysis primitives. */

/* alternative: 0 = less, 1 = greater, 2 = two-sided. */
int wsim_wilcoxon_signed_rank(const double* x, const double* y, size_t n, int alternative,
                              double* z, double* p);
int wsim_ks_normality(const double* sample, size_t n, double* statistic, double* p);
int wsim_gae(const double* rewards, const double* values, const uint8_t* dones, size_t n,
             double bootstrap_value, double gamma, double lambda, double* advantages,
             double* returns);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* WHACSIM_H */
