#pragma once

// Gaussian MLP policy with a value head. Two shared tanh hidden layers feed
// an action-mean head (squashed to [0,1] with a sigmoid), a scalar value
// head, and a state-independent log-std vector. Forward, log-prob, entropy
// and the analytic backward pass are hand-rolled; gradients are verified
// against finite differences in the tests.

#include <cstdint>
#include <span>
#include <vector>

#include "whacsim/rng.hpp"

namespace whacsim {

struct PolicyConfig {
  int obs_dim = 0;
  int act_dim = 0;
  int hidden1 = 64;
  int hidden2 = 64;
  double init_log_std = -0.7;  // initial exploration std ~ 0.5

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

// Flat parameter storage. Layout (row-major matrices):
//   W1[h1 x obs] b1[h1] W2[h2 x h1] b2[h2]
//   Wmu[act x h2] bmu[act] Wv[1 x h2] bv[1] log_std[act]
struct PolicyParams {
  PolicyConfig config;
  std::vector<double> data;

  static PolicyParams init(const PolicyConfig& cfg, Rng& rng);
  static size_t param_count(const PolicyConfig& cfg);

  size_t size() const { return data.size(); }

  // Offsets into data.
  size_t w1() const { return 0; }
  size_t b1() const;
  size_t w2() const;
  size_t b2() const;
  size_t wmu() const;
  size_t bmu() const;
  size_t wv() const;
  size_t bv() const;
  size_t log_std() const;
};

struct PolicyForward {
  std::vector<double> h1;
  std::vector<double> h2;
  std::vector<double> mean_raw;
  std::vector<double> mean;  // sigmoid(mean_raw)
  double value = 0.0;
};

void policy_forward(const PolicyParams& params, std::span<const double> obs, PolicyForward& out);

double policy_log_prob(const PolicyParams& params, const PolicyForward& fwd,
                       std::span<const double> action);

// Sum over action dims of log_std + 0.5*log(2*pi*e).
double policy_entropy(const PolicyParams& params);

// Samples an unclipped Gaussian action; callers clip to [0,1] when applying
// it as controls.
void policy_sample(const PolicyParams& params, const PolicyForward& fwd, Rng& rng,
                   std::span<double> action_out);

// Accumulates d(loss)/d(params) into grad for one sample, where the loss
// touches this sample as dl_dlogp * logp + dl_dvalue * value, plus
// dl_dlogstd_each added to every log_std gradient entry (entropy bonus).
void policy_backward(const PolicyParams& params, std::span<const double> obs,
                     const PolicyForward& fwd, std::span<const double> action,
                     double dl_dlogp, double dl_dvalue, double dl_dlogstd_each,
                     std::span<double> grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState make(size_t n) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
  }
};

void adam_step(PolicyParams& params, AdamState& state, std::span<const double> grad, double lr);

}  // namespace whacsim
