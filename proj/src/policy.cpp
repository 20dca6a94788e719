#include "whacsim/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace whacsim {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Orthogonal rows (or columns when rows > cols) from Gaussian samples via
// modified Gram-Schmidt, scaled by gain.
void orthogonal_init(std::span<double> w, int rows, int cols, double gain, Rng& rng) {
  bool by_rows = rows <= cols;
  int vecs = by_rows ? rows : cols;
  int dim = by_rows ? cols : rows;
  std::vector<std::vector<double>> basis(vecs, std::vector<double>(dim));
  for (auto& v : basis) {
    for (double& x : v) x = rng.normal();
  }
  for (int i = 0; i < vecs; ++i) {
    for (int j = 0; j < i; ++j) {
      double dot = 0.0;
      for (int k = 0; k < dim; ++k) dot += basis[i][k] * basis[j][k];
      for (int k = 0; k < dim; ++k) basis[i][k] -= dot * basis[j][k];
    }
    double norm = 0.0;
    for (double x : basis[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // Degenerate draw; fall back to a unit vector.
      basis[i].assign(dim, 0.0);
      basis[i][i % dim] = 1.0;
      norm = 1.0;
    }
    for (double& x : basis[i]) x /= norm;
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double v = by_rows ? basis[r][c] : basis[c][r];
      w[static_cast<size_t>(r) * cols + c] = gain * v;
    }
  }
}

}  // namespace

size_t PolicyParams::param_count(const PolicyConfig& c) {
  return static_cast<size_t>(c.hidden1) * c.obs_dim + c.hidden1 +
         static_cast<size_t>(c.hidden2) * c.hidden1 + c.hidden2 +
         static_cast<size_t>(c.act_dim) * c.hidden2 + c.act_dim +
         static_cast<size_t>(c.hidden2) + 1 + c.act_dim;
}

size_t PolicyParams::b1() const { return static_cast<size_t>(config.hidden1) * config.obs_dim; }
size_t PolicyParams::w2() const { return b1() + config.hidden1; }
size_t PolicyParams::b2() const { return w2() + static_cast<size_t>(config.hidden2) * config.hidden1; }
size_t PolicyParams::wmu() const { return b2() + config.hidden2; }
size_t PolicyParams::bmu() const { return wmu() + static_cast<size_t>(config.act_dim) * config.hidden2; }
size_t PolicyParams::wv() const { return bmu() + config.act_dim; }
size_t PolicyParams::bv() const { return wv() + config.hidden2; }
size_t PolicyParams::log_std() const { return bv() + 1; }

PolicyParams PolicyParams::init(const PolicyConfig& cfg, Rng& rng) {
  if (cfg.obs_dim <= 0 || cfg.act_dim <= 0 || cfg.hidden1 <= 0 || cfg.hidden2 <= 0) {
    throw std::invalid_argument("policy dimensions must be positive");
  }
  PolicyParams p;
  p.config = cfg;
  p.data.assign(param_count(cfg), 0.0);
  std::span<double> d(p.data);
  double root2 = std::sqrt(2.0);
  orthogonal_init(d.subspan(p.w1(), static_cast<size_t>(cfg.hidden1) * cfg.obs_dim), cfg.hidden1,
                  cfg.obs_dim, root2, rng);
  orthogonal_init(d.subspan(p.w2(), static_cast<size_t>(cfg.hidden2) * cfg.hidden1), cfg.hidden2,
                  cfg.hidden1, root2, rng);
  orthogonal_init(d.subspan(p.wmu(), static_cast<size_t>(cfg.act_dim) * cfg.hidden2), cfg.act_dim,
                  cfg.hidden2, 0.01, rng);
  orthogonal_init(d.subspan(p.wv(), static_cast<size_t>(cfg.hidden2)), 1, cfg.hidden2, 1.0, rng);
  for (int a = 0; a < cfg.act_dim; ++a) p.data[p.log_std() + a] = cfg.init_log_std;
  return p;
}

void policy_forward(const PolicyParams& p, std::span<const double> obs, PolicyForward& out) {
  const PolicyConfig& c = p.config;
  if (obs.size() != static_cast<size_t>(c.obs_dim)) {
    throw std::invalid_argument("observation size mismatch");
  }
  out.h1.assign(c.hidden1, 0.0);
  out.h2.assign(c.hidden2, 0.0);
  out.mean_raw.assign(c.act_dim, 0.0);
  out.mean.assign(c.act_dim, 0.0);

  const double* w1 = p.data.data() + p.w1();
  const double* b1 = p.data.data() + p.b1();
  for (int i = 0; i < c.hidden1; ++i) {
    double acc = b1[i];
    const double* row = w1 + static_cast<size_t>(i) * c.obs_dim;
    for (int j = 0; j < c.obs_dim; ++j) acc += row[j] * obs[j];
    out.h1[i] = std::tanh(acc);
  }
  const double* w2 = p.data.data() + p.w2();
  const double* b2 = p.data.data() + p.b2();
  for (int i = 0; i < c.hidden2; ++i) {
    double acc = b2[i];
    const double* row = w2 + static_cast<size_t>(i) * c.hidden1;
    for (int j = 0; j < c.hidden1; ++j) acc += row[j] * out.h1[j];
    out.h2[i] = std::tanh(acc);
  }
  const double* wmu = p.data.data() + p.wmu();
  const double* bmu = p.data.data() + p.bmu();
  for (int a = 0; a < c.act_dim; ++a) {
    double acc = bmu[a];
    const double* row = wmu + static_cast<size_t>(a) * c.hidden2;
    for (int j = 0; j < c.hidden2; ++j) acc += row[j] * out.h2[j];
    out.mean_raw[a] = acc;
    out.mean[a] = sigmoid(acc);
  }
  const double* wv = p.data.data() + p.wv();
  double acc = p.data[p.bv()];
  for (int j = 0; j < c.hidden2; ++j) acc += wv[j] * out.h2[j];
  out.value = acc;
}

double policy_log_prob(const PolicyParams& p, const PolicyForward& fwd,
                       std::span<const double> action) {
  const PolicyConfig& c = p.config;
  double logp = 0.0;
  for (int a = 0; a < c.act_dim; ++a) {
    double log_std = p.data[p.log_std() + a];
    double inv_std = std::exp(-log_std);
    double z = (action[a] - fwd.mean[a]) * inv_std;
    logp += -0.5 * z * z - log_std - 0.5 * kLogTwoPi;
  }
  return logp;
}

double policy_entropy(const PolicyParams& p) {
  double ent = 0.0;
  for (int a = 0; a < p.config.act_dim; ++a) {
    ent += p.data[p.log_std() + a] + 0.5 * (kLogTwoPi + 1.0);
  }
  return ent;
}

void policy_sample(const PolicyParams& p, const PolicyForward& fwd, Rng& rng,
                   std::span<double> action_out) {
  for (int a = 0; a < p.config.act_dim; ++a) {
    double std = std::exp(p.data[p.log_std() + a]);
    action_out[a] = fwd.mean[a] + std * rng.normal();
  }
}

void policy_backward(const PolicyParams& p, std::span<const double> obs, const PolicyForward& fwd,
                     std::span<const double> action, double dl_dlogp, double dl_dvalue,
                     double dl_dlogstd_each, std::span<double> grad) {
  const PolicyConfig& c = p.config;
  // Heads.
  std::vector<double> d_mean_raw(c.act_dim);
  for (int a = 0; a < c.act_dim; ++a) {
    double log_std = p.data[p.log_std() + a];
    double inv_var = std::exp(-2.0 * log_std);
    double diff = action[a] - fwd.mean[a];
    double dlogp_dmean = diff * inv_var;
    double dmean_draw = fwd.mean[a] * (1.0 - fwd.mean[a]);
    d_mean_raw[a] = dl_dlogp * dlogp_dmean * dmean_draw;
    double dlogp_dlogstd = diff * diff * inv_var - 1.0;
    grad[p.log_std() + a] += dl_dlogp * dlogp_dlogstd + dl_dlogstd_each;
  }

  std::vector<double> dh2(c.hidden2, 0.0);
  const double* wmu = p.data.data() + p.wmu();
  for (int a = 0; a < c.act_dim; ++a) {
    const double* row = wmu + static_cast<size_t>(a) * c.hidden2;
    double g = d_mean_raw[a];
    grad[p.bmu() + a] += g;
    double* gw = grad.data() + p.wmu() + static_cast<size_t>(a) * c.hidden2;
    for (int j = 0; j < c.hidden2; ++j) {
      gw[j] += g * fwd.h2[j];
      dh2[j] += g * row[j];
    }
  }
  const double* wv = p.data.data() + p.wv();
  grad[p.bv()] += dl_dvalue;
  for (int j = 0; j < c.hidden2; ++j) {
    grad[p.wv() + j] += dl_dvalue * fwd.h2[j];
    dh2[j] += dl_dvalue * wv[j];
  }

  // Hidden layers.
  std::vector<double> dz2(c.hidden2);
  for (int i = 0; i < c.hidden2; ++i) dz2[i] = dh2[i] * (1.0 - fwd.h2[i] * fwd.h2[i]);
  std::vector<double> dh1(c.hidden1, 0.0);
  const double* w2 = p.data.data() + p.w2();
  for (int i = 0; i < c.hidden2; ++i) {
    const double* row = w2 + static_cast<size_t>(i) * c.hidden1;
    double g = dz2[i];
    grad[p.b2() + i] += g;
    double* gw = grad.data() + p.w2() + static_cast<size_t>(i) * c.hidden1;
    for (int j = 0; j < c.hidden1; ++j) {
      gw[j] += g * fwd.h1[j];
      dh1[j] += g * row[j];
    }
  }
  for (int i = 0; i < c.hidden1; ++i) {
    double g = dh1[i] * (1.0 - fwd.h1[i] * fwd.h1[i]);
    grad[p.b1() + i] += g;
    double* gw = grad.data() + p.w1() + static_cast<size_t>(i) * c.obs_dim;
    for (int j = 0; j < c.obs_dim; ++j) gw[j] += g * obs[j];
  }
}

void adam_step(PolicyParams& params, AdamState& s, std::span<const double> grad, double lr) {
  if (grad.size() != params.size() || s.m.size() != params.size()) {
    throw std::invalid_argument("adam buffers do not match parameter count");
  }
  s.t += 1;
  double b1t = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  double b2t = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    double mhat = s.m[i] / b1t;
    double vhat = s.v[i] / b2t;
    params.data[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

}  // namespace whacsim
