#pragma once

// Counter-based deterministic RNG (splitmix64). Every randomized component
// owns its own stream derived from the master seed and a stream id, so runs
// replay bit-identically regardless of scheduling.

#include <cmath>
#include <cstdint>

namespace whacsim {

inline uint64_t splitmix64_mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream derivation: master seed combined with the stream id through one
// scrambler round. Documented so external tooling can reproduce streams.
inline uint64_t derive_seed(uint64_t master, uint64_t stream_id) {
  return splitmix64_mix(master + 0x9E3779B97F4A7C15ULL * (stream_id + 1));
}

class Rng {
 public:
  struct State {
    uint64_t counter = 0;
    double cached_normal = 0.0;
    bool has_cached_normal = false;
  };

  explicit Rng(uint64_t seed = 0) { state_.counter = seed; }

  static Rng from_stream(uint64_t master, uint64_t stream_id) {
    return Rng(derive_seed(master, stream_id));
  }

  uint64_t next_u64() {
    state_.counter += 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(state_.counter);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire reduction, bias below 2^-64.
  uint64_t uniform_int(uint64_t n) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller; the second sample of each pair is cached.
  double normal() {
    if (state_.has_cached_normal) {
      state_.has_cached_normal = false;
      return state_.cached_normal;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    state_.cached_normal = r * std::sin(a);
    state_.has_cached_normal = true;
    return r * std::cos(a);
  }

  State save() const { return state_; }
  void restore(const State& s) { state_ = s; }

 private:
  State state_{};
};

}  // namespace whacsim
