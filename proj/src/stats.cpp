#include "whacsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace whacsim {

Alternative parse_alternative(const std::string& s) {
  if (s == "less") return Alternative::kLess;
  if (s == "greater") return Alternative::kGreater;
  if (s == "two_sided" || s == "two-sided") return Alternative::kTwoSided;
  throw std::invalid_argument("unknown alternative: " + s);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_survival(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    Alternative alternative) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("wilcoxon requires equal-length samples");
  }
  // Zero differences are discarded (zero-discard convention).
  std::vector<double> diffs;
  diffs.reserve(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult res;
  res.n = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    res.degenerate = true;
    res.exact = true;
    res.p = 1.0;
    res.z = 0.0;
    return res;
  }

  // Mid-ranks over |d| with tie bookkeeping.
  size_t n = diffs.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });
  std::vector<double> ranks(n);
  double tie_correction = 0.0;  // sum of (t^3 - t) over tie groups
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    double t = static_cast<double>(j - i + 1);
    tie_correction += t * t * t - t;
    i = j + 1;
  }

  double w_plus = 0.0;
  for (size_t k = 0; k < n; ++k) {
    if (diffs[k] > 0.0) w_plus += ranks[k];
  }
  res.w_plus = w_plus;

  // Normal approximation with tie correction; z is reported in both
  // regimes without continuity correction.
  double dn = static_cast<double>(n);
  double mu = dn * (dn + 1.0) / 4.0;
  double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_correction / 48.0;
  double sigma = std::sqrt(std::max(var, 0.0));
  res.z = sigma > 0.0 ? (w_plus - mu) / sigma : 0.0;

  if (res.n <= kWilcoxonExactLimit) {
    // Exact null distribution of W+ by dynamic programming over doubled
    // ranks (mid-ranks are half-integers, so doubling keeps them integral).
    std::vector<long long> r2(n);
    long long total2 = 0;
    for (size_t k = 0; k < n; ++k) {
      r2[k] = std::llround(2.0 * ranks[k]);
      total2 += r2[k];
    }
    std::vector<double> counts(static_cast<size_t>(total2) + 1, 0.0);
    counts[0] = 1.0;
    long long upto = 0;
    for (size_t k = 0; k < n; ++k) {
      upto += r2[k];
      for (long long s = upto; s >= r2[k]; --s) {
        counts[static_cast<size_t>(s)] += counts[static_cast<size_t>(s - r2[k])];
      }
    }
    double denom = std::ldexp(1.0, static_cast<int>(n));  // 2^n assignments
    long long w2 = std::llround(2.0 * w_plus);
    double below_eq = 0.0;
    double above_eq = 0.0;
    for (long long s = 0; s <= total2; ++s) {
      if (s <= w2) below_eq += counts[static_cast<size_t>(s)];
      if (s >= w2) above_eq += counts[static_cast<size_t>(s)];
    }
    double p_less = below_eq / denom;
    double p_greater = above_eq / denom;
    res.exact = true;
    switch (alternative) {
      case Alternative::kLess: res.p = p_less; break;
      case Alternative::kGreater: res.p = p_greater; break;
      case Alternative::kTwoSided: res.p = std::min(1.0, 2.0 * std::min(p_less, p_greater)); break;
    }
  } else {
    switch (alternative) {
      case Alternative::kLess: res.p = normal_cdf(res.z); break;
      case Alternative::kGreater: res.p = 1.0 - normal_cdf(res.z); break;
      case Alternative::kTwoSided: res.p = 2.0 * (1.0 - normal_cdf(std::abs(res.z))); break;
    }
    res.p = std::clamp(res.p, 0.0, 1.0);
  }
  return res;
}

KsResult ks_normality_test(std::span<const double> sample) {
  if (sample.size() < 3) {
    throw std::invalid_argument("ks_normality_test requires at least 3 samples");
  }
  size_t n = sample.size();
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : sample) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);

  auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  KsResult res;
  if (var <= 0.0 || *mn == *mx) {
    res.degenerate = true;
    res.statistic = 1.0;
    res.p = 0.0;
    return res;
  }
  double std = std::sqrt(var);

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double f = normal_cdf((sorted[i] - mean) / std);
    double hi = static_cast<double>(i + 1) / n - f;
    double lo = f - static_cast<double>(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  res.statistic = d;
  res.p = ks_survival(std::sqrt(static_cast<double>(n)) * d);
  return res;
}

}  // namespace whacsim
