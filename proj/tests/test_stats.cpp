#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "whacsim/rng.hpp"
#include "whacsim/stats.hpp"

using namespace whacsim;

namespace {

// Exhaustive-enumeration oracle: mid-ranks from the definition, then all
// 2^n sign assignments.
double exact_p_enumeration(const std::vector<double>& x, const std::vector<double>& y,
                           Alternative alt) {
  std::vector<double> d;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  size_t n = d.size();
  if (n == 0) return 1.0;
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    double mid = (i + 1 + j + 1) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  double w_obs = 0;
  for (size_t k = 0; k < n; ++k) {
    if (d[k] > 0) w_obs += ranks[k];
  }
  size_t below_eq = 0, above_eq = 0, total = size_t{1} << n;
  for (size_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (size_t k = 0; k < n; ++k) {
      if (mask & (size_t{1} << k)) w += ranks[k];
    }
    if (w <= w_obs + 1e-12) ++below_eq;
    if (w >= w_obs - 1e-12) ++above_eq;
  }
  double p_less = static_cast<double>(below_eq) / total;
  double p_greater = static_cast<double>(above_eq) / total;
  switch (alt) {
    case Alternative::kLess: return p_less;
    case Alternative::kGreater: return p_greater;
    case Alternative::kTwoSided: return std::min(1.0, 2.0 * std::min(p_less, p_greater));
  }
  return 1.0;
}

}  // namespace

TEST_CASE("identical samples are degenerate with p = 1") {
  std::vector<double> x{1, 2, 3, 4};
  auto res = wilcoxon_signed_rank(x, x, Alternative::kLess);
  CHECK(res.degenerate);
  CHECK(res.p == 1.0);
  CHECK(res.n == 0);
}

TEST_CASE("strictly ordered n=10 one-sided gives exactly 1/1024") {
  std::vector<double> x(10), y(10);
  for (int i = 0; i < 10; ++i) {
    x[i] = i;
    y[i] = i + 1.0 + 0.1 * i;  // x strictly less than y
  }
  auto res = wilcoxon_signed_rank(x, y, Alternative::kLess);
  CHECK(res.exact);
  CHECK(res.p == doctest::Approx(1.0 / 1024.0).epsilon(1e-12));
  // The opposite one-sided test is certain.
  auto res_g = wilcoxon_signed_rank(x, y, Alternative::kGreater);
  CHECK(res_g.p == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("z-score uses the tie-corrected normal approximation") {
  // All 12 differences positive: W+ = 78, mu = 39, sigma = sqrt(162.5),
  // z = 3.059 without continuity correction.
  std::vector<double> x(12), y(12);
  for (int i = 0; i < 12; ++i) {
    x[i] = 10 + 2.0 * i + 0.5;  // distinct positive differences, no ties
    y[i] = i;
  }
  auto res = wilcoxon_signed_rank(x, y, Alternative::kLess);
  CHECK(res.w_plus == doctest::Approx(78.0));
  CHECK(res.z == doctest::Approx(3.059).epsilon(1e-3));
  CHECK(res.p == doctest::Approx(1.0).epsilon(1e-12));  // exact branch, n=12
  auto res_less_reversed = wilcoxon_signed_rank(y, x, Alternative::kLess);
  CHECK(res_less_reversed.z == doctest::Approx(-3.059).epsilon(1e-3));
  CHECK(res_less_reversed.p == doctest::Approx(1.0 / 4096.0).epsilon(1e-9));
}

TEST_CASE("exact p matches full enumeration for random n <= 12 fixtures") {
  Rng rng(12345);
  for (int trial = 0; trial < 60; ++trial) {
    size_t n = 3 + rng.uniform_int(10);  // 3..12
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = std::round(rng.uniform(-5, 5));
      y[i] = std::round(rng.uniform(-5, 5));  // integer values force ties and zeros
    }
    for (Alternative alt : {Alternative::kLess, Alternative::kGreater, Alternative::kTwoSided}) {
      auto res = wilcoxon_signed_rank(x, y, alt);
      double oracle = exact_p_enumeration(x, y, alt);
      CHECK(std::abs(res.p - oracle) < 1e-12);
    }
  }
}

TEST_CASE("large samples switch to the normal approximation") {
  Rng rng(77);
  std::vector<double> x(40), y(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal() + 0.8;
  }
  auto res = wilcoxon_signed_rank(x, y, Alternative::kLess);
  CHECK_FALSE(res.exact);
  CHECK(res.p == doctest::Approx(normal_cdf(res.z)).epsilon(1e-12));
  CHECK(res.p < 0.01);  // a 0.8 shift over 40 pairs is decisive
}

TEST_CASE("ks statistic is tiny on ideal normal quantiles") {
  // Equally spaced quantiles of the fitted normal are as normal as it gets.
  const int n = 200;
  std::vector<double> sample(n);
  for (int i = 0; i < n; ++i) {
    double u = (i + 0.5) / n;
    // Inverse normal CDF via bisection on our own normal_cdf.
    double lo = -8, hi = 8;
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      (normal_cdf(mid) < u ? lo : hi) = mid;
    }
    sample[i] = 0.5 * (lo + hi);
  }
  auto res = ks_normality_test(sample);
  CHECK(res.statistic < 0.02);
  CHECK(res.lilliefors);
  CHECK(res.p > 0.5);
}

TEST_CASE("uniform data is rejected decisively at n=1000") {
  Rng rng(31337);
  std::vector<double> sample(1000);
  for (auto& v : sample) v = rng.uniform();
  auto res = ks_normality_test(sample);
  CHECK(res.p < 0.001);
}

TEST_CASE("ks statistic is invariant under affine transforms") {
  Rng rng(8);
  std::vector<double> sample(300);
  for (auto& v : sample) v = rng.normal() * 2.0 + rng.uniform();
  auto base = ks_normality_test(sample);
  std::vector<double> scaled(sample);
  for (auto& v : scaled) v = 3.5 * v - 11.0;
  auto transformed = ks_normality_test(scaled);
  CHECK(base.statistic == doctest::Approx(transformed.statistic).epsilon(1e-12));
}

TEST_CASE("zero variance is degenerate") {
  std::vector<double> sample(10, 4.2);
  auto res = ks_normality_test(sample);
  CHECK(res.degenerate);
}

TEST_CASE("input validation") {
  std::vector<double> x{1, 2};
  std::vector<double> y{1, 2, 3};
  CHECK_THROWS(wilcoxon_signed_rank(x, y, Alternative::kLess));
  std::vector<double> tiny{1, 2};
  CHECK_THROWS(ks_normality_test(tiny));
}
