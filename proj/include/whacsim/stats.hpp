#pragma once

// Statistical tests used by the analysis pipeline: one-sided/two-sided
// Wilcoxon signed-rank (exact distribution for small n, normal
// approximation with tie correction otherwise) and a Kolmogorov-Smirnov
// normality test with sample-estimated parameters (Lilliefors variant,
// flagged as such).

#include <span>
#include <string>

namespace whacsim {

enum class Alternative { kLess, kGreater, kTwoSided };

Alternative parse_alternative(const std::string& s);

struct WilcoxonResult {
  double w_plus = 0.0;  // sum of ranks of positive differences (x - y)
  double z = 0.0;       // normal approximation, tie-corrected, no continuity correction
  double p = 1.0;       // exact for n <= kWilcoxonExactLimit, else from z
  int n = 0;            // pairs remaining after zero-difference discard
  bool exact = false;
  bool degenerate = false;  // all differences zero
};

inline constexpr int kWilcoxonExactLimit = 25;

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    Alternative alternative);

struct KsResult {
  double statistic = 0.0;
  double p = 1.0;  // asymptotic KS distribution
  bool lilliefors = true;  // parameters estimated from the sample
  bool degenerate = false;  // zero variance
};

KsResult ks_normality_test(std::span<const double> sample);

// Standard normal CDF.
double normal_cdf(double z);

// Survival function of the asymptotic KS distribution, Q(lambda).
double ks_survival(double lambda);

}  // namespace whacsim
