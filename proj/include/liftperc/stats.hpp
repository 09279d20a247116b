#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace liftperc {

struct Interval {
  double low = 0;
  double high = 0;
};

// Wilson score interval for k successes out of n at normal quantile z.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.96);
double binomial_stderr(double p_hat, std::uint64_t n);

// Pearson chi-square of observed counts against expected probabilities.
// Cells with zero expected mass must have zero counts (else +infinity).
struct ChiSquare {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};
ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected_prob);
// Homogeneity of two count vectors over the same cells (any totals).
ChiSquare chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);
double chi_square_quantile(int dof, double upper_tail);

// Standard normal upper quantile, e.g. 1.959964 for 0.025.
double normal_quantile_upper(double upper_tail);

}  // namespace liftperc
