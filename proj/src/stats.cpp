#include "liftperc/stats.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "liftperc/errors.hpp"

namespace liftperc {

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  require(n > 0 && k <= n, "wilson interval needs 0 <= k <= n, n > 0");
  const double nn = static_cast<double>(n);
  const double p = k / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double binomial_stderr(double p_hat, std::uint64_t n) {
  return n == 0 ? 0.0 : std::sqrt(p_hat * (1 - p_hat) / static_cast<double>(n));
}

ChiSquare chi_square(std::span<const std::uint64_t> observed, std::span<const double> expected_prob) {
  require(observed.size() == expected_prob.size(), "chi-square size mismatch");
  double total = 0;
  for (auto o : observed) total += static_cast<double>(o);
  ChiSquare out;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * total;
    if (e <= 0) {
      if (observed[i] > 0) out.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = static_cast<double>(observed[i]) - e;
    out.statistic += d * d / e;
    ++cells;
  }
  out.dof = std::max(cells - 1, 1);
  if (std::isinf(out.statistic)) {
    out.p_value = 0;
  } else {
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

ChiSquare chi_square_two_sample(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  require(a.size() == b.size(), "chi-square size mismatch");
  double na = 0, nb = 0;
  for (auto x : a) na += static_cast<double>(x);
  for (auto x : b) nb += static_cast<double>(x);
  require(na > 0 && nb > 0, "chi-square needs two non-empty samples");
  // 2 x k contingency table
  ChiSquare out;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i]) + static_cast<double>(b[i]);
    if (col == 0) continue;
    const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
    out.statistic += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
    ++cells;
  }
  out.dof = std::max(cells - 1, 1);
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double chi_square_quantile(int dof, double upper_tail) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, upper_tail));
}

double normal_quantile_upper(double upper_tail) {
  boost::math::normal dist;
  return boost::math::quantile(boost::math::complement(dist, upper_tail));
}

}  // namespace liftperc
