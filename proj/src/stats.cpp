#include "cmiknn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace cmiknn {
namespace {

// P(U <= u_obs) by exact enumeration: ways(i, j, u) = number of interleavings
// of i first-sample and j second-sample values with statistic u, via the
// classic recurrence ways(i, j, u) = ways(i-1, j, u-j) + ways(i, j-1, u).
// Counts stay below 2^53 for samples of size <= 20, so doubles are exact.
double exact_cdf(std::size_t n1, std::size_t n2, double u_obs) {
  const std::size_t umax = n1 * n2;
  std::vector<std::vector<double>> ways(n1 + 1,
                                        std::vector<double>(umax + 1, 0.0));
  for (std::size_t i = 0; i <= n1; ++i) ways[i][0] = 1.0;
  for (std::size_t j = 1; j <= n2; ++j) {
    for (std::size_t i = 1; i <= n1; ++i) {
      for (std::size_t u = umax; u > 0; --u) {
        double w = ways[i][u];        // ways(i, j-1, u) from previous j pass
        if (u >= j) w += ways[i - 1][u - j];
        ways[i][u] = w;
      }
      ways[i][0] = 1.0;
    }
  }
  double total = 0.0, below = 0.0;
  for (std::size_t u = 0; u <= umax; ++u) {
    total += ways[n1][u];
    if (static_cast<double>(u) <= u_obs + 1e-9) below += ways[n1][u];
  }
  return below / total;
}

double normal_sf(double z) {  // P(Z >= z)
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b) {
  const std::size_t n1 = a.size(), n2 = b.size();
  if (n1 == 0 || n2 == 0)
    throw std::invalid_argument("mann_whitney_u: empty sample");

  struct Entry {
    double value;
    int group;
  };
  std::vector<Entry> pooled;
  pooled.reserve(n1 + n2);
  for (double v : a) pooled.push_back({v, 0});
  for (double v : b) pooled.push_back({v, 1});
  std::sort(pooled.begin(), pooled.end(),
            [](const Entry& x, const Entry& y) { return x.value < y.value; });

  const std::size_t total = n1 + n2;
  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  bool any_tie = false;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && pooled[j].value == pooled[i].value) ++j;
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) {
      any_tie = true;
      tie_term += t * t * t - t;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t s = i; s < j; ++s)
      if (pooled[s].group == 0) rank_sum_a += midrank;
    i = j;
  }

  MannWhitneyResult res;
  const double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
  res.u1 = rank_sum_a - fn1 * (fn1 + 1.0) / 2.0;
  res.u2 = fn1 * fn2 - res.u1;

  if (n1 <= 20 && n2 <= 20 && !any_tie) {
    res.exact = true;
    const double u_min = std::min(res.u1, res.u2);
    res.p_value = std::min(1.0, 2.0 * exact_cdf(n1, n2, u_min));
    return res;
  }

  const double fn = static_cast<double>(total);
  const double mean = fn1 * fn2 / 2.0;
  const double var =
      fn1 * fn2 / 12.0 * ((fn + 1.0) - tie_term / (fn * (fn - 1.0)));
  if (var <= 0.0) {
    res.p_value = 1.0;
    return res;
  }
  double z = 0.0;
  if (res.u1 > mean)
    z = (res.u1 - mean - 0.5) / std::sqrt(var);
  else if (res.u1 < mean)
    z = (res.u1 - mean + 0.5) / std::sqrt(var);
  res.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return res;
}

}  // namespace cmiknn
