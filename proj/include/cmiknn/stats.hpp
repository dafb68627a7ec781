#pragma once

#include <span>

namespace cmiknn {

struct MannWhitneyResult {
  double u1 = 0.0;      // rank-sum statistic of the first sample
  double u2 = 0.0;      // n1*n2 - u1
  double p_value = 1.0; // two-sided
  bool exact = false;   // exact enumeration vs. normal approximation
};

/// Two-sided Mann-Whitney U test. Uses exact enumeration of the U
/// distribution when both samples have at most 20 values and there are no
/// ties; otherwise the normal approximation with tie correction and
/// continuity correction.
MannWhitneyResult mann_whitney_u(std::span<const double> a,
                                 std::span<const double> b);

}  // namespace cmiknn
