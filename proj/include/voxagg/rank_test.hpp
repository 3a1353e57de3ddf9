#pragma once

#include <span>
#include <vector>

#include "voxagg/volume.hpp"

namespace voxagg {

struct RankTestResult {
  double rho = 0.0;
  double p_value = 1.0;
  Index n = 0;
  /// Set when either series is constant; rho and p_value are then NaN.
  bool undefined = false;
};

/// 1-based ranks, ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rho with a two-sided p-value from the Student-t approximation,
/// t = rho sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
RankTestResult spearman_test(std::span<const double> a, std::span<const double> b);

/// 2 |A n B| / (|A| + |B|); two empty masks score 1.
double dice(const ClassMask& pred, const ClassMask& truth);

}  // namespace voxagg
