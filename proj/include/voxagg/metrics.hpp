#pragma once

#include <Eigen/Core>

#include <span>

#include "voxagg/attribution.hpp"

namespace voxagg {

/// Attributions affinely mapped onto [0, 1]. A constant field maps to zeros
/// and sets `constant`.
struct NormalizedAttribution {
  VolumeD values;
  bool constant = false;
};

NormalizedAttribution normalize(const VolumeD& e);
inline NormalizedAttribution normalize(const AttributionField& e) { return normalize(e.values); }

/// Value plus a flag for degenerate inputs (zero-variance series).
struct MetricValue {
  double value = 0.0;
  bool degenerate = false;
};

/// Pearson correlation; zero variance in either series gives 0, flagged.
MetricValue pearson(std::span<const double> a, std::span<const double> b);

/// min(224^2, p / 2), kept >= 1.
Index default_subset_size(Index num_voxels);

/// Correlation over n random voxel subsets S_i of size m between the
/// attribution mass sum_{j in S_i} g_j and the proxy drop f(x) - f(x_{S_i}),
/// where x_{S_i} zeroes the subset.
MetricValue faithfulness(const NormalizedAttribution& g, SegmentationModel& model, const VolumeD& x,
                         Index class_id, const ClassMask& mask, int n, Index m, const RngSpec& rng);

/// Mean relative Euclidean distance between the normalized attribution at x
/// and at n Gaussian perturbations x + N(0, radius^2). The attribution method
/// is re-run with its own RngSpec at every point. Falls back to the absolute
/// distance when the reference attribution has zero norm.
double sensitivity(const AttributionParams& method, SegmentationModel& model, const VolumeD& x,
                   Index class_id, const ClassMask& mask, int n, double radius, const RngSpec& rng);

/// Fraction of entries strictly above theta.
template <typename Derived>
double complexity(const Eigen::MatrixBase<Derived>& g, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw Error(ErrorKind::invalid_argument, "complexity theta must lie in [0, 1)");
  if (g.size() == 0) return 0.0;
  return static_cast<double>((g.array() > theta).count()) / static_cast<double>(g.size());
}

inline double complexity(const NormalizedAttribution& g, double theta) {
  return complexity(g.values.data(), theta);
}

/// Wall-clock seconds for one attribution call (monotonic clock).
double efficiency(const AttributionParams& method, SegmentationModel& model, const VolumeD& x,
                  Index class_id, const ClassMask& mask);

}  // namespace voxagg
