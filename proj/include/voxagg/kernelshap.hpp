#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "voxagg/attribution.hpp"

namespace voxagg {

enum class PartitionScheme { semantic, cubes };

/// Interpretable features for KernelSHAP: every voxel belongs to one of
/// num_regions regions.
struct SupervoxelPartition {
  Dims dims;
  std::vector<Index> labels;
  Index num_regions = 0;
  PartitionScheme scheme = PartitionScheme::cubes;
  /// Semantic scheme only: the class id behind each compacted region.
  std::vector<Index> region_class;

  /// Region sizes in voxels.
  std::vector<Index> region_sizes() const;
};

/// Axis-aligned cubes of edge `cube_edge`, numbered x-fastest. Boundary
/// cubes of non-divisible dims are kept as smaller regions.
SupervoxelPartition partition_cubes(Dims dims, Index cube_edge);

/// Edge giving ceil(extent / edge) == cubes_per_axis along the longest axis.
Index cube_edge_for(Dims dims, Index cubes_per_axis);

/// Argmax-class regions with absent classes compacted away.
SupervoxelPartition partition_semantic(const LogitFieldD& logits);

/// Membership vector z in {0,1}^r.
using Coalition = std::vector<std::uint8_t>;
using CoalitionGame = std::function<double(const Coalition&)>;

struct ShapleyEstimate {
  Eigen::VectorXd values;
  /// Distinct coalitions evaluated, anchors included.
  Index num_samples = 0;
  double base_value = 0.0;
  double full_value = 0.0;
  /// Reciprocal condition estimate of the constrained normal equations.
  double rcond = 1.0;
  bool enumerated = false;
};

/// Shapley kernel weight pi(s) = (r - 1) / (C(r, s) * s * (r - s)), 0 < s < r.
double shapley_kernel_weight(Index r, Index coalition_size);

/// Weighted least squares over coalitions with the Shapley kernel plus a
/// ridge penalty. The empty and full coalitions are imposed exactly:
/// phi_0 = v(0) and sum(phi) = v(1) - v(0). With n_samples >= 2^r every
/// coalition is enumerated; otherwise small coalition sizes are enumerated
/// while the budget allows and the rest are sampled by kernel mass.
ShapleyEstimate kernelshap_game(Index num_players, const CoalitionGame& game, Index n_samples,
                                double ridge_lambda, const RngSpec& rng);

/// KernelSHAP on the masked proxy: regions outside the coalition are set to
/// zero. Region values are broadcast to every voxel of the region.
std::pair<AttributionField, ShapleyEstimate> kernelshap(SegmentationModel& model, const VolumeD& x,
                                                        Index class_id, const ClassMask& mask,
                                                        const SupervoxelPartition& partition,
                                                        Index n_samples, double ridge_lambda,
                                                        const RngSpec& rng);

}  // namespace voxagg
