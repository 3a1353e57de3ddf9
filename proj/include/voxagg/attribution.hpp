#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxagg/model.hpp"
#include "voxagg/rng.hpp"

namespace voxagg {

enum class Method { vg, sg, ig, kshap_cubes, kshap_semantic };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

/// Hyperparameters for every attribution method. Defaults follow the
/// reference benchmark setup (n = 20 for SG and IG, IG baseline 0, SG noise
/// sigma = 0.1 * (max(x) - min(x)), 1000 KernelSHAP samples for cubes and
/// 200 for semantic supervoxels).
struct AttributionParams {
  Method method = Method::vg;

  int sg_samples = 20;
  /// Absolute SG noise level; when unset, sg_sigma_fraction * (max - min).
  std::optional<double> sg_sigma;
  double sg_sigma_fraction = 0.1;

  int ig_steps = 20;
  /// IG baseline; zeros when unset.
  std::optional<VolumeD> ig_baseline;

  /// KernelSHAP coalition budget; 1000 (cubes) or 200 (semantic) when unset.
  std::optional<Index> kshap_samples;
  /// Cube edge in voxels; when 0, derived from cubes_per_axis.
  Index cube_edge = 0;
  /// 4 gives the coarse 64-region preset, 8 the fine 512-region one.
  Index cubes_per_axis = 4;
  double ridge_lambda = 1e-6;

  RngSpec rng;

  Index resolved_kshap_samples() const;
  nlohmann::json to_json() const;
  static AttributionParams from_json(const nlohmann::json& j);
};

/// Per-voxel attributions e_c for one explained class.
struct AttributionField {
  VolumeD values;
  Index class_id = 0;
  Method method = Method::vg;
  nlohmann::json params;
};

AttributionField vanilla_gradient(SegmentationModel& model, const VolumeD& x, Index class_id,
                                  const ClassMask& mask);

/// Mean of n gradients at x + N(0, sigma^2) i.i.d. per voxel. The noise is
/// not clamped to the input range.
AttributionField smoothgrad(SegmentationModel& model, const VolumeD& x, Index class_id,
                            const ClassMask& mask, int n, double sigma, const RngSpec& rng);

/// Right Riemann sum: (x - x') / n * sum_{i=1..n} grad(x' + i/n (x - x')).
AttributionField integrated_gradients(SegmentationModel& model, const VolumeD& x, Index class_id,
                                      const ClassMask& mask, int n, const VolumeD& baseline);

/// Runs the configured method. `logits` is only consulted by the semantic
/// KernelSHAP variant and is computed when not supplied.
AttributionField attribute(SegmentationModel& model, const VolumeD& x, Index class_id,
                           const ClassMask& mask, const AttributionParams& params,
                           const LogitFieldD* logits = nullptr);

struct SkipRecord {
  Index class_id = 0;
  std::string reason;
};

struct ClassAttributions {
  std::vector<AttributionField> fields;
  std::vector<SkipRecord> skipped;
};

/// One field per class with a non-empty predicted mask. Class c draws its
/// randomness from params.rng.child(c).
ClassAttributions attribute_all_classes(SegmentationModel& model, const VolumeD& x,
                                        const AttributionParams& params);

}  // namespace voxagg
