#pragma once

#include "voxagg/volume.hpp"

namespace voxagg {

enum class Backend { synthetic, remote };

struct ModelInfo {
  Backend backend = Backend::synthetic;
  Index num_classes = 0;
  Dims input_dims;
  bool has_gradient = false;
};

/// A segmentation model f : R^p -> R^{p x l}.
///
/// Calls are not const: a remote backend owns one connection and serializes
/// requests over it, so concurrent workers each need their own handle.
class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;

  virtual ModelInfo info() const = 0;

  virtual LogitFieldD forward(const VolumeD& x) = 0;

  /// Gradient of the masked class-c logit sum with respect to x.
  virtual VolumeD proxy_gradient(const VolumeD& x, Index class_id, const ClassMask& mask) = 0;

  /// Masked class-c logit sum. Backends may override with a cheaper path.
  virtual double proxy(const VolumeD& x, Index class_id, const ClassMask& mask);
};

struct ProxyValue {
  Index class_id = 0;
  double value = 0.0;
  /// Set when the mask selects no voxel; value is then 0.
  bool empty_mask = false;
};

/// Sum-aggregated proxy: sum_i logits(i, c) * mask(i).
ProxyValue proxy_value(SegmentationModel& model, const VolumeD& x, Index class_id,
                       const ClassMask& mask);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h, one voxel at a time.
VolumeD finite_difference_gradient(SegmentationModel& model, const VolumeD& x, Index class_id,
                                   const ClassMask& mask, double h = 1e-3);

/// Shared argument validation for every backend.
void check_model_call(const ModelInfo& info, const VolumeD& x);
void check_model_call(const ModelInfo& info, const VolumeD& x, Index class_id, const ClassMask& mask);

}  // namespace voxagg
