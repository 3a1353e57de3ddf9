#pragma once

#include <cstdint>
#include <vector>

#include "voxagg/model.hpp"

namespace voxagg {

enum class Nonlinearity { identity, smooth_saturating };

/// Closed-form stand-in for a trained segmentation network.
///
///   z(i, c)     = w_c(i) * x(i) + context_c * mean_{j in N6(i)} x(j) + bias_c
///   logit(i, c) = z                          (identity)
///               = s * tanh(z / s)            (smooth_saturating, s = saturation)
///
/// N6(i) are the in-bounds face neighbours of voxel i; a voxel without
/// neighbours contributes no context term.
struct SyntheticModelSpec {
  Dims dims;
  std::vector<VolumeD> weights;
  std::vector<double> context;
  std::vector<double> bias;
  Nonlinearity nonlinearity = Nonlinearity::identity;
  double saturation = 2.0;
  std::uint64_t seed = 0;

  Index num_classes() const { return static_cast<Index>(weights.size()); }
};

/// Random model whose argmax splits the [0, 1] intensity range into l bands,
/// with per-voxel weight jitter and a neighbourhood term of relative strength
/// `context_strength`.
SyntheticModelSpec make_synthetic_spec(Dims dims, Index num_classes, Nonlinearity nonlinearity,
                                       std::uint64_t seed, double context_strength = 0.3,
                                       double jitter = 0.25);

/// Smooth random field in [0, 1] built from a few Gaussian blobs.
VolumeD make_synthetic_volume(Dims dims, std::uint64_t seed);

class SyntheticModel final : public SegmentationModel {
 public:
  explicit SyntheticModel(SyntheticModelSpec spec);

  ModelInfo info() const override;
  LogitFieldD forward(const VolumeD& x) override;
  VolumeD proxy_gradient(const VolumeD& x, Index class_id, const ClassMask& mask) override;
  double proxy(const VolumeD& x, Index class_id, const ClassMask& mask) override;

  const SyntheticModelSpec& spec() const noexcept { return spec_; }

 private:
  Eigen::VectorXd pre_activation(const VolumeD& x, Index class_id) const;
  Eigen::VectorXd neighbour_mean(const VolumeD& x) const;
  double activate(double z) const;
  double activate_derivative(double z) const;

  SyntheticModelSpec spec_;
  // Flattened 6-neighbourhood in CSR form.
  std::vector<Index> nbr_offsets_;
  std::vector<Index> nbr_indices_;
};

}  // namespace voxagg
