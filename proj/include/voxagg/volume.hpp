#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxagg/error.hpp"

namespace voxagg {

using Index = Eigen::Index;

/// Grid extent. Voxel order is x-fastest: i = x + W * (y + H * z).
struct Dims {
  Index width = 0;
  Index height = 0;
  Index depth = 0;

  constexpr Index size() const noexcept { return width * height * depth; }
  constexpr Index index(Index x, Index y, Index z) const noexcept {
    return x + width * (y + height * z);
  }
  constexpr bool valid() const noexcept { return width > 0 && height > 0 && depth > 0; }

  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& dims);

using Spacing = std::array<double, 3>;

inline void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::dim_mismatch,
                std::string(what) + ": dims " + to_string(a) + " vs " + to_string(b));
  }
}

/// Dense scalar field over a 3D grid.
template <typename Scalar>
class Volume {
 public:
  using Scalar_t = Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Volume() = default;

  explicit Volume(Dims dims) : dims_(dims), data_(Vector::Zero(dims.size())) { check_dims(); }

  Volume(Dims dims, Vector data, std::optional<Spacing> spacing = std::nullopt)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    check_dims();
    if (data_.size() != dims_.size()) {
      throw Error(ErrorKind::size_mismatch, "volume data length " + std::to_string(data_.size()) +
                                                " does not match dims " + to_string(dims_));
    }
  }

  static Volume constant(Dims dims, Scalar value) {
    return Volume(dims, Vector::Constant(dims.size(), value));
  }

  const Dims& dims() const noexcept { return dims_; }
  Index size() const noexcept { return data_.size(); }

  const std::optional<Spacing>& spacing() const noexcept { return spacing_; }
  void set_spacing(std::optional<Spacing> spacing) { spacing_ = spacing; }

  const Vector& data() const noexcept { return data_; }
  Vector& data() noexcept { return data_; }

  Scalar operator[](Index i) const { return data_[i]; }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator()(Index x, Index y, Index z) const { return data_[dims_.index(x, y, z)]; }
  Scalar& operator()(Index x, Index y, Index z) { return data_[dims_.index(x, y, z)]; }

  /// Index of the first non-finite value, if any.
  std::optional<Index> first_non_finite() const {
    for (Index i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(static_cast<double>(data_[i]))) return i;
    }
    return std::nullopt;
  }

  template <typename Other>
  Volume<Other> cast() const {
    return Volume<Other>(dims_, data_.template cast<Other>(), spacing_);
  }

 private:
  void check_dims() const {
    if (!dims_.valid()) throw Error(ErrorKind::invalid_argument, "dims must be positive");
  }

  Dims dims_;
  std::optional<Spacing> spacing_;
  Vector data_;
};

using VolumeF = Volume<float>;
using VolumeD = Volume<double>;

/// Per-voxel, per-class logits stored voxel-major: row i holds the l class
/// scores of voxel i.
template <typename Scalar>
class LogitField {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  LogitField() = default;

  LogitField(Dims dims, Index num_classes)
      : dims_(dims), values_(Matrix::Zero(dims.size(), num_classes)) {
    check();
  }

  LogitField(Dims dims, Matrix values) : dims_(dims), values_(std::move(values)) {
    check();
    if (values_.rows() != dims_.size()) {
      throw Error(ErrorKind::size_mismatch, "logit rows do not match dims " + to_string(dims_));
    }
  }

  const Dims& dims() const noexcept { return dims_; }
  Index num_voxels() const noexcept { return values_.rows(); }
  Index num_classes() const noexcept { return values_.cols(); }

  const Matrix& values() const noexcept { return values_; }
  Matrix& values() noexcept { return values_; }

  Scalar operator()(Index voxel, Index cls) const { return values_(voxel, cls); }
  Scalar& operator()(Index voxel, Index cls) { return values_(voxel, cls); }

  template <typename Other>
  LogitField<Other> cast() const {
    return LogitField<Other>(dims_, values_.template cast<Other>());
  }

 private:
  void check() const {
    if (!dims_.valid()) throw Error(ErrorKind::invalid_argument, "dims must be positive");
    if (values_.cols() < 2) throw Error(ErrorKind::invalid_argument, "logits need at least 2 classes");
  }

  Dims dims_;
  Matrix values_;
};

using LogitFieldF = LogitField<float>;
using LogitFieldD = LogitField<double>;

/// Binary voxel mask.
class ClassMask {
 public:
  using Array = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

  ClassMask() = default;
  explicit ClassMask(Dims dims) : dims_(dims), data_(Array::Zero(dims.size())) {}
  ClassMask(Dims dims, Array data);

  static ClassMask ones(Dims dims) { return ClassMask(dims, Array::Ones(dims.size())); }

  const Dims& dims() const noexcept { return dims_; }
  Index size() const noexcept { return data_.size(); }
  const Array& data() const noexcept { return data_; }

  bool operator[](Index i) const { return data_[i] != 0; }
  void set(Index i, bool on) { data_[i] = on ? 1 : 0; }

  Index count() const { return data_.template cast<Index>().sum(); }
  bool empty() const { return count() == 0; }

  friend bool operator==(const ClassMask& a, const ClassMask& b) {
    return a.dims_ == b.dims_ && (a.data_ == b.data_).all();
  }

 private:
  Dims dims_;
  Array data_;
};

enum class MaskOp { intersect, unite, complement };

/// Element-wise boolean algebra; `b` is ignored for complement.
ClassMask mask_algebra(const ClassMask& a, const ClassMask& b, MaskOp op);
ClassMask complement(const ClassMask& a);

enum class RoISource { predicted, external };

struct RoI {
  std::string name;
  ClassMask mask;
  RoISource source = RoISource::predicted;
};

/// Ordered, uniquely named set of same-shaped masks.
class RoISet {
 public:
  RoISet() = default;

  void add(std::string name, ClassMask mask, RoISource source);

  const std::vector<RoI>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  const RoI& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<std::string> names() const;

 private:
  std::vector<RoI> entries_;
};

/// Clamp into [clip_lo, clip_hi] and map affinely onto [0, 1].
template <typename Scalar>
Volume<Scalar> preprocess(const Volume<Scalar>& raw, double clip_lo, double clip_hi) {
  if (!(clip_lo < clip_hi)) {
    throw Error(ErrorKind::invalid_argument, "preprocess requires clip_lo < clip_hi");
  }
  if (auto bad = raw.first_non_finite()) {
    throw Error(ErrorKind::non_finite, "non-finite input value at voxel " + std::to_string(*bad));
  }
  const double range = clip_hi - clip_lo;
  Volume<Scalar> out = raw;
  out.data() = raw.data().unaryExpr([&](Scalar v) {
    const double clamped = std::clamp(static_cast<double>(v), clip_lo, clip_hi);
    return static_cast<Scalar>((clamped - clip_lo) / range);
  });
  return out;
}

/// Per-voxel argmax class; ties resolve to the lowest class index.
template <typename Scalar>
std::vector<Index> argmax_labels(const LogitField<Scalar>& logits) {
  std::vector<Index> labels(static_cast<std::size_t>(logits.num_voxels()));
  const auto& v = logits.values();
  for (Index i = 0; i < v.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < v.cols(); ++c) {
      if (v(i, c) > v(i, best)) best = c;
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

/// One mask per class; the masks partition the voxel set.
template <typename Scalar>
std::vector<ClassMask> argmax_masks(const LogitField<Scalar>& logits) {
  std::vector<ClassMask> masks;
  masks.reserve(static_cast<std::size_t>(logits.num_classes()));
  for (Index c = 0; c < logits.num_classes(); ++c) masks.emplace_back(logits.dims());
  const auto labels = argmax_labels(logits);
  for (Index i = 0; i < logits.num_voxels(); ++i) {
    masks[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])].set(i, true);
  }
  return masks;
}

}  // namespace voxagg
