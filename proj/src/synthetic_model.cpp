#include "voxagg/synthetic_model.hpp"

#include <random>

#include "voxagg/rng.hpp"

namespace voxagg {

SyntheticModelSpec make_synthetic_spec(Dims dims, Index num_classes, Nonlinearity nonlinearity,
                                       std::uint64_t seed, double context_strength, double jitter) {
  if (num_classes < 2) throw Error(ErrorKind::invalid_argument, "synthetic model needs >= 2 classes");
  if (context_strength < 0 || context_strength > 1) {
    throw Error(ErrorKind::invalid_argument, "context_strength must lie in [0, 1]");
  }
  SyntheticModelSpec spec;
  spec.dims = dims;
  spec.nonlinearity = nonlinearity;
  spec.seed = seed;

  // Nearest-centre banding: maximizing -k (u - mu_c)^2 over c is the same as
  // maximizing k (2 mu_c u - mu_c^2), which is affine in u.
  constexpr double kSlope = 4.0;
  auto engine = RngSpec{seed, 0}.engine();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Index c = 0; c < num_classes; ++c) {
    const double centre = (static_cast<double>(c) + 0.5) / static_cast<double>(num_classes);
    const double slope = 2.0 * kSlope * centre;
    VolumeD w(dims);
    for (Index i = 0; i < w.size(); ++i) w[i] = slope * (1.0 - context_strength) * (1.0 + jitter * unit(engine));
    spec.weights.push_back(std::move(w));
    spec.context.push_back(slope * context_strength);
    spec.bias.push_back(-kSlope * centre * centre);
  }
  return spec;
}

VolumeD make_synthetic_volume(Dims dims, std::uint64_t seed) {
  auto engine = RngSpec{seed, 1}.engine();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int blobs = 4;
  struct Blob {
    double cx, cy, cz, radius, amplitude;
  };
  std::vector<Blob> list;
  for (int b = 0; b < blobs; ++b) {
    list.push_back({unit(engine) * static_cast<double>(dims.width), unit(engine) * static_cast<double>(dims.height),
                    unit(engine) * static_cast<double>(dims.depth),
                    0.2 + 0.3 * unit(engine) * static_cast<double>(std::max({dims.width, dims.height, dims.depth})),
                    unit(engine) < 0.5 ? -1.0 : 1.0});
  }
  VolumeD v(dims);
  for (Index z = 0; z < dims.depth; ++z) {
    for (Index y = 0; y < dims.height; ++y) {
      for (Index x = 0; x < dims.width; ++x) {
        double s = 0.05 * unit(engine);
        for (const auto& b : list) {
          const double dx = static_cast<double>(x) - b.cx;
          const double dy = static_cast<double>(y) - b.cy;
          const double dz = static_cast<double>(z) - b.cz;
          s += b.amplitude * std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * b.radius * b.radius));
        }
        v(x, y, z) = s;
      }
    }
  }
  const double lo = v.data().minCoeff();
  const double hi = v.data().maxCoeff();
  if (hi > lo) v.data() = (v.data().array() - lo) / (hi - lo);
  return v;
}

SyntheticModel::SyntheticModel(SyntheticModelSpec spec) : spec_(std::move(spec)) {
  const Dims d = spec_.dims;
  if (!d.valid()) throw Error(ErrorKind::invalid_argument, "synthetic model dims must be positive");
  if (spec_.weights.size() < 2 || spec_.context.size() != spec_.weights.size() ||
      spec_.bias.size() != spec_.weights.size()) {
    throw Error(ErrorKind::invalid_argument, "synthetic model needs >= 2 classes with matching parameters");
  }
  if (!(spec_.saturation > 0)) throw Error(ErrorKind::invalid_argument, "saturation must be positive");
  for (const auto& w : spec_.weights) {
    require_same_dims(d, w.dims(), "synthetic weights");
    if (w.first_non_finite()) throw Error(ErrorKind::non_finite, "synthetic weights must be finite");
  }

  nbr_offsets_.reserve(static_cast<std::size_t>(d.size()) + 1);
  nbr_offsets_.push_back(0);
  for (Index z = 0; z < d.depth; ++z) {
    for (Index y = 0; y < d.height; ++y) {
      for (Index x = 0; x < d.width; ++x) {
        if (x > 0) nbr_indices_.push_back(d.index(x - 1, y, z));
        if (x + 1 < d.width) nbr_indices_.push_back(d.index(x + 1, y, z));
        if (y > 0) nbr_indices_.push_back(d.index(x, y - 1, z));
        if (y + 1 < d.height) nbr_indices_.push_back(d.index(x, y + 1, z));
        if (z > 0) nbr_indices_.push_back(d.index(x, y, z - 1));
        if (z + 1 < d.depth) nbr_indices_.push_back(d.index(x, y, z + 1));
        nbr_offsets_.push_back(static_cast<Index>(nbr_indices_.size()));
      }
    }
  }
}

ModelInfo SyntheticModel::info() const {
  return ModelInfo{Backend::synthetic, spec_.num_classes(), spec_.dims, true};
}

Eigen::VectorXd SyntheticModel::neighbour_mean(const VolumeD& x) const {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const auto begin = nbr_offsets_[static_cast<std::size_t>(i)];
    const auto end = nbr_offsets_[static_cast<std::size_t>(i) + 1];
    if (begin == end) continue;
    double s = 0;
    for (auto k = begin; k < end; ++k) s += x[nbr_indices_[static_cast<std::size_t>(k)]];
    mean[i] = s / static_cast<double>(end - begin);
  }
  return mean;
}

Eigen::VectorXd SyntheticModel::pre_activation(const VolumeD& x, Index class_id) const {
  const auto c = static_cast<std::size_t>(class_id);
  return (spec_.weights[c].data().cwiseProduct(x.data()) + spec_.context[c] * neighbour_mean(x))
             .array() +
         spec_.bias[c];
}

double SyntheticModel::activate(double z) const {
  if (spec_.nonlinearity == Nonlinearity::identity) return z;
  return spec_.saturation * std::tanh(z / spec_.saturation);
}

double SyntheticModel::activate_derivative(double z) const {
  if (spec_.nonlinearity == Nonlinearity::identity) return 1.0;
  const double t = std::tanh(z / spec_.saturation);
  return 1.0 - t * t;
}

LogitFieldD SyntheticModel::forward(const VolumeD& x) {
  check_model_call(info(), x);
  LogitFieldD out(x.dims(), spec_.num_classes());
  const Eigen::VectorXd nbr = neighbour_mean(x);
  for (Index c = 0; c < spec_.num_classes(); ++c) {
    const auto cc = static_cast<std::size_t>(c);
    for (Index i = 0; i < x.size(); ++i) {
      out(i, c) = activate(spec_.weights[cc][i] * x[i] + spec_.context[cc] * nbr[i] + spec_.bias[cc]);
    }
  }
  return out;
}

double SyntheticModel::proxy(const VolumeD& x, Index class_id, const ClassMask& mask) {
  check_model_call(info(), x, class_id, mask);
  const Eigen::VectorXd z = pre_activation(x, class_id);
  double total = 0;
  for (Index i = 0; i < z.size(); ++i) {
    if (mask[i]) total += activate(z[i]);
  }
  return total;
}

VolumeD SyntheticModel::proxy_gradient(const VolumeD& x, Index class_id, const ClassMask& mask) {
  check_model_call(info(), x, class_id, mask);
  const auto c = static_cast<std::size_t>(class_id);
  const Eigen::VectorXd z = pre_activation(x, class_id);
  // Upstream weight of each voxel's own logit: mask(i) * nl'(z_i).
  Eigen::VectorXd upstream(z.size());
  for (Index i = 0; i < z.size(); ++i) upstream[i] = mask[i] ? activate_derivative(z[i]) : 0.0;

  VolumeD grad(x.dims());
  grad.data() = upstream.cwiseProduct(spec_.weights[c].data());
  for (Index i = 0; i < z.size(); ++i) {
    if (upstream[i] == 0.0) continue;
    const auto begin = nbr_offsets_[static_cast<std::size_t>(i)];
    const auto end = nbr_offsets_[static_cast<std::size_t>(i) + 1];
    if (begin == end) continue;
    const double share = upstream[i] * spec_.context[c] / static_cast<double>(end - begin);
    for (auto k = begin; k < end; ++k) grad[nbr_indices_[static_cast<std::size_t>(k)]] += share;
  }
  return grad;
}

}  // namespace voxagg
