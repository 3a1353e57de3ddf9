#include "voxagg/metrics.hpp"

#include <chrono>
#include <limits>
#include <numeric>
#include <random>

namespace voxagg {

NormalizedAttribution normalize(const VolumeD& e) {
  if (auto bad = e.first_non_finite()) {
    throw Error(ErrorKind::non_finite, "non-finite attribution at voxel " + std::to_string(*bad));
  }
  NormalizedAttribution out{VolumeD(e.dims()), false};
  const double lo = e.data().minCoeff();
  const double hi = e.data().maxCoeff();
  if (!(hi > lo)) {
    out.constant = true;
    return out;
  }
  out.values.data() = (e.data().array() - lo) / (hi - lo);
  return out;
}

MetricValue pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::invalid_argument, "pearson: length mismatch");
  const auto n = static_cast<Index>(a.size());
  if (n < 2) return {0.0, true};
  Eigen::Map<const Eigen::VectorXd> va(a.data(), n);
  Eigen::Map<const Eigen::VectorXd> vb(b.data(), n);
  const Eigen::VectorXd da = va.array() - va.mean();
  const Eigen::VectorXd db = vb.array() - vb.mean();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  // Relative guard so round-off on a constant series does not pass as variance.
  const double tiny = 1e-24;
  if (saa <= tiny * std::max(1.0, va.squaredNorm()) || sbb <= tiny * std::max(1.0, vb.squaredNorm())) {
    return {0.0, true};
  }
  return {std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

Index default_subset_size(Index num_voxels) {
  return std::max<Index>(1, std::min<Index>(224 * 224, num_voxels / 2));
}

MetricValue faithfulness(const NormalizedAttribution& g, SegmentationModel& model, const VolumeD& x,
                         Index class_id, const ClassMask& mask, int n, Index m, const RngSpec& rng) {
  require_same_dims(g.values.dims(), x.dims(), "faithfulness attribution");
  if (n < 3) throw Error(ErrorKind::invalid_argument, "faithfulness needs n >= 3");
  if (m < 1 || m > x.size()) throw Error(ErrorKind::invalid_argument, "faithfulness subset size out of range");

  const double full = model.proxy(x, class_id, mask);
  auto engine = rng.engine();
  std::vector<Index> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), Index{0});

  std::vector<double> mass(static_cast<std::size_t>(n));
  std::vector<double> drop(static_cast<std::size_t>(n));
  VolumeD removed = x;
  for (int round = 0; round < n; ++round) {
    // Partial Fisher-Yates: the first m entries form a uniform m-subset.
    for (Index j = 0; j < m; ++j) {
      std::uniform_int_distribution<Index> pick(j, x.size() - 1);
      std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick(engine))]);
    }
    double s = 0.0;
    for (Index j = 0; j < m; ++j) {
      const Index v = order[static_cast<std::size_t>(j)];
      s += g.values[v];
      removed[v] = 0.0;
    }
    mass[static_cast<std::size_t>(round)] = s;
    drop[static_cast<std::size_t>(round)] = full - model.proxy(removed, class_id, mask);
    for (Index j = 0; j < m; ++j) {
      const Index v = order[static_cast<std::size_t>(j)];
      removed[v] = x[v];
    }
  }
  return pearson(mass, drop);
}

double sensitivity(const AttributionParams& method, SegmentationModel& model, const VolumeD& x,
                   Index class_id, const ClassMask& mask, int n, double radius, const RngSpec& rng) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sensitivity needs n >= 1");
  if (!(radius > 0)) throw Error(ErrorKind::invalid_argument, "sensitivity radius must be positive");

  const auto reference = normalize(attribute(model, x, class_id, mask, method));
  const double ref_norm = reference.values.data().norm();
  auto engine = rng.engine();
  std::normal_distribution<double> noise(0.0, radius);
  VolumeD perturbed = x;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (Index v = 0; v < x.size(); ++v) perturbed[v] = x[v] + noise(engine);
    const auto other = normalize(attribute(model, perturbed, class_id, mask, method));
    const double dist = (other.values.data() - reference.values.data()).norm();
    total += ref_norm > 0.0 ? dist / ref_norm : dist;
  }
  return total / n;
}

double efficiency(const AttributionParams& method, SegmentationModel& model, const VolumeD& x,
                  Index class_id, const ClassMask& mask) {
  const auto start = std::chrono::steady_clock::now();
  [[maybe_unused]] const auto field = attribute(model, x, class_id, mask, method);
  const auto stop = std::chrono::steady_clock::now();
  const double seconds = std::chrono::duration<double>(stop - start).count();
  // steady_clock can tick coarser than a tiny attribution call.
  return std::max(seconds, std::numeric_limits<double>::min());
}

}  // namespace voxagg
