#include "voxagg/rank_test.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace voxagg {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

RankTestResult spearman_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::dim_mismatch, "spearman_test: length mismatch");
  if (a.size() < 3) throw Error(ErrorKind::invalid_argument, "spearman_test needs n >= 3");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw Error(ErrorKind::non_finite, "spearman_test: non-finite value at index " + std::to_string(i));
    }
  }
  RankTestResult r;
  r.n = static_cast<Index>(a.size());
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  Eigen::Map<const Eigen::VectorXd> va(ra.data(), r.n);
  Eigen::Map<const Eigen::VectorXd> vb(rb.data(), r.n);
  const Eigen::VectorXd da = va.array() - va.mean();
  const Eigen::VectorXd db = vb.array() - vb.mean();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) {
    r.undefined = true;
    r.rho = std::numeric_limits<double>::quiet_NaN();
    r.p_value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.rho = std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
  if (std::abs(r.rho) >= 1.0) {
    r.p_value = 0.0;
    return r;
  }
  const double dof = static_cast<double>(r.n - 2);
  const double t = r.rho * std::sqrt(dof / (1.0 - r.rho * r.rho));
  const boost::math::students_t dist(dof);
  r.p_value = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
  return r;
}

double dice(const ClassMask& pred, const ClassMask& truth) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::dim_mismatch, "dice: mask size mismatch");
  const Index a = pred.count();
  const Index b = truth.count();
  if (a + b == 0) return 1.0;
  const Index both = (pred.data() * truth.data()).cast<Index>().sum();
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

}  // namespace voxagg
