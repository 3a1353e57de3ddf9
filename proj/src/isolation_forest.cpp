#include "voxagg/isolation_forest.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "voxagg/rng.hpp"

namespace voxagg {

double average_path_length(Index n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  double harmonic = 0.0;
  for (Index k = 1; k < n; ++k) harmonic += 1.0 / static_cast<double>(k);
  const double m = static_cast<double>(n);
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

namespace {

struct Builder {
  const std::vector<Eigen::VectorXd>& data;
  int height_limit;
  std::mt19937_64& engine;
  IsolationForest::Tree tree;

  int build(std::vector<Index>& idx, std::size_t lo, std::size_t hi, int depth) {
    const int id = static_cast<int>(tree.size());
    tree.push_back({});
    tree[static_cast<std::size_t>(id)].size = static_cast<Index>(hi - lo);
    if (depth >= height_limit || hi - lo <= 1) return id;

    const Index dim = data.front().size();
    std::vector<int> candidates;
    std::vector<std::pair<double, double>> range(static_cast<std::size_t>(dim));
    for (Index f = 0; f < dim; ++f) {
      double mn = data[static_cast<std::size_t>(idx[lo])][f];
      double mx = mn;
      for (std::size_t k = lo + 1; k < hi; ++k) {
        const double v = data[static_cast<std::size_t>(idx[k])][f];
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      range[static_cast<std::size_t>(f)] = {mn, mx};
      if (mx > mn) candidates.push_back(static_cast<int>(f));
    }
    if (candidates.empty()) return id;

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    const int f = candidates[pick(engine)];
    const auto [mn, mx] = range[static_cast<std::size_t>(f)];
    double split = std::uniform_real_distribution<double>(mn, mx)(engine);
    if (!(split > mn)) split = std::nextafter(mn, mx);

    const auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                                    idx.begin() + static_cast<std::ptrdiff_t>(hi),
                                    [&](Index r) { return data[static_cast<std::size_t>(r)][f] < split; });
    const auto m = static_cast<std::size_t>(mid - idx.begin());
    const int left = build(idx, lo, m, depth + 1);
    const int right = build(idx, m, hi, depth + 1);
    auto& node = tree[static_cast<std::size_t>(id)];
    node.feature = f;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }
};

}  // namespace

IsolationForest IsolationForest::train(const std::vector<FeatureRow>& rows, const Options& options) {
  std::vector<Eigen::VectorXd> plain;
  plain.reserve(rows.size());
  for (const auto& r : rows) plain.push_back(r.features);
  return train(plain, options);
}

IsolationForest IsolationForest::train(const std::vector<Eigen::VectorXd>& rows, const Options& options) {
  if (options.num_trees < 1) throw Error(ErrorKind::invalid_argument, "isolation forest needs at least one tree");
  if (options.subsample_size < 2) throw Error(ErrorKind::invalid_argument, "isolation forest subsample must be >= 2");
  if (rows.empty()) throw Error(ErrorKind::invalid_argument, "isolation forest needs training rows");
  const Index dim = rows.front().size();
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "feature rows are empty");

  IsolationForest forest;
  forest.options_ = options;
  std::vector<Eigen::VectorXd> data;
  for (const auto& r : rows) {
    if (r.size() != dim) throw Error(ErrorKind::dim_mismatch, "feature row dimension mismatch");
    if (r.array().isNaN().all()) {
      ++forest.excluded_;
      continue;
    }
    if ((r.array().isInf()).any()) throw Error(ErrorKind::non_finite, "infinite feature value");
    data.push_back(r);
  }
  if (data.size() < 2) throw Error(ErrorKind::invalid_argument, "isolation forest needs at least 2 valid rows");

  forest.fill_ = Eigen::VectorXd::Zero(dim);
  for (Index f = 0; f < dim; ++f) {
    double sum = 0.0;
    Index count = 0;
    for (const auto& r : data) {
      if (!std::isnan(r[f])) {
        sum += r[f];
        ++count;
      }
    }
    if (count == 0) throw Error(ErrorKind::invalid_argument, "feature " + std::to_string(f) + " is NaN in every row");
    forest.fill_[f] = sum / static_cast<double>(count);
  }
  for (auto& r : data) r = forest.impute(r);

  const auto n = static_cast<Index>(data.size());
  forest.psi_ = std::min(options.subsample_size, n);
  forest.height_limit_ = static_cast<int>(std::ceil(std::log2(static_cast<double>(forest.psi_))));

  const RngSpec root{options.seed, 0};
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (int t = 0; t < options.num_trees; ++t) {
    auto engine = root.child(static_cast<std::uint64_t>(t)).engine();
    std::iota(all.begin(), all.end(), Index{0});
    for (Index j = 0; j < forest.psi_; ++j) {
      std::uniform_int_distribution<Index> pick(j, n - 1);
      std::swap(all[static_cast<std::size_t>(j)], all[static_cast<std::size_t>(pick(engine))]);
    }
    std::vector<Index> sample(all.begin(), all.begin() + forest.psi_);
    Builder b{data, forest.height_limit_, engine, {}};
    b.build(sample, 0, sample.size(), 0);
    forest.trees_.push_back(std::move(b.tree));
  }
  return forest;
}

Eigen::VectorXd IsolationForest::impute(const Eigen::VectorXd& row) const {
  return row.array().isNaN().select(fill_, row);
}

double IsolationForest::mean_path_length(const Eigen::VectorXd& raw) const {
  if (raw.size() != dimension()) throw Error(ErrorKind::dim_mismatch, "feature row dimension mismatch");
  const Eigen::VectorXd row = impute(raw);
  double total = 0.0;
  for (const auto& tree : trees_) {
    std::size_t k = 0;
    int depth = 0;
    while (tree[k].feature >= 0) {
      k = static_cast<std::size_t>(row[tree[k].feature] < tree[k].split ? tree[k].left : tree[k].right);
      ++depth;
    }
    total += depth + average_path_length(tree[k].size);
  }
  return total / static_cast<double>(trees_.size());
}

double IsolationForest::score(const Eigen::VectorXd& row) const {
  return std::exp2(-mean_path_length(row) / average_path_length(psi_));
}

}  // namespace voxagg
