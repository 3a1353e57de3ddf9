#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "voxagg/error.hpp"
#include "voxagg/volume.hpp"

namespace voxagg {

/// One explained class of one input: its RoI-importance row. Cells may be NaN.
struct FeatureRow {
  std::string input_id;
  Index class_id = 0;
  Eigen::VectorXd features;
};

/// Expected unsuccessful-search path length in a binary search tree of n
/// points, c(n) = 2 H(n - 1) - 2 (n - 1) / n; c(1) = 0.
double average_path_length(Index n);

class IsolationForest {
 public:
  struct Options {
    int num_trees = 100;
    Index subsample_size = 256;
    std::uint64_t seed = 0;
  };

  struct Node {
    // Leaf when feature < 0.
    int feature = -1;
    double split = 0.0;
    int left = -1;
    int right = -1;
    Index size = 0;
  };
  using Tree = std::vector<Node>;

  /// Rows with every cell NaN are dropped (see excluded_rows()); remaining NaN
  /// cells are replaced with the per-feature training mean.
  static IsolationForest train(const std::vector<Eigen::VectorXd>& rows, const Options& options);
  static IsolationForest train(const std::vector<FeatureRow>& rows, const Options& options);

  /// s = 2^(-E[h(x)] / c(psi)), in (0, 1].
  double score(const Eigen::VectorXd& row) const;
  /// E[h(x)] over the trees, each leaf adding c(leaf size).
  double mean_path_length(const Eigen::VectorXd& row) const;

  Index dimension() const { return static_cast<Index>(fill_.size()); }
  Index sample_size() const { return psi_; }
  int height_limit() const { return height_limit_; }
  Index excluded_rows() const { return excluded_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const Options& options() const { return options_; }

 private:
  Eigen::VectorXd impute(const Eigen::VectorXd& row) const;

  Options options_;
  std::vector<Tree> trees_;
  Eigen::VectorXd fill_;
  Index psi_ = 0;
  int height_limit_ = 0;
  Index excluded_ = 0;
};

}  // namespace voxagg
