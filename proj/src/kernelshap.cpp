#include "voxagg/kernelshap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace voxagg {

namespace {

double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (Index i = 1; i <= k; ++i) result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
  return result;
}

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

/// Coalition rows with accumulated regression weights; duplicates merge.
class CoalitionTable {
 public:
  explicit CoalitionTable(Index r) : r_(r) {}

  void add(const Coalition& z, double weight) {
    auto [it, inserted] = index_.try_emplace(z, rows_.size());
    if (inserted) {
      rows_.push_back(z);
      weights_.push_back(weight);
    } else {
      weights_[it->second] += weight;
    }
  }

  bool contains(const Coalition& z) const { return index_.count(z) != 0; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<Coalition>& rows() const { return rows_; }
  std::vector<double>& weights() { return weights_; }
  Index players() const { return r_; }

 private:
  Index r_;
  std::vector<Coalition> rows_;
  std::vector<double> weights_;
  std::map<Coalition, std::size_t> index_;
};

Coalition complement_of(const Coalition& z) {
  Coalition out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] ? 0 : 1;
  return out;
}

void enumerate_all(CoalitionTable& table) {
  const Index r = table.players();
  const std::uint64_t total = std::uint64_t{1} << r;
  for (std::uint64_t bits = 1; bits + 1 < total; ++bits) {
    Coalition z(static_cast<std::size_t>(r));
    Index size = 0;
    for (Index j = 0; j < r; ++j) {
      z[static_cast<std::size_t>(j)] = (bits >> j) & 1U;
      size += z[static_cast<std::size_t>(j)];
    }
    table.add(z, shapley_kernel_weight(r, size));
  }
}

// Complete enumeration of the smallest (and, paired, largest) coalition sizes
// while the budget covers them; the remainder is drawn by kernel mass.
void sample_coalitions(CoalitionTable& table, Index budget, const RngSpec& rng) {
  const Index r = table.players();
  const Index num_sizes = ceil_div(r - 1, 2);
  const Index num_paired = (r - 1) / 2;

  std::vector<double> size_mass(static_cast<std::size_t>(num_sizes));
  for (Index s = 1; s <= num_sizes; ++s) {
    size_mass[static_cast<std::size_t>(s - 1)] =
        (static_cast<double>(r) - 1.0) / (static_cast<double>(s) * static_cast<double>(r - s)) *
        (s <= num_paired ? 2.0 : 1.0);
  }
  const double total_mass = std::accumulate(size_mass.begin(), size_mass.end(), 0.0);
  for (auto& m : size_mass) m /= total_mass;

  std::vector<double> remaining_mass = size_mass;
  Index remaining = budget;
  Index full_sizes = 0;
  for (Index s = 1; s <= num_sizes; ++s) {
    const auto k = static_cast<std::size_t>(s - 1);
    const double subsets = binomial(r, s) * (s <= num_paired ? 2.0 : 1.0);
    if (remaining_mass[k] * static_cast<double>(remaining) / subsets < 1.0 - 1e-8) break;
    ++full_sizes;
    remaining -= static_cast<Index>(subsets);
    if (remaining_mass[k] < 1.0) {
      const double rest = 1.0 - remaining_mass[k];
      for (auto j = k + 1; j < remaining_mass.size(); ++j) remaining_mass[j] /= rest;
    }
    double w = size_mass[k] / binomial(r, s);
    if (s <= num_paired) w /= 2.0;
    std::vector<std::uint8_t> pattern(static_cast<std::size_t>(r), 0);
    std::fill(pattern.end() - s, pattern.end(), 1);
    do {
      table.add(pattern, w);
      if (s <= num_paired) table.add(complement_of(pattern), w);
    } while (std::next_permutation(pattern.begin(), pattern.end()));
  }

  if (full_sizes == num_sizes || remaining <= 0) return;

  const std::size_t enumerated = table.size();
  std::vector<double> draw_mass(remaining_mass.begin() + full_sizes, remaining_mass.end());
  std::discrete_distribution<Index> pick_size(draw_mass.begin(), draw_mass.end());
  auto engine = rng.engine();
  std::vector<Index> players(static_cast<std::size_t>(r));
  std::iota(players.begin(), players.end(), Index{0});

  const std::size_t target = enumerated + static_cast<std::size_t>(remaining);
  const Index max_draws = 100 * remaining + 1000;
  for (Index draw = 0; draw < max_draws && table.size() < target; ++draw) {
    const Index s = full_sizes + 1 + pick_size(engine);
    std::shuffle(players.begin(), players.end(), engine);
    Coalition z(static_cast<std::size_t>(r), 0);
    for (Index j = 0; j < s; ++j) z[static_cast<std::size_t>(players[static_cast<std::size_t>(j)])] = 1;
    table.add(z, 1.0);
    if (s <= num_paired && table.size() < target) table.add(complement_of(z), 1.0);
  }

  // Sampled rows share the kernel mass of the sizes that were not enumerated.
  const double left_mass = std::accumulate(size_mass.begin() + full_sizes, size_mass.end(), 0.0);
  auto& w = table.weights();
  const double drawn = std::accumulate(w.begin() + static_cast<std::ptrdiff_t>(enumerated), w.end(), 0.0);
  if (drawn > 0) {
    for (auto i = enumerated; i < w.size(); ++i) w[i] *= left_mass / drawn;
  }
}

}  // namespace

std::vector<Index> SupervoxelPartition::region_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(num_regions), 0);
  for (Index label : labels) ++sizes[static_cast<std::size_t>(label)];
  return sizes;
}

SupervoxelPartition partition_cubes(Dims dims, Index cube_edge) {
  if (cube_edge < 1) throw Error(ErrorKind::invalid_argument, "cube_edge must be >= 1");
  if (!dims.valid()) throw Error(ErrorKind::invalid_argument, "dims must be positive");
  const Index nx = ceil_div(dims.width, cube_edge);
  const Index ny = ceil_div(dims.height, cube_edge);
  const Index nz = ceil_div(dims.depth, cube_edge);
  SupervoxelPartition out;
  out.dims = dims;
  out.scheme = PartitionScheme::cubes;
  out.num_regions = nx * ny * nz;
  out.labels.resize(static_cast<std::size_t>(dims.size()));
  for (Index z = 0; z < dims.depth; ++z) {
    for (Index y = 0; y < dims.height; ++y) {
      for (Index x = 0; x < dims.width; ++x) {
        out.labels[static_cast<std::size_t>(dims.index(x, y, z))] =
            x / cube_edge + nx * (y / cube_edge + ny * (z / cube_edge));
      }
    }
  }
  return out;
}

Index cube_edge_for(Dims dims, Index cubes_per_axis) {
  if (cubes_per_axis < 1) throw Error(ErrorKind::invalid_argument, "cubes_per_axis must be >= 1");
  const Index longest = std::max({dims.width, dims.height, dims.depth});
  return std::max<Index>(1, ceil_div(longest, cubes_per_axis));
}

SupervoxelPartition partition_semantic(const LogitFieldD& logits) {
  const auto classes = argmax_labels(logits);
  std::vector<Index> class_region(static_cast<std::size_t>(logits.num_classes()), -1);
  for (Index c : classes) class_region[static_cast<std::size_t>(c)] = 0;

  SupervoxelPartition out;
  out.dims = logits.dims();
  out.scheme = PartitionScheme::semantic;
  for (Index c = 0; c < logits.num_classes(); ++c) {
    if (class_region[static_cast<std::size_t>(c)] < 0) continue;
    class_region[static_cast<std::size_t>(c)] = out.num_regions++;
    out.region_class.push_back(c);
  }
  out.labels.reserve(classes.size());
  for (Index c : classes) out.labels.push_back(class_region[static_cast<std::size_t>(c)]);
  return out;
}

double shapley_kernel_weight(Index r, Index coalition_size) {
  if (coalition_size <= 0 || coalition_size >= r) {
    throw Error(ErrorKind::invalid_argument, "Shapley kernel is infinite for empty or full coalitions");
  }
  return (static_cast<double>(r) - 1.0) /
         (binomial(r, coalition_size) * static_cast<double>(coalition_size) *
          static_cast<double>(r - coalition_size));
}

ShapleyEstimate kernelshap_game(Index num_players, const CoalitionGame& game, Index n_samples,
                                double ridge_lambda, const RngSpec& rng) {
  const Index r = num_players;
  if (r < 1) throw Error(ErrorKind::invalid_argument, "KernelSHAP needs at least one region");
  if (!(ridge_lambda >= 0)) throw Error(ErrorKind::invalid_argument, "ridge_lambda must be >= 0");

  ShapleyEstimate est;
  est.base_value = game(Coalition(static_cast<std::size_t>(r), 0));
  est.full_value = game(Coalition(static_cast<std::size_t>(r), 1));
  const double gap = est.full_value - est.base_value;
  if (r == 1) {
    est.values = Eigen::VectorXd::Constant(1, gap);
    est.num_samples = 2;
    est.enumerated = true;
    return est;
  }

  CoalitionTable table(r);
  const bool enumerate = r <= 30 && n_samples >= (Index{1} << r);
  if (enumerate) {
    enumerate_all(table);
    est.enumerated = true;
  } else {
    if (n_samples < r + 2) {
      throw Error(ErrorKind::invalid_argument, "KernelSHAP needs n_samples >= r + 2 (r = " +
                                                   std::to_string(r) + ")");
    }
    sample_coalitions(table, n_samples - 2, rng);
  }

  const auto rows = static_cast<Index>(table.size());
  Eigen::MatrixXd Z(rows, r);
  Eigen::VectorXd y(rows);
  Eigen::VectorXd w(rows);
  for (Index k = 0; k < rows; ++k) {
    const auto& z = table.rows()[static_cast<std::size_t>(k)];
    for (Index j = 0; j < r; ++j) Z(k, j) = z[static_cast<std::size_t>(j)];
    y[k] = game(z) - est.base_value;
    w[k] = table.weights()[static_cast<std::size_t>(k)];
  }
  est.num_samples = rows + 2;

  // Equality-constrained ridge regression via its KKT system:
  //   [Z'WZ + lambda I   1] [phi]   [Z'W y]
  //   [1'                0] [mu ] = [gap  ]
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(r + 1, r + 1);
  kkt.topLeftCorner(r, r) = Z.transpose() * w.asDiagonal() * Z;
  kkt.topLeftCorner(r, r).diagonal().array() += ridge_lambda;
  kkt.topRightCorner(r, 1).setOnes();
  kkt.bottomLeftCorner(1, r).setOnes();
  Eigen::VectorXd rhs(r + 1);
  rhs.head(r) = Z.transpose() * w.asDiagonal() * y;
  rhs[r] = gap;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  est.rcond = lu.rcond();
  if (!lu.isInvertible() || est.rcond < 1e-14) {
    throw Error(ErrorKind::singular_system,
                "KernelSHAP system is singular (rcond estimate " + std::to_string(est.rcond) + ")");
  }
  est.values = lu.solve(rhs).head(r);
  return est;
}

std::pair<AttributionField, ShapleyEstimate> kernelshap(SegmentationModel& model, const VolumeD& x,
                                                        Index class_id, const ClassMask& mask,
                                                        const SupervoxelPartition& partition,
                                                        Index n_samples, double ridge_lambda,
                                                        const RngSpec& rng) {
  check_model_call(model.info(), x, class_id, mask);
  require_same_dims(x.dims(), partition.dims, "supervoxel partition");

  VolumeD masked(x.dims());
  auto game = [&](const Coalition& z) {
    for (Index i = 0; i < x.size(); ++i) {
      masked[i] = z[static_cast<std::size_t>(partition.labels[static_cast<std::size_t>(i)])] ? x[i] : 0.0;
    }
    return model.proxy(masked, class_id, mask);
  };
  auto est = kernelshap_game(partition.num_regions, game, n_samples, ridge_lambda, rng);

  AttributionField field{VolumeD(x.dims()), class_id,
                         partition.scheme == PartitionScheme::cubes ? Method::kshap_cubes : Method::kshap_semantic,
                         nlohmann::json{{"regions", partition.num_regions}, {"samples", est.num_samples}}};
  for (Index i = 0; i < x.size(); ++i) {
    field.values[i] = est.values[partition.labels[static_cast<std::size_t>(i)]];
  }
  return {std::move(field), std::move(est)};
}

}  // namespace voxagg
