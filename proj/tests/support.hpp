#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "voxagg/kernelshap.hpp"
#include "voxagg/synthetic_model.hpp"

namespace voxagg::test {

inline VolumeD random_volume(Dims dims, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 engine(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  VolumeD v(dims);
  for (Index i = 0; i < v.size(); ++i) v[i] = u(engine);
  return v;
}

inline ClassMask random_mask(Dims dims, std::uint64_t seed, double density = 0.5) {
  std::mt19937_64 engine(seed);
  std::bernoulli_distribution on(density);
  ClassMask m(dims);
  for (Index i = 0; i < m.size(); ++i) m.set(i, on(engine));
  if (m.empty()) m.set(0, true);
  return m;
}

inline SyntheticModel linear_model(Dims dims, Index classes, std::uint64_t seed) {
  return SyntheticModel(make_synthetic_spec(dims, classes, Nonlinearity::identity, seed));
}

inline SyntheticModel smooth_model(Dims dims, Index classes, std::uint64_t seed) {
  return SyntheticModel(make_synthetic_spec(dims, classes, Nonlinearity::smooth_saturating, seed));
}

/// Single-voxel, two-class linear model with w = (1, -1) and zero bias.
inline SyntheticModel hand_model() {
  SyntheticModelSpec s;
  s.dims = Dims{1, 1, 1};
  s.weights = {VolumeD::constant(s.dims, 1.0), VolumeD::constant(s.dims, -1.0)};
  s.context = {0.0, 0.0};
  s.bias = {0.0, 0.0};
  return SyntheticModel(std::move(s));
}

/// Gradient of the masked logit sum of an identity-nonlinearity synthetic
/// model, written out voxel by voxel from the model definition.
inline VolumeD linear_gradient_oracle(const SyntheticModelSpec& spec, Index c, const ClassMask& mask) {
  const Dims d = spec.dims;
  VolumeD g(d);
  auto in_bounds = [&](Index x, Index y, Index z) {
    return x >= 0 && y >= 0 && z >= 0 && x < d.width && y < d.height && z < d.depth;
  };
  const int offs[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  for (Index z = 0; z < d.depth; ++z) {
    for (Index y = 0; y < d.height; ++y) {
      for (Index x = 0; x < d.width; ++x) {
        const Index i = d.index(x, y, z);
        if (!mask[i]) continue;
        g[i] += spec.weights[static_cast<std::size_t>(c)][i];
        int count = 0;
        for (const auto& o : offs) count += in_bounds(x + o[0], y + o[1], z + o[2]) ? 1 : 0;
        for (const auto& o : offs) {
          if (in_bounds(x + o[0], y + o[1], z + o[2])) {
            g(x + o[0], y + o[1], z + o[2]) += spec.context[static_cast<std::size_t>(c)] / count;
          }
        }
      }
    }
  }
  return g;
}

/// phi_j = sum over S not containing j of |S|! (r - |S| - 1)! / r! (v(S + j) - v(S)).
inline Eigen::VectorXd brute_force_shapley(Index r, const CoalitionGame& game) {
  const std::uint64_t total = std::uint64_t{1} << r;
  std::vector<double> value(total);
  Coalition z(static_cast<std::size_t>(r));
  for (std::uint64_t s = 0; s < total; ++s) {
    for (Index j = 0; j < r; ++j) z[static_cast<std::size_t>(j)] = (s >> j) & 1U;
    value[s] = game(z);
  }
  std::vector<double> fact(static_cast<std::size_t>(r) + 1, 1.0);
  for (Index k = 1; k <= r; ++k) fact[static_cast<std::size_t>(k)] = fact[static_cast<std::size_t>(k) - 1] * static_cast<double>(k);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(r);
  for (Index j = 0; j < r; ++j) {
    const std::uint64_t bit = std::uint64_t{1} << j;
    for (std::uint64_t s = 0; s < total; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
      const double w = fact[size] * fact[static_cast<std::size_t>(r) - size - 1] / fact[static_cast<std::size_t>(r)];
      phi[j] += w * (value[s | bit] - value[s]);
    }
  }
  return phi;
}

/// Random cooperative game with pairwise and triple interactions.
struct RandomGame {
  Index r;
  Eigen::VectorXd linear;
  Eigen::MatrixXd pair;
  double triple;
  double offset;

  RandomGame(Index players, std::uint64_t seed) : r(players) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    linear = Eigen::VectorXd::NullaryExpr(r, [&] { return n(engine); });
    pair = Eigen::MatrixXd::NullaryExpr(r, r, [&] { return 0.3 * n(engine); });
    triple = n(engine);
    offset = n(engine);
  }

  double operator()(const Coalition& z) const {
    double v = offset;
    for (Index i = 0; i < r; ++i) {
      if (!z[static_cast<std::size_t>(i)]) continue;
      v += linear[i];
      for (Index j = i + 1; j < r; ++j) {
        if (z[static_cast<std::size_t>(j)]) v += pair(i, j);
      }
    }
    if (r >= 3 && z[0] && z[1] && z[2]) v += triple;
    return v;
  }
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("voxagg_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace voxagg::test
