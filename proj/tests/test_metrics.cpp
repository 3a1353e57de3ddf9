#include <gtest/gtest.h>

#include "support.hpp"
#include "voxagg/metrics.hpp"

using namespace voxagg;

TEST(Normalize, HandAndDegenerate) {
  VolumeD e(Dims{3, 1, 1}, Eigen::Vector3d(-1, 0, 1));
  const auto n = normalize(e);
  EXPECT_EQ(n.values.data(), Eigen::Vector3d(0, 0.5, 1));
  EXPECT_FALSE(n.constant);
  const auto c = normalize(VolumeD::constant(Dims{3, 1, 1}, 4.0));
  EXPECT_TRUE(c.constant);
  EXPECT_TRUE(c.values.data().isZero(0.0));
  VolumeD unit(Dims{3, 1, 1}, Eigen::Vector3d(0, 0.3, 1));
  EXPECT_EQ(normalize(unit).values.data(), unit.data());
}

TEST(Pearson, PerfectAndDegenerate) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2, 4, 6, 8};
  const std::vector<double> c{5, 5, 5, 5};
  EXPECT_NEAR(pearson(a, b).value, 1.0, 1e-15);
  const auto d = pearson(a, c);
  EXPECT_EQ(d.value, 0.0);
  EXPECT_TRUE(d.degenerate);
}

TEST(Complexity, HandValues) {
  EXPECT_EQ(complexity(Eigen::Vector4d::Zero(), 0.1), 0.0);
  EXPECT_EQ(complexity(Eigen::Vector4d(0.05, 0.5, 0.95, 0.2), 0.1), 0.75);
  EXPECT_EQ(complexity(Eigen::Vector4d(0.05, 0.5, 0.95, 0.2), 0.0), 1.0);
  EXPECT_THROW(complexity(Eigen::Vector4d::Zero(), 1.0), Error);
}

TEST(Complexity, MonotoneInTheta) {
  const auto g = normalize(test::random_volume(Dims{6, 6, 6}, 3));
  double prev = 2.0;
  for (int k = 0; k < 20; ++k) {
    const double c = complexity(g, k / 20.0);
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(Faithfulness, ExactContributionsOnLinearModel) {
  const Dims d{8, 8, 8};
  auto m = test::linear_model(d, 3, 1);
  const auto x = make_synthetic_volume(d, 2);
  const auto mask = test::random_mask(d, 3);
  const auto g = m.proxy_gradient(x, 1, mask);
  VolumeD exact(d);
  exact.data() = g.data().cwiseProduct(x.data());
  const auto f = faithfulness(normalize(exact), m, x, 1, mask, 100, default_subset_size(x.size()), RngSpec{4, 0});
  EXPECT_GE(f.value, 0.99);
  VolumeD anti(d);
  anti.data() = -exact.data();
  EXPECT_LE(faithfulness(normalize(anti), m, x, 1, mask, 100, 64, RngSpec{4, 0}).value, -0.99);
  const auto flat = faithfulness(normalize(VolumeD::constant(d, 1.0)), m, x, 1, mask, 100, 64, RngSpec{4, 0});
  EXPECT_EQ(flat.value, 0.0);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_THROW(faithfulness(normalize(exact), m, x, 1, mask, 2, 64, RngSpec{}), Error);
  EXPECT_THROW(faithfulness(normalize(exact), m, x, 1, mask, 10, x.size() + 1, RngSpec{}), Error);
}

TEST(Faithfulness, DefaultSubsetSize) {
  EXPECT_EQ(default_subset_size(512), 256);
  EXPECT_EQ(default_subset_size(512 * 512 * 512), 224 * 224);
  EXPECT_EQ(default_subset_size(1), 1);
}

TEST(Sensitivity, VanillaOnLinearModelIsZero) {
  const Dims d{6, 6, 6};
  auto m = test::linear_model(d, 3, 1);
  const auto x = make_synthetic_volume(d, 2);
  AttributionParams vg;
  EXPECT_EQ(sensitivity(vg, m, x, 0, test::random_mask(d, 2), 3, 0.1, RngSpec{1, 1}), 0.0);
}

TEST(Sensitivity, ShrinksWithRadius) {
  const Dims d{6, 6, 6};
  auto m = test::smooth_model(d, 3, 1);
  const auto x = make_synthetic_volume(d, 2);
  const auto mask = test::random_mask(d, 2);
  AttributionParams vg;
  const double big = sensitivity(vg, m, x, 0, mask, 3, 0.1, RngSpec{1, 1});
  const double tiny = sensitivity(vg, m, x, 0, mask, 3, 1e-9, RngSpec{1, 1});
  EXPECT_GT(big, 0.0);
  EXPECT_LT(tiny, 1e-6);
  EXPECT_THROW(sensitivity(vg, m, x, 0, mask, 0, 0.1, RngSpec{}), Error);
  EXPECT_THROW(sensitivity(vg, m, x, 0, mask, 3, 0.0, RngSpec{}), Error);
}

TEST(Efficiency, PositiveAndCallCountDominance) {
  const Dims d{16, 16, 16};
  auto m = test::smooth_model(d, 3, 1);
  const auto x = make_synthetic_volume(d, 2);
  const auto mask = ClassMask::ones(d);
  AttributionParams vg;
  AttributionParams ig;
  ig.method = Method::ig;
  const double t_vg = efficiency(vg, m, x, 0, mask);
  EXPECT_GT(t_vg, 0.0);
  double best_vg = t_vg;
  double best_ig = efficiency(ig, m, x, 0, mask);
  for (int rep = 0; rep < 3; ++rep) {
    best_vg = std::min(best_vg, efficiency(vg, m, x, 0, mask));
    best_ig = std::min(best_ig, efficiency(ig, m, x, 0, mask));
  }
  EXPECT_GE(best_ig, best_vg);

  AttributionParams few;
  few.method = Method::kshap_cubes;
  few.kshap_samples = 200;
  AttributionParams many = few;
  many.kshap_samples = 1000;
  EXPECT_GE(efficiency(many, m, x, 0, mask), efficiency(few, m, x, 0, mask));
}
