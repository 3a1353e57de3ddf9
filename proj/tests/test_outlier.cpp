#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "voxagg/outlier_pipeline.hpp"

using namespace voxagg;

namespace {

std::vector<Eigen::VectorXd> gaussian_rows(int n, Index dim, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < n; ++i) rows.push_back(Eigen::VectorXd::NullaryExpr(dim, [&] { return g(engine); }));
  return rows;
}

/// Two-sided Student-t tail by Simpson quadrature of the density on [0, |t|].
double t_two_sided_p(double t, double df) {
  const double norm = std::tgamma((df + 1) / 2) / (std::sqrt(df * std::numbers::pi) * std::tgamma(df / 2));
  auto pdf = [&](double x) { return norm * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = pdf(0) + pdf(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

ExplanationMatrix one_row_matrix(std::vector<double> cells, const std::string& label = "liver") {
  ExplanationMatrix m;
  m.rows = {label};
  for (std::size_t b = 0; b < cells.size(); ++b) m.cols.push_back("roi" + std::to_string(b));
  m.values = Eigen::Map<Eigen::RowVectorXd>(cells.data(), static_cast<Index>(cells.size()));
  m.support = Eigen::MatrixXi::Ones(1, static_cast<Index>(cells.size()));
  return m;
}

}  // namespace

TEST(IsolationForest, AveragePathLength) {
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  EXPECT_NEAR(average_path_length(3), 2.0 * 1.5 - 4.0 / 3.0, 1e-15);
  double h = 0.0;
  for (int i = 1; i < 256; ++i) h += 1.0 / i;
  EXPECT_NEAR(average_path_length(256), 2.0 * h - 2.0 * 255.0 / 256.0, 1e-12);
}

TEST(IsolationForest, IdenticalRowsScoreEqually) {
  std::vector<Eigen::VectorXd> rows(10, Eigen::Vector3d(0.2, 0.3, 0.5));
  const auto forest = IsolationForest::train(rows, {});
  for (const auto& r : rows) EXPECT_EQ(forest.score(r), forest.score(rows[0]));
  EXPECT_NEAR(forest.mean_path_length(rows[0]), average_path_length(10), 1e-12);
  EXPECT_NEAR(forest.score(rows[0]), 0.5, 1e-12);
}

TEST(IsolationForest, PlantedOutlierScoresHighest) {
  auto rows = gaussian_rows(200, 2, 3);
  rows.push_back(Eigen::Vector2d(6.0, 6.0));
  const auto forest = IsolationForest::train(rows, {.num_trees = 100, .subsample_size = 256, .seed = 1});
  const double planted = forest.score(rows.back());
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) EXPECT_LT(forest.score(rows[i]), planted);
  EXPECT_GT(planted, 0.6);
}

TEST(IsolationForest, StructureAndDeterminism) {
  const auto rows = gaussian_rows(500, 4, 8);
  const auto a = IsolationForest::train(rows, {.num_trees = 20, .subsample_size = 256, .seed = 2});
  const auto b = IsolationForest::train(rows, {.num_trees = 20, .subsample_size = 256, .seed = 2});
  EXPECT_EQ(a.sample_size(), 256);
  EXPECT_EQ(a.height_limit(), 8);
  EXPECT_EQ(a.trees().size(), 20U);
  for (const auto& r : rows) EXPECT_EQ(a.score(r), b.score(r));

  for (const auto& tree : a.trees()) {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    Index leaves = 0;
    while (!stack.empty()) {
      auto [node, depth] = stack.back();
      stack.pop_back();
      EXPECT_LE(depth, a.height_limit());
      const auto& n = tree[static_cast<std::size_t>(node)];
      if (n.feature < 0) {
        leaves += n.size;
      } else {
        EXPECT_EQ(tree[static_cast<std::size_t>(n.left)].size + tree[static_cast<std::size_t>(n.right)].size, n.size);
        stack.push_back({n.left, depth + 1});
        stack.push_back({n.right, depth + 1});
      }
    }
    EXPECT_EQ(leaves, 256);
  }
  const auto small = IsolationForest::train(gaussian_rows(5, 2, 1), {});
  EXPECT_EQ(small.sample_size(), 5);
  EXPECT_EQ(small.height_limit(), 3);
}

TEST(IsolationForest, MissingValues) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Eigen::VectorXd> rows{Eigen::Vector2d(1, nan), Eigen::Vector2d(3, 4), Eigen::Vector2d(nan, nan),
                                    Eigen::Vector2d(5, 8)};
  const auto forest = IsolationForest::train(rows, {.num_trees = 10, .subsample_size = 256, .seed = 0});
  EXPECT_EQ(forest.excluded_rows(), 1);
  EXPECT_EQ(forest.sample_size(), 3);
  // A NaN cell is scored as the training mean of its feature.
  EXPECT_EQ(forest.score(Eigen::Vector2d(1, nan)), forest.score(Eigen::Vector2d(1, 6)));
  EXPECT_EQ(forest.score(Eigen::Vector2d(nan, nan)), forest.score(Eigen::Vector2d(3, 6)));
}

TEST(IsolationForest, Errors) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(IsolationForest::train(std::vector<Eigen::VectorXd>{}, {}), Error);
  EXPECT_THROW(IsolationForest::train(std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, 2)}, {}), Error);
  EXPECT_THROW(IsolationForest::train(std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, inf), Eigen::Vector2d(1, 2)}, {}), Error);
  EXPECT_THROW(IsolationForest::train(std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, nan), Eigen::Vector2d(1, nan)}, {}), Error);
  EXPECT_THROW(IsolationForest::train(std::vector<Eigen::VectorXd>{Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)}, {}), Error);
  const auto forest = IsolationForest::train(gaussian_rows(10, 2, 1), {});
  EXPECT_THROW(forest.score(Eigen::Vector3d::Zero()), Error);
}

TEST(Spearman, HandExample) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{1, 3, 2, 5, 4};
  const auto r = spearman_test(a, b);
  EXPECT_NEAR(r.rho, 0.8, 1e-15);
  const double t = 0.8 * std::sqrt(3.0 / (1.0 - 0.64));
  EXPECT_NEAR(r.p_value, t_two_sided_p(t, 3.0), 1e-6);
  EXPECT_NEAR(r.p_value, 0.104, 1e-3);
  EXPECT_EQ(r.n, 5);
}

TEST(Spearman, PerfectAndConstant) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> up{10, 20, 30, 40};
  const std::vector<double> down{4, 3, 2, 1};
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_EQ(spearman_test(a, up).rho, 1.0);
  EXPECT_EQ(spearman_test(a, up).p_value, 0.0);
  EXPECT_EQ(spearman_test(a, down).rho, -1.0);
  const auto u = spearman_test(a, flat);
  EXPECT_TRUE(u.undefined);
  EXPECT_TRUE(std::isnan(u.rho));
  EXPECT_THROW(spearman_test(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(spearman_test(a, std::vector<double>{1, 2, 3}), Error);
}

TEST(Spearman, InvariantUnderMonotoneTransform) {
  std::mt19937_64 engine(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(30), b(30), ea(30), cb(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = g(engine);
    b[i] = a[i] + g(engine);
    ea[i] = std::exp(a[i]);
    cb[i] = b[i] * b[i] * b[i];
  }
  const auto r1 = spearman_test(a, b);
  const auto r2 = spearman_test(ea, cb);
  EXPECT_NEAR(r1.rho, r2.rho, 1e-15);
  EXPECT_NEAR(r1.p_value, r2.p_value, 1e-15);
}

TEST(Spearman, TiesGetAverageRanks) {
  EXPECT_EQ(average_ranks(std::vector<double>{3, 1, 3, 2}), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Dice, Examples) {
  const Dims d{4, 1, 1};
  auto mask = [&](std::initializer_list<int> v) {
    ClassMask m(d);
    Index i = 0;
    for (int x : v) m.set(i++, x != 0);
    return m;
  };
  EXPECT_EQ(dice(mask({1, 1, 0, 0}), mask({1, 1, 0, 0})), 1.0);
  EXPECT_EQ(dice(mask({1, 1, 0, 0}), mask({0, 0, 1, 1})), 0.0);
  EXPECT_EQ(dice(mask({1, 1, 0, 0}), mask({0, 1, 1, 1})), 0.4);
  EXPECT_EQ(dice(mask({0, 0, 0, 0}), mask({0, 0, 0, 0})), 1.0);
  EXPECT_EQ(dice(mask({1, 0, 1, 0}), mask({1, 1, 1, 0})), dice(mask({1, 1, 1, 0}), mask({1, 0, 1, 0})));
}

TEST(OutlierPipeline, PlantedInputRanksFirstAndAntiMonotoneDice) {
  std::vector<NamedMatrix> train;
  for (const auto& r : gaussian_rows(80, 4, 9)) {
    train.emplace_back("t" + std::to_string(train.size()), one_row_matrix({r[0], r[1], r[2], r[3]}));
  }
  std::vector<NamedMatrix> eval(train.begin(), train.begin() + 20);
  eval.emplace_back("planted", one_row_matrix({8, 8, -8, 8}));
  const auto plain = outlier_pipeline(train, eval, std::nullopt, {.num_trees = 100, .subsample_size = 256, .seed = 3, .jobs = 1});
  ASSERT_EQ(plain.scores.size(), 21U);
  EXPECT_TRUE(plain.rank_tests.empty());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_LT(plain.scores[i].anomaly_score, plain.scores[20].anomaly_score);

  DiceTable dice_table;
  for (const auto& s : plain.scores) dice_table[{s.input_id, s.label}] = 1.0 - s.anomaly_score;
  const auto with = outlier_pipeline(train, eval, dice_table, {.num_trees = 100, .subsample_size = 256, .seed = 3, .jobs = 2});
  ASSERT_EQ(with.rank_tests.size(), 2U);
  EXPECT_EQ(with.rank_tests[0].label, "liver");
  EXPECT_EQ(with.rank_tests[0].result.rho, -1.0);
  EXPECT_EQ(with.rank_tests[1].label, "average");
  EXPECT_EQ(with.scores[20].dice, (dice_table[{"planted", "liver"}]));
  for (std::size_t i = 0; i < 21; ++i) EXPECT_EQ(with.scores[i].anomaly_score, plain.scores[i].anomaly_score);

  const auto csv = rank_test_csv(with);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Label,p-value,Spearman Correlation");
  EXPECT_NE(csv.find("liver,0,-1\n"), std::string::npos);
  EXPECT_EQ(scores_csv(plain, false).substr(0, 28), "input_id,class,anomaly_score");
}

TEST(OutlierPipeline, LabelMismatchAndClassFailures) {
  std::vector<NamedMatrix> train{{"a", one_row_matrix({0.1, 0.9})}, {"b", one_row_matrix({0.2, 0.8})}};
  std::vector<NamedMatrix> eval{{"c", one_row_matrix({0.1, 0.9}, "kidney")}};
  try {
    outlier_pipeline(train, eval, std::nullopt, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::label_mismatch);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<NamedMatrix> hollow{{"a", one_row_matrix({nan, nan})}, {"b", one_row_matrix({nan, nan})}};
  const auto r = outlier_pipeline(hollow, hollow, std::nullopt, {});
  EXPECT_EQ(r.failures.size(), 1U);
}

TEST(OutlierPipeline, DiceCsvParsing) {
  const auto t = parse_dice_csv("input_id,class,dice\ncase1,liver,0.91\ncase2,\"liver\",0.5\n");
  EXPECT_EQ(t.size(), 2U);
  EXPECT_EQ((t.at({"case1", "liver"})), 0.91);
  EXPECT_THROW(parse_dice_csv("case1,liver\n"), Error);
  EXPECT_THROW(parse_dice_csv("case1,liver,abc\n"), Error);
}
