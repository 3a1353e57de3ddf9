#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "voxagg/aggregate.hpp"
#include "voxagg/isolation_forest.hpp"
#include "voxagg/rank_test.hpp"

namespace voxagg {

using NamedMatrix = std::pair<std::string, ExplanationMatrix>;
/// Dice keyed by (input_id, class label).
using DiceTable = std::map<std::pair<std::string, std::string>, double>;

struct OutlierOptions {
  int num_trees = 100;
  Index subsample_size = 256;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct ScoreRow {
  std::string input_id;
  std::string label;
  double anomaly_score = 0.0;
  std::optional<double> dice;
};

struct RankRow {
  std::string label;
  RankTestResult result;
};

struct OutlierReport {
  std::vector<ScoreRow> scores;
  /// Per class, then one "average" row over per-input mean scores and Dice.
  std::vector<RankRow> rank_tests;
  std::vector<std::string> failures;
  Index excluded_training_rows = 0;
};

/// One forest per class row, trained on that row across `train` and applied
/// to the same row across `eval`. The forest for row a is seeded with
/// RngSpec{seed}.child(a). All matrices must share row and column labels.
OutlierReport outlier_pipeline(const std::vector<NamedMatrix>& train, const std::vector<NamedMatrix>& eval,
                               const std::optional<DiceTable>& dice_scores, const OutlierOptions& options);

/// input_id,class,anomaly_score[,dice]
std::string scores_csv(const OutlierReport& report, bool with_dice);
/// Label,p-value,Spearman Correlation
std::string rank_test_csv(const OutlierReport& report);

/// Reads input_id,class,dice rows.
DiceTable parse_dice_csv(const std::string& text);

}  // namespace voxagg
