#include "voxagg/outlier_pipeline.hpp"

#include <future>
#include <sstream>

#include "voxagg/rng.hpp"

namespace voxagg {

namespace {

void require_labels(const NamedMatrix& ref, const NamedMatrix& other) {
  if (other.second.rows != ref.second.rows || other.second.cols != ref.second.cols) {
    throw Error(ErrorKind::label_mismatch,
                "explanation matrix '" + other.first + "' has labels differing from '" + ref.first + "'");
  }
}

struct ClassResult {
  std::vector<double> scores;
  Index excluded = 0;
  std::optional<std::string> failure;
};

ClassResult run_class(const std::vector<NamedMatrix>& train, const std::vector<NamedMatrix>& eval, Index a,
                      const OutlierOptions& options) {
  ClassResult out;
  try {
    std::vector<Eigen::VectorXd> rows;
    for (const auto& [id, m] : train) rows.push_back(m.values.row(a).transpose());
    IsolationForest::Options fo;
    fo.num_trees = options.num_trees;
    fo.subsample_size = options.subsample_size;
    fo.seed = RngSpec{options.seed, 0}.child(static_cast<std::uint64_t>(a)).engine()();
    const auto forest = IsolationForest::train(rows, fo);
    out.excluded = forest.excluded_rows();
    for (const auto& [id, m] : eval) out.scores.push_back(forest.score(m.values.row(a).transpose()));
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

OutlierReport outlier_pipeline(const std::vector<NamedMatrix>& train, const std::vector<NamedMatrix>& eval,
                               const std::optional<DiceTable>& dice_scores, const OutlierOptions& options) {
  if (train.empty() || eval.empty()) throw Error(ErrorKind::invalid_argument, "outlier pipeline needs train and eval matrices");
  for (const auto& m : train) require_labels(train.front(), m);
  for (const auto& m : eval) require_labels(train.front(), m);

  const auto& labels = train.front().second.rows;
  const auto num_classes = static_cast<Index>(labels.size());
  std::vector<ClassResult> results(static_cast<std::size_t>(num_classes));
  const int jobs = std::max(1, options.jobs);
  for (Index start = 0; start < num_classes; start += jobs) {
    std::vector<std::future<ClassResult>> batch;
    for (Index a = start; a < std::min<Index>(num_classes, start + jobs); ++a) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&, a] { return run_class(train, eval, a, options); }));
    }
    for (Index k = 0; k < static_cast<Index>(batch.size()); ++k) {
      results[static_cast<std::size_t>(start + k)] = batch[static_cast<std::size_t>(k)].get();
    }
  }

  OutlierReport report;
  const auto lookup = [&](const std::string& id, const std::string& label) -> std::optional<double> {
    if (!dice_scores) return std::nullopt;
    auto it = dice_scores->find({id, label});
    if (it == dice_scores->end()) return std::nullopt;
    return it->second;
  };

  std::vector<double> score_sum(eval.size(), 0.0);
  std::vector<double> dice_sum(eval.size(), 0.0);
  std::vector<Index> score_count(eval.size(), 0);
  std::vector<Index> dice_count(eval.size(), 0);

  for (Index a = 0; a < num_classes; ++a) {
    const auto& res = results[static_cast<std::size_t>(a)];
    const auto& label = labels[static_cast<std::size_t>(a)];
    report.excluded_training_rows += res.excluded;
    if (res.failure) {
      report.failures.push_back(label + ": " + *res.failure);
      continue;
    }
    std::vector<double> s;
    std::vector<double> d;
    for (std::size_t k = 0; k < eval.size(); ++k) {
      ScoreRow row{eval[k].first, label, res.scores[k], lookup(eval[k].first, label)};
      score_sum[k] += row.anomaly_score;
      ++score_count[k];
      if (row.dice) {
        s.push_back(row.anomaly_score);
        d.push_back(*row.dice);
        dice_sum[k] += *row.dice;
        ++dice_count[k];
      }
      report.scores.push_back(std::move(row));
    }
    if (dice_scores) {
      try {
        report.rank_tests.push_back({label, spearman_test(s, d)});
      } catch (const Error& e) {
        report.failures.push_back(label + ": rank test: " + e.what());
      }
    }
  }

  if (dice_scores) {
    std::vector<double> s;
    std::vector<double> d;
    for (std::size_t k = 0; k < eval.size(); ++k) {
      if (score_count[k] == 0 || dice_count[k] == 0) continue;
      s.push_back(score_sum[k] / static_cast<double>(score_count[k]));
      d.push_back(dice_sum[k] / static_cast<double>(dice_count[k]));
    }
    try {
      report.rank_tests.push_back({"average", spearman_test(s, d)});
    } catch (const Error& e) {
      report.failures.push_back(std::string("average: rank test: ") + e.what());
    }
  }
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string scores_csv(const OutlierReport& report, bool with_dice) {
  std::string out = with_dice ? "input_id,class,anomaly_score,dice\n" : "input_id,class,anomaly_score\n";
  for (const auto& r : report.scores) {
    out += csv_field(r.input_id) + "," + csv_field(r.label) + "," + format_double(r.anomaly_score);
    if (with_dice) out += "," + (r.dice ? format_double(*r.dice) : std::string());
    out += "\n";
  }
  return out;
}

std::string rank_test_csv(const OutlierReport& report) {
  std::string out = "Label,p-value,Spearman Correlation\n";
  for (const auto& r : report.rank_tests) {
    out += csv_field(r.label) + "," + cell(r.result.p_value) + "," + cell(r.result.rho) + "\n";
  }
  return out;
}

DiceTable parse_dice_csv(const std::string& text) {
  DiceTable table;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (header) {
      header = false;
      if (fields.size() >= 3 && fields[0] == "input_id") continue;
    }
    if (fields.size() != 3) throw Error(ErrorKind::config, "dice file line " + std::to_string(line_no) + ": expected 3 fields");
    try {
      std::size_t used = 0;
      const double v = std::stod(fields[2], &used);
      if (used != fields[2].size() || !std::isfinite(v)) throw std::invalid_argument("trailing");
      table[{fields[0], fields[1]}] = v;
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::config, "dice file line " + std::to_string(line_no) + ": bad value '" + fields[2] + "'");
    }
  }
  return table;
}

}  // namespace voxagg
