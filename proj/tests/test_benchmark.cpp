#include <gtest/gtest.h>

#include "support.hpp"
#include "voxagg/benchmark.hpp"

using namespace voxagg;

namespace {

using Inputs = std::vector<std::pair<std::string, VolumeD>>;

Inputs synthetic_inputs(Dims d, int count) {
  Inputs in;
  for (int i = 0; i < count; ++i) in.emplace_back("vol" + std::to_string(i), make_synthetic_volume(d, 10 + i));
  return in;
}

BenchmarkConfig quick_config() {
  BenchmarkConfig c;
  c.methods = default_method_suite();
  for (auto& m : c.methods) {
    m.params.kshap_samples = 64;
    m.params.sg_samples = 8;
    m.params.ig_steps = 8;
  }
  c.faithfulness_rounds = 10;
  c.sensitivity_rounds = 2;
  c.seed = 5;
  return c;
}

std::vector<std::string> without_last_column(const std::string& csv) {
  std::vector<std::string> lines;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) lines.push_back(line.substr(0, line.rfind(',')));
  return lines;
}

}  // namespace

TEST(Benchmark, OneRecordPerUnit) {
  const Dims d{6, 6, 4};
  auto model = test::smooth_model(d, 3, 1);
  const auto report = run_benchmark(model, synthetic_inputs(d, 2), quick_config());
  EXPECT_EQ(report.records.size() + report.failures.size(), 2U * 3U * 5U);
  ASSERT_EQ(report.summary.size(), 5U);
  EXPECT_EQ(report.summary[2].method, "Vanilla Gradient");
  for (const auto& r : report.records) {
    EXPECT_GE(r.faithfulness, -1.0);
    EXPECT_LE(r.faithfulness, 1.0);
    EXPECT_GE(r.sensitivity, 0.0);
    EXPECT_GE(r.complexity, 0.0);
    EXPECT_LE(r.complexity, 1.0);
    EXPECT_GT(r.efficiency_s, 0.0);
  }
}

TEST(Benchmark, DeterministicApartFromTiming) {
  const Dims d{6, 6, 4};
  auto model = test::smooth_model(d, 3, 1);
  const auto inputs = synthetic_inputs(d, 2);
  const auto a = run_benchmark(model, inputs, quick_config());
  const auto b = run_benchmark(model, inputs, quick_config());
  EXPECT_EQ(without_last_column(records_csv(a)), without_last_column(records_csv(b)));
}

TEST(Benchmark, SplitAcrossWorkersMatchesSingleRun) {
  const Dims d{6, 6, 4};
  auto model = test::smooth_model(d, 3, 1);
  const auto inputs = synthetic_inputs(d, 2);
  const auto whole = run_benchmark(model, inputs, quick_config());
  const auto second = run_benchmark(model, {inputs[1]}, quick_config(), 1);
  std::size_t offset = 0;
  while (offset < whole.records.size() && whole.records[offset].input_id != "vol1") ++offset;
  ASSERT_EQ(whole.records.size() - offset, second.records.size());
  for (std::size_t i = 0; i < second.records.size(); ++i) {
    EXPECT_EQ(whole.records[offset + i].faithfulness, second.records[i].faithfulness);
    EXPECT_EQ(whole.records[offset + i].sensitivity, second.records[i].sensitivity);
  }
}

TEST(Benchmark, CsvLayout) {
  const Dims d{4, 4, 2};
  auto model = test::smooth_model(d, 2, 1);
  auto config = quick_config();
  config.methods.resize(1);
  config.classes = {0};
  config.dataset = "toy";
  const auto report = run_benchmark(model, synthetic_inputs(d, 1), config);
  const auto records = records_csv(report);
  EXPECT_EQ(records.substr(0, records.find('\n')), "method,input_id,class,faithfulness,sensitivity,complexity,efficiency_s");
  EXPECT_EQ(records.find("\"KernelSHAP (cubes)\",vol0,0,"), records.find('\n') + 1);
  const auto summary = summary_csv(report);
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "dataset,method,faithfulness_mean,faithfulness_std,sensitivity_mean,sensitivity_std,"
            "complexity_mean,complexity_std,efficiency_s_mean,efficiency_s_std");
  EXPECT_NE(summary.find("toy,\"KernelSHAP (cubes)\","), std::string::npos);
  const auto j = summary_json(report);
  EXPECT_EQ(j["methods"][0]["count"], 1);
  EXPECT_EQ(j["methods"][0]["faithfulness"]["std"], 0.0);
}

TEST(Benchmark, SummaryStatistics) {
  std::vector<MetricRecord> rows(2);
  rows[0].method = rows[1].method = "m";
  rows[0].faithfulness = 0.2;
  rows[1].faithfulness = 0.6;
  rows[0].complexity = rows[1].complexity = 0.5;
  const auto s = summarize(rows, {{"m", {}}, {"absent", {}}});
  EXPECT_NEAR(s[0].faithfulness.mean, 0.4, 1e-15);
  EXPECT_NEAR(s[0].faithfulness.std, 0.2, 1e-15);
  EXPECT_EQ(s[0].complexity.mean, 0.5);
  EXPECT_EQ(s[0].complexity.std, 0.0);
  EXPECT_EQ(s[1].count, 0);
  EXPECT_TRUE(std::isnan(s[1].sensitivity.mean));
}

TEST(Benchmark, BadClassIsReportedNotFatal) {
  const Dims d{4, 4, 2};
  auto model = test::smooth_model(d, 2, 1);
  auto config = quick_config();
  config.methods.resize(1);
  config.classes = {7};
  const auto report = run_benchmark(model, synthetic_inputs(d, 1), config);
  EXPECT_TRUE(report.records.empty());
  ASSERT_EQ(report.failures.size(), 1U);
}

TEST(BenchmarkConfig, Parsing) {
  const auto c = BenchmarkConfig::from_json(nlohmann::json::parse(
      R"({"methods": ["vg", {"method": "sg", "sg_samples": 4, "label": "SG small"}],
          "classes": [1], "faithfulness_rounds": 20, "seed": 9})"));
  ASSERT_EQ(c.methods.size(), 2U);
  EXPECT_EQ(c.methods[0].params.method, Method::vg);
  EXPECT_EQ(c.methods[1].label, "SG small");
  EXPECT_EQ(c.methods[1].params.sg_samples, 4);
  EXPECT_EQ(c.classes, std::vector<Index>{1});
  EXPECT_EQ(c.seed, 9U);
  EXPECT_EQ(BenchmarkConfig::from_json(nlohmann::json::object()).methods.size(), 5U);
  EXPECT_THROW(BenchmarkConfig::from_json({{"faithfulness_rounds", 2}}), Error);
  EXPECT_THROW(BenchmarkConfig::from_json({{"methods", {"nope"}}}), Error);
  EXPECT_THROW(BenchmarkConfig::from_json({{"methods", nlohmann::json::array()}}), Error);
}
