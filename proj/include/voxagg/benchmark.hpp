#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "voxagg/metrics.hpp"

namespace voxagg {

struct MethodConfig {
  std::string label;
  AttributionParams params;
};

/// The five method configurations of the reference benchmark.
std::vector<MethodConfig> default_method_suite();

struct BenchmarkConfig {
  std::vector<MethodConfig> methods;
  /// Explained classes; empty means every class.
  std::vector<Index> classes;
  std::string dataset = "synthetic";
  int faithfulness_rounds = 100;
  /// 0 selects default_subset_size(p).
  Index subset_size = 0;
  int sensitivity_rounds = 3;
  double sensitivity_radius = 0.1;
  double complexity_theta = 0.1;
  std::uint64_t seed = 0;

  static BenchmarkConfig from_json(const nlohmann::json& j);
};

struct MetricRecord {
  std::string method;
  std::string input_id;
  Index class_id = 0;
  double faithfulness = 0.0;
  bool faithfulness_degenerate = false;
  double sensitivity = 0.0;
  double complexity = 0.0;
  double efficiency_s = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct MethodSummary {
  std::string method;
  Index count = 0;
  MeanStd faithfulness;
  MeanStd sensitivity;
  MeanStd complexity;
  MeanStd efficiency_s;
};

struct MetricReport {
  std::string dataset;
  std::vector<MetricRecord> records;
  std::vector<MethodSummary> summary;
  /// Units that failed or were skipped, with the reason.
  std::vector<std::string> failures;
};

/// Scores every (input, class, method) unit. Randomness for a unit derives
/// from RngSpec{seed}.child(first_input + input index).child(class); a
/// failing unit is recorded and the run continues. `first_input` lets a
/// caller split the inputs across workers without changing any draw.
MetricReport run_benchmark(SegmentationModel& model,
                           const std::vector<std::pair<std::string, VolumeD>>& inputs,
                           const BenchmarkConfig& config, std::size_t first_input = 0);

/// Mean and population standard deviation per metric and method.
std::vector<MethodSummary> summarize(const std::vector<MetricRecord>& records,
                                     const std::vector<MethodConfig>& methods);

/// method,input_id,class,faithfulness,sensitivity,complexity,efficiency_s
std::string records_csv(const MetricReport& report);
/// One row per method with mean and std columns for the four metrics.
std::string summary_csv(const MetricReport& report);
nlohmann::json summary_json(const MetricReport& report);

}  // namespace voxagg
