#include "voxagg/benchmark.hpp"

#include "voxagg/aggregate.hpp"

namespace voxagg {

std::vector<MethodConfig> default_method_suite() {
  std::vector<MethodConfig> suite;
  auto add = [&](std::string label, Method m) {
    AttributionParams p;
    p.method = m;
    suite.push_back({std::move(label), p});
  };
  add("KernelSHAP (cubes)", Method::kshap_cubes);
  add("KernelSHAP (semantic)", Method::kshap_semantic);
  add("Vanilla Gradient", Method::vg);
  add("Integrated Gradients", Method::ig);
  add("SmoothGrad", Method::sg);
  return suite;
}

BenchmarkConfig BenchmarkConfig::from_json(const nlohmann::json& j) {
  BenchmarkConfig c;
  try {
    if (j.contains("methods")) {
      for (const auto& m : j.at("methods")) {
        if (m.is_string()) {
          AttributionParams p;
          p.method = method_from_string(m.get<std::string>());
          c.methods.push_back({m.get<std::string>(), p});
        } else {
          auto p = AttributionParams::from_json(m);
          c.methods.push_back({m.value("label", std::string(to_string(p.method))), p});
        }
      }
    } else {
      c.methods = default_method_suite();
    }
    if (j.contains("classes")) c.classes = j.at("classes").get<std::vector<Index>>();
    c.dataset = j.value("dataset", c.dataset);
    c.faithfulness_rounds = j.value("faithfulness_rounds", c.faithfulness_rounds);
    c.subset_size = j.value("subset_size", c.subset_size);
    c.sensitivity_rounds = j.value("sensitivity_rounds", c.sensitivity_rounds);
    c.sensitivity_radius = j.value("sensitivity_radius", c.sensitivity_radius);
    c.complexity_theta = j.value("complexity_theta", c.complexity_theta);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad benchmark config: ") + e.what());
  }
  if (c.methods.empty()) throw Error(ErrorKind::config, "benchmark needs at least one method");
  if (c.faithfulness_rounds < 3 || c.sensitivity_rounds < 1 || !(c.sensitivity_radius > 0) ||
      !(c.complexity_theta >= 0 && c.complexity_theta < 1)) {
    throw Error(ErrorKind::config, "benchmark metric parameters out of range");
  }
  return c;
}

MetricReport run_benchmark(SegmentationModel& model,
                           const std::vector<std::pair<std::string, VolumeD>>& inputs,
                           const BenchmarkConfig& config, std::size_t first_input) {
  if (inputs.empty() || config.methods.empty()) {
    throw Error(ErrorKind::invalid_argument, "benchmark needs inputs and methods");
  }
  MetricReport report;
  report.dataset = config.dataset;
  const RngSpec root{config.seed, 0};

  for (std::size_t in = 0; in < inputs.size(); ++in) {
    const auto& [input_id, x] = inputs[in];
    const auto logits = model.forward(x);
    const auto masks = argmax_masks(logits);
    std::vector<Index> classes = config.classes;
    if (classes.empty()) {
      for (Index c = 0; c < logits.num_classes(); ++c) classes.push_back(c);
    }
    const Index m = config.subset_size > 0 ? std::min(config.subset_size, x.size()) : default_subset_size(x.size());

    for (Index c : classes) {
      if (c < 0 || c >= logits.num_classes()) {
        report.failures.push_back(input_id + "/class" + std::to_string(c) + ": class out of range");
        continue;
      }
      const auto& mask = masks[static_cast<std::size_t>(c)];
      if (mask.empty()) {
        report.failures.push_back(input_id + "/class" + std::to_string(c) + ": empty_mask");
        continue;
      }
      const RngSpec unit = root.child(first_input + in).child(static_cast<std::uint64_t>(c));
      for (const auto& method : config.methods) {
        try {
          AttributionParams params = method.params;
          params.rng = unit.child(1);
          MetricRecord rec;
          rec.method = method.label;
          rec.input_id = input_id;
          rec.class_id = c;
          rec.efficiency_s = efficiency(params, model, x, c, mask);
          const auto g = normalize(attribute(model, x, c, mask, params, &logits));
          const auto f = faithfulness(g, model, x, c, mask, config.faithfulness_rounds, m, unit.child(2));
          rec.faithfulness = f.value;
          rec.faithfulness_degenerate = f.degenerate;
          rec.sensitivity = sensitivity(params, model, x, c, mask, config.sensitivity_rounds,
                                        config.sensitivity_radius, unit.child(3));
          rec.complexity = complexity(g, config.complexity_theta);
          report.records.push_back(std::move(rec));
        } catch (const Error& e) {
          report.failures.push_back(input_id + "/class" + std::to_string(c) + "/" + method.label + ": " + e.what());
        }
      }
    }
  }
  report.summary = summarize(report.records, config.methods);
  return report;
}

std::vector<MethodSummary> summarize(const std::vector<MetricRecord>& records,
                                     const std::vector<MethodConfig>& methods) {
  std::vector<MethodSummary> out;
  for (const auto& method : methods) {
    std::vector<const MetricRecord*> rows;
    for (const auto& r : records) {
      if (r.method == method.label) rows.push_back(&r);
    }
    MethodSummary s;
    s.method = method.label;
    s.count = static_cast<Index>(rows.size());
    auto stats = [&](auto getter) {
      MeanStd ms;
      if (rows.empty()) return MeanStd{kUndefined, kUndefined};
      for (const auto* r : rows) ms.mean += getter(*r);
      ms.mean /= static_cast<double>(rows.size());
      for (const auto* r : rows) ms.std += (getter(*r) - ms.mean) * (getter(*r) - ms.mean);
      ms.std = std::sqrt(ms.std / static_cast<double>(rows.size()));
      return ms;
    };
    s.faithfulness = stats([](const MetricRecord& r) { return r.faithfulness; });
    s.sensitivity = stats([](const MetricRecord& r) { return r.sensitivity; });
    s.complexity = stats([](const MetricRecord& r) { return r.complexity; });
    s.efficiency_s = stats([](const MetricRecord& r) { return r.efficiency_s; });
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n ()") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string records_csv(const MetricReport& report) {
  std::string out = "method,input_id,class,faithfulness,sensitivity,complexity,efficiency_s\n";
  for (const auto& r : report.records) {
    out += quoted(r.method) + "," + quoted(r.input_id) + "," + std::to_string(r.class_id) + "," +
           format_double(r.faithfulness) + "," + format_double(r.sensitivity) + "," +
           format_double(r.complexity) + "," + format_double(r.efficiency_s) + "\n";
  }
  return out;
}

std::string summary_csv(const MetricReport& report) {
  std::string out =
      "dataset,method,faithfulness_mean,faithfulness_std,sensitivity_mean,sensitivity_std,"
      "complexity_mean,complexity_std,efficiency_s_mean,efficiency_s_std\n";
  for (const auto& s : report.summary) {
    out += quoted(report.dataset) + "," + quoted(s.method);
    for (const auto* ms : {&s.faithfulness, &s.sensitivity, &s.complexity, &s.efficiency_s}) {
      out += "," + format_double(ms->mean) + "," + format_double(ms->std);
    }
    out += "\n";
  }
  return out;
}

nlohmann::json summary_json(const MetricReport& report) {
  auto ms = [](const MeanStd& m) {
    return nlohmann::json{{"mean", std::isnan(m.mean) ? nlohmann::json(nullptr) : nlohmann::json(m.mean)},
                          {"std", std::isnan(m.std) ? nlohmann::json(nullptr) : nlohmann::json(m.std)}};
  };
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& s : report.summary) {
    methods.push_back({{"method", s.method},
                       {"count", s.count},
                       {"faithfulness", ms(s.faithfulness)},
                       {"sensitivity", ms(s.sensitivity)},
                       {"complexity", ms(s.complexity)},
                       {"efficiency_s", ms(s.efficiency_s)}});
  }
  return {{"dataset", report.dataset}, {"methods", std::move(methods)}, {"failures", report.failures}};
}

}  // namespace voxagg
