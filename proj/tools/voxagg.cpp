// voxagg: batch driver for attribution, aggregation, benchmarking and
// outlier mining on 3D segmentation models.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "voxagg/aggregate.hpp"
#include "voxagg/attribution.hpp"
#include "voxagg/benchmark.hpp"
#include "voxagg/container.hpp"
#include "voxagg/model_factory.hpp"
#include "voxagg/outlier_pipeline.hpp"
#include "voxagg/synthetic_model.hpp"
#include "voxagg/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voxagg;

namespace {

// Stream keys of the root seed, one per command.
constexpr std::uint64_t kAttributeStream = 1;
constexpr std::uint64_t kBenchmarkStream = 2;
constexpr std::uint64_t kOutlierStream = 3;
constexpr std::uint64_t kInputStream = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_argument:
    case ErrorKind::io:
      return 1;
    case ErrorKind::transport:
    case ErrorKind::protocol:
    case ErrorKind::no_gradient:
      return 2;
    default:
      return 3;
  }
}

void report_error(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, "config '" + path + "' is not valid JSON: " + e.what());
  }
}

std::vector<Index> parse_classes(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::config, "bad class id '" + item + "' in --classes");
    }
  }
  return out;
}

/// Options shared by the model-driven commands; flags override the config.
struct RunOptions {
  json config = json::object();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method;
  std::string classes;
  std::vector<std::string> inputs;
  std::string endpoint;
  int jobs = 1;

  void resolve() {
    config = load_config(config_path);
    if (seed) config["seed"] = *seed;
    if (!out.empty()) config["out"] = out;
    if (!classes.empty()) config["classes"] = parse_classes(classes);
    if (!inputs.empty()) config["inputs"] = inputs;
    if (!endpoint.empty()) config["model"] = json{{"type", "remote"}, {"endpoint", endpoint}};
    if (!config.contains("model")) config["model"] = json::object();
    if (jobs < 1) throw Error(ErrorKind::config, "--jobs must be >= 1");
    if (!config.contains("out")) throw Error(ErrorKind::config, "no output directory (--out)");
  }

  std::uint64_t root_seed() const { return config.value("seed", std::uint64_t{0}); }
  fs::path out_dir() const { return config.at("out").get<std::string>(); }
};

void add_run_flags(CLI::App* cmd, RunOptions& o, bool with_method) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--out", o.out, "Output directory");
  if (with_method) cmd->add_option("--method", o.method, "vg | sg | ig | kshap_cubes | kshap_semantic");
  cmd->add_option("--classes", o.classes, "Comma-separated class ids");
  cmd->add_option("--input", o.inputs, "Input volume container (repeatable)");
  cmd->add_option("--endpoint", o.endpoint, "Remote model: tcp:HOST:PORT or exec:COMMAND");
  cmd->add_option("--jobs", o.jobs, "Worker count");
}

using Inputs = std::vector<std::pair<std::string, VolumeD>>;

Inputs load_inputs(const json& config, const ModelInfo& info) {
  Inputs out;
  const json spec = config.value("inputs", json{{"synthetic", {{"count", 2}}}});
  if (spec.is_array()) {
    std::optional<std::pair<double, double>> window;
    if (config.contains("intensity_window")) {
      const auto w = config.at("intensity_window").get<std::vector<double>>();
      if (w.size() != 2) throw Error(ErrorKind::config, "intensity_window needs [lo, hi]");
      window = std::make_pair(w[0], w[1]);
    }
    for (const auto& p : spec) {
      const fs::path path = p.get<std::string>();
      if (!fs::exists(path)) throw Error(ErrorKind::io, "input '" + path.string() + "' does not exist");
      VolumeD v = read_volume(path);
      if (window) v = preprocess(v, window->first, window->second);
      out.emplace_back(path.stem().string(), std::move(v));
    }
  } else if (spec.contains("synthetic")) {
    const auto& syn = spec.at("synthetic");
    const int count = syn.value("count", 2);
    if (count < 1) throw Error(ErrorKind::config, "synthetic input count must be >= 1");
    const RngSpec root{syn.value("seed", config.value("seed", std::uint64_t{0})), kInputStream};
    for (int i = 0; i < count; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "synthetic_%03d", i);
      out.emplace_back(id, make_synthetic_volume(info.input_dims, root.child(static_cast<std::uint64_t>(i)).engine()()));
    }
  } else {
    throw Error(ErrorKind::config, "inputs must be a list of files or {\"synthetic\": {...}}");
  }
  for (const auto& [id, v] : out) {
    if (v.dims() != info.input_dims) {
      throw Error(ErrorKind::dim_mismatch,
                  "input '" + id + "' is " + to_string(v.dims()) + " but the model expects " + to_string(info.input_dims));
    }
  }
  return out;
}

/// Runs fn(model, unit) for unit in [0, n) on `jobs` threads, each with its
/// own model instance. The first error is rethrown after all workers stop.
template <typename Fn>
void parallel_units(std::vector<std::unique_ptr<SegmentationModel>>& models, std::size_t n, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&](SegmentationModel& model) {
    for (std::size_t u = next++; u < n; u = next++) {
      try {
        fn(model, u);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < models.size(); ++w) threads.emplace_back(worker, std::ref(*models[w]));
  worker(*models[0]);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<std::unique_ptr<SegmentationModel>> make_models(const json& spec, int jobs) {
  std::vector<std::unique_ptr<SegmentationModel>> models;
  for (int w = 0; w < jobs; ++w) models.push_back(make_model(spec));
  return models;
}

std::string class_name(Index c) { return "class" + std::to_string(c); }

std::vector<std::string> class_names(Index l) {
  std::vector<std::string> out;
  for (Index c = 0; c < l; ++c) out.push_back(class_name(c));
  return out;
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- attribute

int cmd_attribute(RunOptions& o) {
  o.resolve();
  auto& cfg = o.config;
  AttributionParams params = cfg.contains("params") ? AttributionParams::from_json(cfg.at("params")) : AttributionParams{};
  if (cfg.contains("method")) params.method = method_from_string(cfg.at("method").get<std::string>());
  if (!o.method.empty()) params.method = method_from_string(o.method);

  auto models = make_models(cfg.at("model"), o.jobs);
  const ModelInfo info = models[0]->info();
  const Inputs inputs = load_inputs(cfg, info);
  std::vector<Index> classes = cfg.value("classes", std::vector<Index>{});
  if (classes.empty()) {
    for (Index c = 0; c < info.num_classes; ++c) classes.push_back(c);
  }
  for (Index c : classes) {
    if (c >= info.num_classes) throw Error(ErrorKind::config, "class " + std::to_string(c) + " out of range");
  }

  const fs::path out = o.out_dir();
  fs::create_directories(out);
  const RngSpec root = RngSpec{o.root_seed(), 0}.child(kAttributeStream);

  std::vector<LogitFieldD> logits(inputs.size(), LogitFieldD(Dims{1, 1, 1}, 2));
  std::vector<std::vector<ClassMask>> masks(inputs.size());
  parallel_units(models, inputs.size(), [&](SegmentationModel& model, std::size_t i) {
    logits[i] = model.forward(inputs[i].second);
    masks[i] = argmax_masks(logits[i]);
    fs::create_directories(out / inputs[i].first);
    for (Index c = 0; c < info.num_classes; ++c) {
      write_container(Container{masks[i][static_cast<std::size_t>(c)], json{{"class_id", c}, {"input_id", inputs[i].first}}},
                      out / inputs[i].first / (class_name(c) + ".mask"));
    }
  });

  struct Unit {
    std::size_t input;
    Index class_id;
    std::optional<std::string> skip;
    double seconds = 0.0;
  };
  std::vector<Unit> units;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Index c : classes) units.push_back({i, c, std::nullopt});
  }

  const auto run_start = std::chrono::steady_clock::now();
  parallel_units(models, units.size(), [&](SegmentationModel& model, std::size_t u) {
    auto& unit = units[u];
    const auto& mask = masks[unit.input][static_cast<std::size_t>(unit.class_id)];
    if (mask.empty()) {
      unit.skip = "empty_mask";
      return;
    }
    AttributionParams p = params;
    p.rng = root.child(unit.input).child(static_cast<std::uint64_t>(unit.class_id));
    const auto start = std::chrono::steady_clock::now();
    const auto field = attribute(model, inputs[unit.input].second, unit.class_id, mask, p, &logits[unit.input]);
    unit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& id = inputs[unit.input].first;
    write_volume(field.values, out / id / (class_name(unit.class_id) + ".attr"),
                 json{{"input_id", id}, {"class_id", unit.class_id}, {"method", to_string(field.method)}, {"params", field.params}});
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();

  json manifest_inputs = json::array();
  json timing_units = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    json attributions = json::array();
    json skipped = json::array();
    json mask_files = json::array();
    for (Index c = 0; c < info.num_classes; ++c) {
      mask_files.push_back({{"class_id", c}, {"file", inputs[i].first + "/" + class_name(c) + ".mask"}});
    }
    for (const auto& unit : units) {
      if (unit.input != i) continue;
      if (unit.skip) {
        skipped.push_back({{"class_id", unit.class_id}, {"reason", *unit.skip}});
      } else {
        attributions.push_back({{"class_id", unit.class_id}, {"file", inputs[i].first + "/" + class_name(unit.class_id) + ".attr"}});
        timing_units.push_back({{"input_id", inputs[i].first}, {"class_id", unit.class_id}, {"seconds", unit.seconds}});
      }
    }
    manifest_inputs.push_back({{"input_id", inputs[i].first},
                               {"dims", {inputs[i].second.dims().width, inputs[i].second.dims().height, inputs[i].second.dims().depth}},
                               {"attributions", std::move(attributions)},
                               {"masks", std::move(mask_files)},
                               {"skipped", std::move(skipped)}});
  }
  AttributionParams recorded = params;
  recorded.rng = root;
  write_json(out / "manifest.json", {{"command", "attribute"},
                                     {"seed", o.root_seed()},
                                     {"method", to_string(params.method)},
                                     {"params", recorded.to_json()},
                                     {"model", cfg.at("model")},
                                     {"num_classes", info.num_classes},
                                     {"class_names", class_names(info.num_classes)},
                                     {"inputs", std::move(manifest_inputs)},
                                     {"timings", "timings.json"}});
  write_json(out / "timings.json", {{"total_seconds", total}, {"units", std::move(timing_units)}});
  return 0;
}

// ---------------------------------------------------------------- aggregate

struct AggregateOptions {
  std::string config_path;
  std::string attr_dir;
  std::string out;
  std::vector<std::string> rois;
  std::string sign = "absolute";
  bool graph = false;
  Index k = 3;
};

/// NAME=PATH; PATH is one mask for every input or a directory holding
/// <input_id>.mask files.
std::pair<std::string, fs::path> parse_roi(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw Error(ErrorKind::config, "--roi expects NAME=PATH, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

int cmd_aggregate(AggregateOptions& o) {
  json cfg = load_config(o.config_path);
  if (!o.attr_dir.empty()) cfg["input"] = o.attr_dir;
  if (!o.out.empty()) cfg["out"] = o.out;
  if (!o.rois.empty()) {
    json rois = json::object();
    for (const auto& r : o.rois) {
      auto [name, path] = parse_roi(r);
      rois[name] = path.string();
    }
    cfg["rois"] = rois;
  }
  if (o.sign != "absolute" || !cfg.contains("sign_mode")) cfg["sign_mode"] = o.sign;
  if (o.graph) cfg["graph"] = true;
  if (o.k != 3 || !cfg.contains("k")) cfg["k"] = o.k;
  if (!cfg.contains("input") || !cfg.contains("out")) throw Error(ErrorKind::config, "aggregate needs an input directory and --out");
  if (cfg.at("k").get<Index>() < 1) throw Error(ErrorKind::config, "--k must be >= 1");

  const fs::path in = cfg.at("input").get<std::string>();
  const fs::path out = cfg.at("out").get<std::string>();
  const SignMode mode = sign_mode_from_string(cfg.at("sign_mode").get<std::string>());
  if (!fs::exists(in / "manifest.json")) throw Error(ErrorKind::io, "no manifest.json in '" + in.string() + "'");
  json manifest;
  try {
    manifest = json::parse(std::ifstream(in / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::bad_header, std::string("malformed manifest: ") + e.what());
  }
  const auto names = manifest.at("class_names").get<std::vector<std::string>>();
  std::map<std::string, std::string> groups;
  for (const auto& n : names) groups[n] = "predicted";

  fs::create_directories(out / "local");
  std::vector<ExplanationMatrix> locals;
  for (const auto& entry : manifest.at("inputs")) {
    const auto id = entry.at("input_id").get<std::string>();
    RoISet rois;
    for (const auto& m : entry.at("masks")) {
      const auto c = m.at("class_id").get<Index>();
      rois.add(names.at(static_cast<std::size_t>(c)), read_mask(in / m.at("file").get<std::string>()), RoISource::predicted);
    }
    if (cfg.contains("rois")) {
      for (const auto& [name, path_json] : cfg.at("rois").items()) {
        fs::path path = path_json.get<std::string>();
        if (fs::is_directory(path)) path /= id + ".mask";
        if (!fs::exists(path)) throw Error(ErrorKind::io, "RoI mask '" + path.string() + "' does not exist");
        rois.add(name, read_mask(path), RoISource::external);
        groups[name] = "external";
      }
    }
    std::vector<AttributionField> fields;
    for (const auto& a : entry.at("attributions")) {
      const auto file = read_container(in / a.at("file").get<std::string>());
      const auto* v = std::get_if<VolumeF>(&file.payload);
      if (!v) throw Error(ErrorKind::bad_header, "attribution file is not a volume");
      AttributionField f;
      f.values = v->cast<double>();
      f.class_id = a.at("class_id").get<Index>();
      f.method = method_from_string(file.meta.at("method").get<std::string>());
      fields.push_back(std::move(f));
    }
    auto local = local_matrix(fields, rois, mode, names);
    write_text_atomic(out / "local" / (id + ".csv"), to_csv(local));
    write_json(out / "local" / (id + ".json"), to_json(local));
    locals.push_back(std::move(local));
  }
  if (locals.empty()) throw Error(ErrorKind::invalid_argument, "manifest lists no inputs");
  const auto global = global_matrix(locals);
  write_text_atomic(out / "global.csv", to_csv(global));
  write_json(out / "global.json", to_json(global));
  if (cfg.value("graph", false)) {
    const auto g = topk_graph(global, cfg.at("k").get<Index>(), groups);
    write_text_atomic(out / "graph.dot", to_dot(g));
    write_json(out / "graph.json", to_json(g));
  }
  return 0;
}

// ---------------------------------------------------------------- benchmark

int cmd_benchmark(RunOptions& o) {
  o.resolve();
  auto& cfg = o.config;
  BenchmarkConfig bc = BenchmarkConfig::from_json(cfg);
  if (!o.method.empty()) {
    AttributionParams p;
    p.method = method_from_string(o.method);
    bc.methods = {{o.method, p}};
  }
  bc.seed = RngSpec{o.root_seed(), 0}.child(kBenchmarkStream).engine()();

  auto models = make_models(cfg.at("model"), o.jobs);
  const Inputs inputs = load_inputs(cfg, models[0]->info());
  std::vector<MetricReport> parts(inputs.size());
  parallel_units(models, inputs.size(), [&](SegmentationModel& model, std::size_t i) {
    parts[i] = run_benchmark(model, {inputs[i]}, bc, i);
  });
  MetricReport report;
  report.dataset = bc.dataset;
  for (auto& p : parts) {
    report.records.insert(report.records.end(), p.records.begin(), p.records.end());
    report.failures.insert(report.failures.end(), p.failures.begin(), p.failures.end());
  }
  report.summary = summarize(report.records, bc.methods);

  const fs::path out = o.out_dir();
  fs::create_directories(out);
  write_text_atomic(out / "records.csv", records_csv(report));
  write_text_atomic(out / "summary.csv", summary_csv(report));
  write_json(out / "summary.json", summary_json(report));
  return 0;
}

// ---------------------------------------------------------------- outliers

struct OutlierCliOptions {
  std::string config_path;
  std::string train_dir;
  std::string eval_dir;
  std::string dice_file;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

std::vector<NamedMatrix> load_matrices(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedMatrix> out;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(std::ifstream(f));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::bad_header, "'" + f.string() + "' is not valid JSON");
    }
    out.emplace_back(f.stem().string(), matrix_from_json(j));
  }
  if (out.empty()) throw Error(ErrorKind::io, "no explanation matrices in '" + dir.string() + "'");
  return out;
}

int cmd_outliers(OutlierCliOptions& o) {
  json cfg = load_config(o.config_path);
  if (!o.train_dir.empty()) cfg["train"] = o.train_dir;
  if (!o.eval_dir.empty()) cfg["eval"] = o.eval_dir;
  if (!o.dice_file.empty()) cfg["dice"] = o.dice_file;
  if (!o.out.empty()) cfg["out"] = o.out;
  if (o.seed) cfg["seed"] = *o.seed;
  if (!cfg.contains("train") || !cfg.contains("eval") || !cfg.contains("out")) {
    throw Error(ErrorKind::config, "outliers needs --train, --eval and --out");
  }
  if (o.jobs < 1) throw Error(ErrorKind::config, "--jobs must be >= 1");

  OutlierOptions opt;
  opt.num_trees = cfg.value("num_trees", opt.num_trees);
  opt.subsample_size = cfg.value("subsample_size", opt.subsample_size);
  opt.seed = RngSpec{cfg.value("seed", std::uint64_t{0}), 0}.child(kOutlierStream).engine()();
  opt.jobs = o.jobs;

  const auto train = load_matrices(cfg.at("train").get<std::string>());
  const auto eval = load_matrices(cfg.at("eval").get<std::string>());
  std::optional<DiceTable> dice;
  if (cfg.contains("dice")) {
    const fs::path p = cfg.at("dice").get<std::string>();
    if (!fs::exists(p)) throw Error(ErrorKind::io, "dice file '" + p.string() + "' does not exist");
    const auto bytes = read_file(p);
    dice = parse_dice_csv(std::string(bytes.begin(), bytes.end()));
  }
  const auto report = outlier_pipeline(train, eval, dice, opt);

  const fs::path out = cfg.at("out").get<std::string>();
  fs::create_directories(out);
  write_text_atomic(out / "scores.csv", scores_csv(report, dice.has_value()));
  if (dice) write_text_atomic(out / "rank_tests.csv", rank_test_csv(report));
  for (const auto& f : report.failures) report_error("class_failure", f);
  return 0;
}

// ---------------------------------------------------------------- probe / serve

int cmd_probe(const std::string& endpoint) {
  auto stream = wire::connect(endpoint);
  const auto info = wire::handshake(*stream);
  std::cout << wire::info_to_json(info).dump() << "\n";
  return 0;
}

int cmd_serve(const std::string& config_path, bool stdio, std::uint16_t port) {
  json cfg = load_config(config_path);
  auto model = make_model(cfg.value("model", cfg));
  if (stdio) {
    wire::FdStream stream(0, 1);
    wire::serve(*model, stream);
    return 0;
  }
  wire::TcpListener listener(port);
  std::cout << listener.port() << std::endl;
  for (;;) {
    try {
      auto stream = listener.accept();
      wire::serve(*model, *stream);
    } catch (const Error& e) {
      report_error(to_string(e.kind()), e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel attribution, aggregation and evaluation toolkit"};
  app.require_subcommand(1);

  RunOptions attr_opts;
  auto* attr = app.add_subcommand("attribute", "Per-voxel attributions for every (input, class)");
  add_run_flags(attr, attr_opts, true);

  AggregateOptions agg_opts;
  auto* agg = app.add_subcommand("aggregate", "RoI-importance matrices and graphs");
  agg->add_option("--config", agg_opts.config_path, "JSON configuration");
  agg->add_option("input", agg_opts.attr_dir, "Directory written by 'attribute'");
  agg->add_option("--out", agg_opts.out, "Output directory");
  agg->add_option("--roi", agg_opts.rois, "External RoI NAME=PATH (repeatable)");
  agg->add_option("--sign", agg_opts.sign, "absolute | positive_only | negative_only");
  agg->add_flag("--graph", agg_opts.graph, "Write the top-k importance graph");
  agg->add_option("--k", agg_opts.k, "In-edges kept per node");

  RunOptions bench_opts;
  auto* bench = app.add_subcommand("benchmark", "Faithfulness, sensitivity, complexity and efficiency");
  add_run_flags(bench, bench_opts, true);

  OutlierCliOptions out_opts;
  auto* outl = app.add_subcommand("outliers", "Isolation-forest scoring of explanation matrices");
  outl->add_option("--config", out_opts.config_path, "JSON configuration");
  outl->add_option("--train", out_opts.train_dir, "Directory of training matrices (JSON)");
  outl->add_option("--eval", out_opts.eval_dir, "Directory of evaluation matrices (JSON)");
  outl->add_option("--dice", out_opts.dice_file, "CSV of input_id,class,dice");
  outl->add_option("--out", out_opts.out, "Output directory");
  outl->add_option("--seed", out_opts.seed, "Root seed");
  outl->add_option("--jobs", out_opts.jobs, "Worker count");

  std::string probe_endpoint;
  auto* probe = app.add_subcommand("probe", "HELLO handshake against a model server");
  probe->add_option("endpoint", probe_endpoint, "tcp:HOST:PORT or exec:COMMAND")->required();

  std::string serve_config;
  bool serve_stdio = false;
  std::uint16_t serve_port = 0;
  auto* serve = app.add_subcommand("serve", "Serve a synthetic model over the wire protocol");
  serve->add_option("--config", serve_config, "Model spec JSON");
  serve->add_flag("--stdio", serve_stdio, "Speak on stdin/stdout");
  serve->add_option("--port", serve_port, "TCP port on 127.0.0.1 (0 picks one and prints it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("config", e.what());
    return 1;
  }

  try {
    if (*attr) return cmd_attribute(attr_opts);
    if (*agg) return cmd_aggregate(agg_opts);
    if (*bench) return cmd_benchmark(bench_opts);
    if (*outl) return cmd_outliers(out_opts);
    if (*probe) return cmd_probe(probe_endpoint);
    if (*serve) return cmd_serve(serve_config, serve_stdio, serve_port);
  } catch (const Error& e) {
    report_error(to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    report_error("config", e.what());
    return 1;
  } catch (const fs::filesystem_error& e) {
    report_error("io", e.what());
    return 1;
  }
  return 0;
}
