#include "voxagg/attribution.hpp"

#include <random>

#include "voxagg/kernelshap.hpp"

namespace voxagg {

namespace {

// Running mean m_k = m_{k-1} + (g - m_{k-1}) / k; stays bit-identical to g
// when every sample is the same.
void accumulate_mean(Eigen::VectorXd& mean, const Eigen::VectorXd& sample, int k) {
  mean += (sample - mean) / static_cast<double>(k);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::vg: return "vg";
    case Method::sg: return "sg";
    case Method::ig: return "ig";
    case Method::kshap_cubes: return "kshap_cubes";
    case Method::kshap_semantic: return "kshap_semantic";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (auto m : {Method::vg, Method::sg, Method::ig, Method::kshap_cubes, Method::kshap_semantic}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::config, "unknown attribution method '" + std::string(name) + "'");
}

Index AttributionParams::resolved_kshap_samples() const {
  if (kshap_samples) return *kshap_samples;
  return method == Method::kshap_semantic ? 200 : 1000;
}

nlohmann::json AttributionParams::to_json() const {
  nlohmann::json j{{"method", to_string(method)}, {"seed", rng.seed}, {"stream", rng.stream_id}};
  switch (method) {
    case Method::vg: break;
    case Method::sg:
      j["n"] = sg_samples;
      if (sg_sigma) j["sigma"] = *sg_sigma;
      else j["sigma_fraction"] = sg_sigma_fraction;
      break;
    case Method::ig:
      j["n"] = ig_steps;
      j["baseline"] = ig_baseline ? "custom" : "zeros";
      break;
    case Method::kshap_cubes:
      j["cube_edge"] = cube_edge;
      j["cubes_per_axis"] = cubes_per_axis;
      [[fallthrough]];
    case Method::kshap_semantic:
      j["samples"] = resolved_kshap_samples();
      j["ridge_lambda"] = ridge_lambda;
      break;
  }
  return j;
}

AttributionParams AttributionParams::from_json(const nlohmann::json& j) {
  AttributionParams p;
  try {
    if (j.contains("method")) p.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("sg_samples")) p.sg_samples = j.at("sg_samples").get<int>();
    if (j.contains("sg_sigma")) p.sg_sigma = j.at("sg_sigma").get<double>();
    if (j.contains("sg_sigma_fraction")) p.sg_sigma_fraction = j.at("sg_sigma_fraction").get<double>();
    if (j.contains("ig_steps")) p.ig_steps = j.at("ig_steps").get<int>();
    if (j.contains("kshap_samples")) p.kshap_samples = j.at("kshap_samples").get<Index>();
    if (j.contains("cube_edge")) p.cube_edge = j.at("cube_edge").get<Index>();
    if (j.contains("cubes_per_axis")) p.cubes_per_axis = j.at("cubes_per_axis").get<Index>();
    if (j.contains("ridge_lambda")) p.ridge_lambda = j.at("ridge_lambda").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad attribution params: ") + e.what());
  }
  if (p.sg_samples < 1 || p.ig_steps < 1) throw Error(ErrorKind::config, "SG/IG sample counts must be >= 1");
  if (p.sg_sigma && *p.sg_sigma < 0) throw Error(ErrorKind::config, "sg_sigma must be >= 0");
  if (p.ridge_lambda < 0) throw Error(ErrorKind::config, "ridge_lambda must be >= 0");
  if (p.cube_edge < 0 || p.cubes_per_axis < 1) throw Error(ErrorKind::config, "bad cube partition");
  return p;
}

AttributionField vanilla_gradient(SegmentationModel& model, const VolumeD& x, Index class_id,
                                  const ClassMask& mask) {
  if (!model.info().has_gradient) throw Error(ErrorKind::no_gradient, "model has no gradient capability");
  return AttributionField{model.proxy_gradient(x, class_id, mask), class_id, Method::vg,
                          nlohmann::json{{"method", "vg"}}};
}

AttributionField smoothgrad(SegmentationModel& model, const VolumeD& x, Index class_id,
                            const ClassMask& mask, int n, double sigma, const RngSpec& rng) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "smoothgrad needs n >= 1");
  if (!(sigma >= 0)) throw Error(ErrorKind::invalid_argument, "smoothgrad needs sigma >= 0");
  if (!model.info().has_gradient) throw Error(ErrorKind::no_gradient, "model has no gradient capability");

  AttributionField out{VolumeD(x.dims()), class_id, Method::sg,
                       nlohmann::json{{"method", "sg"}, {"n", n}, {"sigma", sigma}}};
  if (sigma == 0.0) {
    // Every sample sits at x; skip the redundant gradient calls.
    out.values = model.proxy_gradient(x, class_id, mask);
    return out;
  }
  auto engine = rng.engine();
  std::normal_distribution<double> noise(0.0, sigma);
  VolumeD noisy = x;
  for (int s = 0; s < n; ++s) {
    for (Index i = 0; i < x.size(); ++i) noisy[i] = x[i] + noise(engine);
    accumulate_mean(out.values.data(), model.proxy_gradient(noisy, class_id, mask).data(), s + 1);
  }
  return out;
}

AttributionField integrated_gradients(SegmentationModel& model, const VolumeD& x, Index class_id,
                                      const ClassMask& mask, int n, const VolumeD& baseline) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "integrated gradients needs n >= 1");
  require_same_dims(x.dims(), baseline.dims(), "IG baseline");
  if (!model.info().has_gradient) throw Error(ErrorKind::no_gradient, "model has no gradient capability");

  const Eigen::VectorXd delta = x.data() - baseline.data();
  // (delta / n) * sum(g) == delta * mean(g)
  Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(x.size());
  VolumeD point(x.dims());
  for (int i = 1; i <= n; ++i) {
    point.data() = baseline.data() + (static_cast<double>(i) / n) * delta;
    accumulate_mean(mean_grad, model.proxy_gradient(point, class_id, mask).data(), i);
  }
  AttributionField out{VolumeD(x.dims()), class_id, Method::ig, nlohmann::json{{"method", "ig"}, {"n", n}}};
  out.values.data() = delta.cwiseProduct(mean_grad);
  return out;
}

AttributionField attribute(SegmentationModel& model, const VolumeD& x, Index class_id,
                           const ClassMask& mask, const AttributionParams& params,
                           const LogitFieldD* logits) {
  AttributionField field;
  switch (params.method) {
    case Method::vg:
      field = vanilla_gradient(model, x, class_id, mask);
      break;
    case Method::sg: {
      const double sigma = params.sg_sigma.value_or(params.sg_sigma_fraction *
                                                    (x.data().maxCoeff() - x.data().minCoeff()));
      field = smoothgrad(model, x, class_id, mask, params.sg_samples, sigma, params.rng);
      break;
    }
    case Method::ig:
      field = integrated_gradients(model, x, class_id, mask, params.ig_steps,
                                   params.ig_baseline.value_or(VolumeD(x.dims())));
      break;
    case Method::kshap_cubes: {
      const Index edge = params.cube_edge > 0 ? params.cube_edge : cube_edge_for(x.dims(), params.cubes_per_axis);
      field = kernelshap(model, x, class_id, mask, partition_cubes(x.dims(), edge),
                         params.resolved_kshap_samples(), params.ridge_lambda, params.rng)
                  .first;
      break;
    }
    case Method::kshap_semantic: {
      const auto partition = logits ? partition_semantic(*logits) : partition_semantic(model.forward(x));
      field = kernelshap(model, x, class_id, mask, partition, params.resolved_kshap_samples(),
                         params.ridge_lambda, params.rng)
                  .first;
      break;
    }
  }
  field.params = params.to_json();
  return field;
}

ClassAttributions attribute_all_classes(SegmentationModel& model, const VolumeD& x,
                                        const AttributionParams& params) {
  const auto logits = model.forward(x);
  const auto masks = argmax_masks(logits);
  ClassAttributions out;
  for (Index c = 0; c < logits.num_classes(); ++c) {
    const auto& mask = masks[static_cast<std::size_t>(c)];
    if (mask.empty()) {
      out.skipped.push_back({c, "empty_mask"});
      continue;
    }
    AttributionParams class_params = params;
    class_params.rng = params.rng.child(static_cast<std::uint64_t>(c));
    out.fields.push_back(attribute(model, x, c, mask, class_params, &logits));
  }
  return out;
}

}  // namespace voxagg
