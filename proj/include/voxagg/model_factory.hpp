#pragma once

#include <nlohmann/json.hpp>

#include <memory>

#include "voxagg/model.hpp"

namespace voxagg {

/// Builds a model from a JSON spec. Either
///   {"type": "synthetic", "dims": [w, h, d], "num_classes": l,
///    "nonlinearity": "identity" | "smooth_saturating", "seed": s,
///    "context_strength": a, "jitter": j, "saturation": s}
/// or
///   {"type": "remote", "endpoint": "tcp:HOST:PORT" | "exec:COMMAND"}.
std::unique_ptr<SegmentationModel> make_model(const nlohmann::json& spec);

}  // namespace voxagg
