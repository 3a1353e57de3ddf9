#include "voxagg/model.hpp"

namespace voxagg {

double SegmentationModel::proxy(const VolumeD& x, Index class_id, const ClassMask& mask) {
  check_model_call(info(), x, class_id, mask);
  const auto logits = forward(x);
  return logits.values().col(class_id).dot(mask.data().cast<double>().matrix());
}

void check_model_call(const ModelInfo& info, const VolumeD& x) {
  require_same_dims(info.input_dims, x.dims(), "model input");
}

void check_model_call(const ModelInfo& info, const VolumeD& x, Index class_id, const ClassMask& mask) {
  check_model_call(info, x);
  require_same_dims(x.dims(), mask.dims(), "proxy mask");
  if (class_id < 0 || class_id >= info.num_classes) {
    throw Error(ErrorKind::invalid_argument, "class id " + std::to_string(class_id) + " out of range");
  }
}

ProxyValue proxy_value(SegmentationModel& model, const VolumeD& x, Index class_id,
                       const ClassMask& mask) {
  check_model_call(model.info(), x, class_id, mask);
  if (mask.empty()) return ProxyValue{class_id, 0.0, true};
  return ProxyValue{class_id, model.proxy(x, class_id, mask), false};
}

VolumeD finite_difference_gradient(SegmentationModel& model, const VolumeD& x, Index class_id,
                                   const ClassMask& mask, double h) {
  if (!(h > 0)) throw Error(ErrorKind::invalid_argument, "finite difference step must be positive");
  check_model_call(model.info(), x, class_id, mask);
  VolumeD grad(x.dims());
  VolumeD probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = model.proxy(probe, class_id, mask);
    probe[i] = orig - h;
    const double down = model.proxy(probe, class_id, mask);
    probe[i] = orig;
    grad[i] = (up - down) / (2 * h);
  }
  return grad;
}

}  // namespace voxagg
