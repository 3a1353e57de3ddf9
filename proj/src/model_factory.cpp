#include "voxagg/model_factory.hpp"

#include "voxagg/synthetic_model.hpp"
#include "voxagg/wire.hpp"

namespace voxagg {

std::unique_ptr<SegmentationModel> make_model(const nlohmann::json& spec) {
  std::string type;
  try {
    type = spec.value("type", std::string("synthetic"));
    if (type == "remote") {
      return std::make_unique<wire::RemoteModel>(wire::connect(spec.at("endpoint").get<std::string>()));
    }
    if (type != "synthetic") throw Error(ErrorKind::config, "unknown model type '" + type + "'");
    const auto d = spec.value("dims", std::vector<Index>{16, 16, 16});
    if (d.size() != 3) throw Error(ErrorKind::config, "model dims must have 3 entries");
    const Dims dims{d[0], d[1], d[2]};
    if (!dims.valid()) throw Error(ErrorKind::config, "model dims must be positive");
    const auto l = spec.value("num_classes", Index{3});
    if (l < 2) throw Error(ErrorKind::config, "model needs at least 2 classes");
    const auto nl_name = spec.value("nonlinearity", std::string("smooth_saturating"));
    Nonlinearity nl;
    if (nl_name == "identity" || nl_name == "linear") {
      nl = Nonlinearity::identity;
    } else if (nl_name == "smooth_saturating" || nl_name == "smooth") {
      nl = Nonlinearity::smooth_saturating;
    } else {
      throw Error(ErrorKind::config, "unknown nonlinearity '" + nl_name + "'");
    }
    auto s = make_synthetic_spec(dims, l, nl, spec.value("seed", std::uint64_t{0}),
                                 spec.value("context_strength", 0.3), spec.value("jitter", 0.25));
    s.saturation = spec.value("saturation", s.saturation);
    if (!(s.saturation > 0)) throw Error(ErrorKind::config, "saturation must be positive");
    return std::make_unique<SyntheticModel>(std::move(s));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad model spec: ") + e.what());
  }
}

}  // namespace voxagg
