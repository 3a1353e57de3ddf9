#include "voxagg/container.hpp"

#include <fstream>
#include <iterator>

namespace voxagg {

namespace {

using nlohmann::json;

json dims_json(const Dims& d) { return json::array({d.width, d.height, d.depth}); }

json spacing_json(const std::optional<Spacing>& s) {
  if (!s) return nullptr;
  return json::array({(*s)[0], (*s)[1], (*s)[2]});
}

Dims parse_dims(const json& header) {
  const auto& d = header.at("dims");
  if (!d.is_array() || d.size() != 3) throw Error(ErrorKind::bad_header, "dims must have 3 entries");
  Dims dims{d[0].get<Index>(), d[1].get<Index>(), d[2].get<Index>()};
  if (!dims.valid()) throw Error(ErrorKind::bad_header, "dims must be positive");
  return dims;
}

std::optional<Spacing> parse_spacing(const json& header) {
  auto it = header.find("spacing");
  if (it == header.end() || it->is_null()) return std::nullopt;
  if (!it->is_array() || it->size() != 3) throw Error(ErrorKind::bad_header, "spacing must have 3 entries");
  return Spacing{(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>()};
}

template <typename T>
void check_payload(std::size_t actual, Index count) {
  const auto expected = static_cast<std::size_t>(count) * sizeof(T);
  if (actual != expected) {
    throw Error(ErrorKind::size_mismatch, "size mismatch: header implies " + std::to_string(expected) +
                                              " payload bytes, found " + std::to_string(actual));
  }
}

}  // namespace

bytes::Buffer encode_container(const Container& c) {
  json header;
  std::span<const std::uint8_t> payload;
  std::visit(
      [&](const auto& obj) {
        using T = std::decay_t<decltype(obj)>;
        header["dims"] = dims_json(obj.dims());
        if constexpr (std::is_same_v<T, VolumeF>) {
          header["kind"] = "volume";
          header["dtype"] = "f32";
          header["spacing"] = spacing_json(obj.spacing());
          payload = bytes::as_bytes(std::span<const float>(obj.data().data(), obj.data().size()));
        } else if constexpr (std::is_same_v<T, LogitFieldF>) {
          header["kind"] = "logits";
          header["dtype"] = "f32";
          header["num_classes"] = obj.num_classes();
          header["spacing"] = nullptr;
          payload = bytes::as_bytes(std::span<const float>(obj.values().data(), obj.values().size()));
        } else {
          header["kind"] = "mask";
          header["dtype"] = "u8";
          header["spacing"] = nullptr;
          payload = {obj.data().data(), static_cast<std::size_t>(obj.data().size())};
        }
      },
      c.payload);
  if (!c.meta.is_null()) header["meta"] = c.meta;

  const std::string text = header.dump();
  bytes::Buffer out;
  out.reserve(kContainerMagic.size() + 4 + text.size() + payload.size());
  out.insert(out.end(), kContainerMagic.begin(), kContainerMagic.end());
  bytes::put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  bytes::append(out, payload);
  return out;
}

Container decode_container(std::span<const std::uint8_t> file) {
  if (file.size() < kContainerMagic.size() ||
      !std::equal(kContainerMagic.begin(), kContainerMagic.end(), file.begin(),
                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw Error(ErrorKind::bad_magic, "bad magic");
  }
  if (file.size() < kContainerMagic.size() + 4) throw Error(ErrorKind::truncated, "truncated header length");
  const auto header_len = bytes::get<std::uint32_t>(file, kContainerMagic.size());
  const std::size_t header_start = kContainerMagic.size() + 4;
  if (file.size() - header_start < header_len) throw Error(ErrorKind::truncated, "truncated header");

  json header;
  try {
    header = json::parse(file.begin() + header_start, file.begin() + header_start + header_len);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::bad_header, std::string("header is not valid JSON: ") + e.what());
  }

  const auto payload = file.subspan(header_start + header_len);
  Container out;
  out.meta = header.contains("meta") ? header["meta"] : json(nullptr);
  try {
    const auto kind = header.at("kind").get<std::string>();
    const auto dtype = header.at("dtype").get<std::string>();
    const Dims dims = parse_dims(header);
    if (kind == "volume" || kind == "logits") {
      if (dtype != "f32") throw Error(ErrorKind::bad_header, kind + " payload must be f32");
      Index count = dims.size();
      Index classes = 1;
      if (kind == "logits") {
        classes = header.at("num_classes").get<Index>();
        if (classes < 2) throw Error(ErrorKind::bad_header, "num_classes must be >= 2");
        count *= classes;
      }
      check_payload<float>(payload.size(), count);
      if (kind == "volume") {
        VolumeF::Vector data(dims.size());
        std::memcpy(data.data(), payload.data(), payload.size());
        out.payload = VolumeF(dims, std::move(data), parse_spacing(header));
      } else {
        LogitFieldF::Matrix data(dims.size(), classes);
        std::memcpy(data.data(), payload.data(), payload.size());
        out.payload = LogitFieldF(dims, std::move(data));
      }
    } else if (kind == "mask") {
      if (dtype != "u8") throw Error(ErrorKind::bad_header, "mask payload must be u8");
      check_payload<std::uint8_t>(payload.size(), dims.size());
      ClassMask::Array data(dims.size());
      std::memcpy(data.data(), payload.data(), payload.size());
      out.payload = ClassMask(dims, std::move(data));
    } else {
      throw Error(ErrorKind::bad_header, "unknown container kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::bad_header, std::string("malformed header: ") + e.what());
  }
  return out;
}

bytes::Buffer read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  return bytes::Buffer(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorKind::io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Container read_container(const std::filesystem::path& path) {
  const auto data = read_file(path);
  return decode_container(data);
}

void write_container(const Container& c, const std::filesystem::path& path) {
  write_file_atomic(path, encode_container(c));
}

VolumeD read_volume(const std::filesystem::path& path) {
  auto c = read_container(path);
  if (auto* v = std::get_if<VolumeF>(&c.payload)) return v->cast<double>();
  throw Error(ErrorKind::bad_header, path.string() + " does not hold a volume");
}

ClassMask read_mask(const std::filesystem::path& path) {
  auto c = read_container(path);
  if (auto* m = std::get_if<ClassMask>(&c.payload)) return std::move(*m);
  throw Error(ErrorKind::bad_header, path.string() + " does not hold a mask");
}

}  // namespace voxagg
