#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <span>
#include <string_view>
#include <variant>

#include "voxagg/bytes.hpp"
#include "voxagg/volume.hpp"

namespace voxagg {

/// On-disk container: 8-byte magic "A2XVOL1\0", u32 LE header length, JSON
/// header, raw payload (f32 LE for volumes and logits, u8 for masks).
inline constexpr std::string_view kContainerMagic{"A2XVOL1\0", 8};

using ContainerPayload = std::variant<VolumeF, LogitFieldF, ClassMask>;

struct Container {
  ContainerPayload payload;
  /// Free-form metadata stored under the "meta" header key; null when absent.
  nlohmann::json meta;
};

bytes::Buffer encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> file);

Container read_container(const std::filesystem::path& path);
/// Writes through a temporary file and renames it into place.
void write_container(const Container& c, const std::filesystem::path& path);

template <typename Scalar>
void write_volume(const Volume<Scalar>& v, const std::filesystem::path& path,
                  nlohmann::json meta = nullptr) {
  write_container(Container{v.template cast<float>(), std::move(meta)}, path);
}

VolumeD read_volume(const std::filesystem::path& path);
ClassMask read_mask(const std::filesystem::path& path);

/// Atomic byte dump used by every writer in the toolkit.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> data);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
bytes::Buffer read_file(const std::filesystem::path& path);

}  // namespace voxagg
