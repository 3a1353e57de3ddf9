#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace voxagg::bytes {

static_assert(std::endian::native == std::endian::little,
              "wire and file formats assume a little-endian host");

using Buffer = std::vector<std::uint8_t>;

template <typename T>
void put(Buffer& out, T value) {
  const auto offset = out.size();
  out.resize(offset + sizeof(T));
  std::memcpy(out.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t offset) {
  T value;
  std::memcpy(&value, in.data() + offset, sizeof(T));
  return value;
}

inline void append(Buffer& out, std::span<const std::uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}

template <typename T>
std::span<const std::uint8_t> as_bytes(std::span<const T> values) {
  return {reinterpret_cast<const std::uint8_t*>(values.data()), values.size_bytes()};
}

}  // namespace voxagg::bytes
