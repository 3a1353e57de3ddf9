#pragma once

#include <cstdint>
#include <random>

namespace voxagg {

/// SplitMix64 finalizer, used to decorrelate seeds and stream ids.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic source of randomness: identical specs expand to identical
/// draws. Sub-streams are derived with `child`, never by reseeding by hand.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  std::mt19937_64 engine() const {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream_id + 0x5851f42d4c957f2dULL)));
  }

  RngSpec child(std::uint64_t key) const {
    return RngSpec{seed, splitmix64(stream_id * 0x9e3779b97f4a7c15ULL + key + 1)};
  }

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

}  // namespace voxagg
