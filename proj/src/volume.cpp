#include "voxagg/volume.hpp"

#include <unordered_set>

namespace voxagg {

std::string to_string(const Dims& dims) {
  return std::to_string(dims.width) + "x" + std::to_string(dims.height) + "x" +
         std::to_string(dims.depth);
}

ClassMask::ClassMask(Dims dims, Array data) : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims_.size()) {
    throw Error(ErrorKind::size_mismatch, "mask length does not match dims " + to_string(dims_));
  }
  if ((data_ > std::uint8_t{1}).any()) throw Error(ErrorKind::invalid_argument, "mask values must be 0 or 1");
}

ClassMask mask_algebra(const ClassMask& a, const ClassMask& b, MaskOp op) {
  if (op == MaskOp::complement) return complement(a);
  require_same_dims(a.dims(), b.dims(), "mask_algebra");
  ClassMask::Array out = op == MaskOp::intersect ? (a.data() * b.data()).eval()
                                                 : a.data().max(b.data()).eval();
  return ClassMask(a.dims(), std::move(out));
}

ClassMask complement(const ClassMask& a) {
  return ClassMask(a.dims(), (a.data() == std::uint8_t{0}).cast<std::uint8_t>().eval());
}

void RoISet::add(std::string name, ClassMask mask, RoISource source) {
  for (const auto& e : entries_) {
    if (e.name == name) throw Error(ErrorKind::invalid_argument, "duplicate RoI name '" + name + "'");
  }
  if (!entries_.empty()) require_same_dims(entries_.front().mask.dims(), mask.dims(), "RoISet::add");
  entries_.push_back(RoI{std::move(name), std::move(mask), source});
}

std::vector<std::string> RoISet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

}  // namespace voxagg
