#include "voxagg/error.hpp"

namespace voxagg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::dim_mismatch: return "dim_mismatch";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::size_mismatch: return "size_mismatch";
    case ErrorKind::bad_header: return "bad_header";
    case ErrorKind::transport: return "transport";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::no_gradient: return "no_gradient";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::label_mismatch: return "label_mismatch";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace voxagg
