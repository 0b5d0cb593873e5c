#include "csma/error.hpp"

namespace csma {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::shape: return "shape";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::validation: return "validation";
    case ErrorKind::insufficient: return "insufficient";
  }
  return "unknown";
}

}  // namespace csma
