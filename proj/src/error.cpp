#include "gridtopo/error.hpp"

namespace gridtopo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Instability: return "instability";
    case ErrorKind::Overflow: return "overflow";
    case ErrorKind::Io: return "io";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::Spectral: return "spectral";
    case ErrorKind::Config: return "config";
  }
  return "error";
}

}  // namespace gridtopo
