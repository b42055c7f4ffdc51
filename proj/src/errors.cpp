#include "bnngp/errors.hpp"

#include <utility>

namespace bnngp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateKernel: return "degenerate-kernel";
    case ErrorKind::NotInImage: return "not-in-image";
    case ErrorKind::NotInvertible: return "not-invertible";
    case ErrorKind::PhaseBoundary: return "phase-boundary";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation";
    case ErrorKind::ArchitectureValidation: return "architecture-validation";
    case ErrorKind::OptimizationDiverged: return "optimization-diverged";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

OptimizationDiverged::OptimizationDiverged(const std::string& what, std::vector<double> trace)
    : Error(ErrorKind::OptimizationDiverged, what), trace_(std::move(trace)) {}

}  // namespace bnngp
