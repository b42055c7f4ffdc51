#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bnngp {

enum class ErrorKind {
  InvalidInput,
  Domain,
  DegenerateKernel,
  NotInImage,
  NotInvertible,
  PhaseBoundary,
  UndefinedCorrelation,
  ArchitectureValidation,
  OptimizationDiverged,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class OptimizationDiverged : public Error {
 public:
  OptimizationDiverged(const std::string& what, std::vector<double> trace);
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace bnngp
