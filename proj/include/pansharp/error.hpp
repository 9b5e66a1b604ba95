#pragma once

#include <stdexcept>
#include <string>

namespace pansharp {

/// Shape or extent mismatch between tensors or between a tensor and an operator.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite or otherwise out-of-domain numeric input.
struct ValueError : std::runtime_error {
  explicit ValueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A caller broke a documented precondition (bad key, bad range, ...).
struct ContractError : std::runtime_error {
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File format problems: bad magic, truncated payload, unknown dtype.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Iterative solver blew up.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pansharp
