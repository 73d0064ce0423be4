#pragma once

#include <stdexcept>
#include <string>

namespace rmtrack {

/// Input file or config does not match its documented schema.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// Ground-truth and prediction streams disagree on the frame range,
/// or frames arrive out of order.
class FrameMismatchError : public std::runtime_error {
public:
  explicit FrameMismatchError(const std::string& what) : std::runtime_error(what) {}
};

/// A per-frame problem exceeds the configured solver size cap.
class CapExceededError : public std::runtime_error {
public:
  explicit CapExceededError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rmtrack
