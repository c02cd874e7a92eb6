#pragma once

#include <stdexcept>
#include <string>

namespace patchstrike {

/// Invalid configuration: bad kernel sizes, out-of-range factors, unknown
/// presets, shape mismatches caught at setup time. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem and format failures: unreadable paths, bad magic, truncation.
/// CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failures surfaced mid-computation. CLI exit code 4.
class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace patchstrike
