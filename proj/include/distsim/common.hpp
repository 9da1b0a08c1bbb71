// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace distsim {

using ObjectId = std::uint32_t;
using ContextId = std::uint32_t;
using WordId = std::uint32_t;
using Count = std::uint64_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Malformed or inconsistent input data (bad pair file, zero marginal, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Artifacts that do not belong together (hash mismatch between files).
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

/// All redistribution mass sits on seen contexts, so the back-off
/// normalizer alpha(x) has a vanishing denominator.
class DegenerateRedistribution : public DataError {
 public:
  explicit DegenerateRedistribution(const std::string& what) : DataError(what) {}
};

/// Logarithm base used by divergences and weights.  Distances are computed
/// in nats internally and rescaled, so natural() is exact.
struct LogBase {
  double ln_base = std::numbers::ln10;

  static constexpr LogBase natural() { return LogBase{1.0}; }
  static constexpr LogBase base10() { return LogBase{std::numbers::ln10}; }
  static LogBase of(double base) {
    if (!(base > 0.0) || base == 1.0) throw DataError("log base must be positive and != 1");
    return LogBase{std::log(base)};
  }

  double log(double x) const { return std::log(x) / ln_base; }
  /// base^v
  double exp(double v) const { return std::exp(v * ln_base); }
};

}  // namespace distsim
