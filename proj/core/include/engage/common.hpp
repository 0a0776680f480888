#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace engage {

/// Dense row-major matrix; rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Warnings = std::vector<std::string>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad config, bad shapes, bad values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The data is well-formed but the requested statistic is undefined on it.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

enum class Metric : std::uint8_t { kLikes, kComments };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

inline constexpr std::string_view kVersion = ENGAGE_VERSION;

/// 64-bit FNV-1a. Stable across platforms, used for config and schema hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace engage
