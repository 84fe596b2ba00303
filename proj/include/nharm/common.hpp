#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nharm {

using Index = std::int64_t;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using VecRef = Eigen::Ref<Eigen::VectorXd>;

inline constexpr double kPi = 3.14159265358979323846;

/// Caller-supplied data violates a documented precondition
/// (bad point, bad region, bad parameter range).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Points, maps, or fields from distinct target spaces were mixed.
struct SpaceMismatchError : DomainError {
  using DomainError::DomainError;
};

/// The grid is too coarse for the requested stencil, ladder, or ball.
struct ResolutionError : DomainError {
  using DomainError::DomainError;
};

/// Relaxation detected a numerical inconsistency it cannot recover from.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Map container is structurally unreadable (magic, truncation, encoding).
struct MapFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Map container parsed but its grid shape disagrees with the header.
struct MapDimensionError : MapFormatError {
  using MapFormatError::MapFormatError;
};

/// Map container parsed but was written against a different target space.
struct MapSpaceTagError : MapFormatError {
  using MapFormatError::MapFormatError;
};

/// Configuration text is malformed or inconsistent; message carries
/// line/field diagnostics.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// FNV-1a 64-bit over raw bytes; stable content hashing for space tags and
/// report digests (fixed basis/prime, platform independent).
inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t seed = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t seed = 1469598103934665603ULL) {
  return fnv1a(s.data(), s.size(), seed);
}

}  // namespace nharm
