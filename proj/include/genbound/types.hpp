#pragma once

// Shared dense types, error taxonomy and seed derivation for the workbench.
// Everything numeric is double precision; norms and bounds use natural logs.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace genbound {

template <class Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// A requested computation cannot succeed numerically (iteration cap hit,
// stochastic retry budget exhausted, ...).
struct NumericFailure : std::runtime_error {
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

// The described object set is empty or degenerate (e.g. a norm ball of
// positive radius inside a zero-dimensional span).
struct InfeasibleSpec : std::invalid_argument {
  explicit InfeasibleSpec(const std::string& what) : std::invalid_argument(what) {}
};

// Caller handed data that violates a documented precondition.
struct PreconditionError : std::invalid_argument {
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// An exhaustive or grid construction would exceed its hard size cap.
struct SizeLimitError : std::runtime_error {
  explicit SizeLimitError(const std::string& what) : std::runtime_error(what) {}
};

// Experiment configuration is malformed (unknown key, empty grid, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// splitmix64 step; used to derive independent stream seeds from a base seed
// plus structural indices so that parallel work items stay deterministic.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t s = mix_seed(base + 0x632be59bd9b4e019ULL);
  s = mix_seed(s ^ a);
  s = mix_seed(s ^ (b + 0x9e3779b97f4a7c15ULL));
  s = mix_seed(s ^ (c + 0xd1b54a32d192ed03ULL));
  return s;
}

}  // namespace genbound
