#pragma once

// Empirical covering numbers of image clouds {W x : sampled W, pooled x}.
//
// greedy_cover is exact greedy max-coverage over internal centers (every
// candidate center is a cloud point, ties by lowest point index), so its size
// sits in [OPT, OPT * (1 + ln m)].  exact_min_cover is the exhaustive oracle
// for tiny clouds.  volumetric_grid_cover realises the axis-aligned grid
// construction whose size matches the volumetric count.

#include "genbound/linalg.hpp"
#include "genbound/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace genbound {

struct ImageCloud {
  Mat points;  // k x (n_matrices * n_inputs), matrix-major column order
  MatrixClassSpec class_spec;
  Index n_inputs = 0;
  Index n_matrices = 0;
  double b_x = 0.0;  // declared or observed input-ball radius
};

enum class CoverMethod { greedy_internal, exact_min, volumetric_grid };

struct CoverEstimate {
  Mat centers;  // dim x size
  double eps = 0.0;
  Index size = 0;
  CoverMethod method = CoverMethod::greedy_internal;
};

// Pools the images of every input under n_matrices sampled class members.
// If declared_b_x is given, every input must fit the class's paired input
// ball of that radius (+1e-9); otherwise the radius is the observed max.
ImageCloud build_cloud(const MatrixClassSpec& spec, const std::vector<Vec>& inputs,
                       Index n_matrices, std::uint64_t seed,
                       std::optional<double> declared_b_x = std::nullopt);

CoverEstimate greedy_cover(const ImageCloud& cloud, double eps);

// Exhaustive minimum internal cover; SizeLimitError beyond 16 points.
CoverEstimate exact_min_cover(const ImageCloud& cloud, double eps);

// Grid with per-axis step <= 2 eps / sqrt(dim) spanning the ball's bounding
// box, pruned to the (radius + eps)-ball.  Covers the radius-ball at eps and
// has size <= (2 radius sqrt(dim) / eps)^dim whenever eps <= radius sqrt(dim).
// SizeLimitError when the unpruned grid would exceed 1e8 points.
CoverEstimate volumetric_grid_cover(double radius, Index dim, double eps);

// ln(greedy cover size) of the sampled cloud (0 for an empty cloud)
double empirical_log_cover(const MatrixClassSpec& spec, const std::vector<Vec>& inputs,
                           double eps, Index n_matrices, std::uint64_t seed);

}  // namespace genbound
