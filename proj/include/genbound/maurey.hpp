#pragma once

// Constructive sparsification of images z = W x.
//
// Each decomposition writes the image as a short convex combination
// f = sum_j w_j g_j with sum_j w_j <= 1 and ||g_j||_2 <= b; sampling t atoms
// iid from the weights (plus a zero atom with the leftover mass) then gives
// an integer-count approximation with
//   ||f - (1/t) sum_j k_j g_j||_2^2 <= (alpha b^2 - ||f||_2^2) / t.

#include "genbound/linalg.hpp"
#include "genbound/types.hpp"

#include <cstdint>
#include <vector>

namespace genbound {

struct ConvexRepresentation {
  Mat atoms;               // k x m, columns are the atoms g_j
  Vec weights;             // m nonnegative weights, sum <= 1 (+1e-12)
  double atom_norm_bound = 0.0;  // b with ||g_j||_2 <= b (+1e-12)
  Vec target;              // f, reconstructed by atoms * weights within 1e-10

  double weight_sum() const { return weights.size() ? weights.sum() : 0.0; }
  void validate() const;   // PreconditionError when an invariant fails
};

struct SparseApprox {
  std::vector<long> counts;  // k_j >= 0, sum <= t
  long t = 0;
  Vec approx;                // (1/t) sum_j k_j g_j
  double sq_error = 0.0;     // ||target - approx||_2^2
};

// Rank-revealing decomposition for a Frobenius ball: atoms are signed basis
// columns of col(W) scaled to sqrt(r) b_w b_x, r the numerical rank.
// Requires ||W||_F <= b_w and ||x||_2 <= b_x.
ConvexRepresentation decompose_frobenius(const Mat& W, const Vec& x, double b_w, double b_x);

// Same construction under the column-norm-sum ball, with sup-norm inputs:
// requires sum_l ||W(:,l)||_2 <= b_w and ||x||_inf <= b_x.
ConvexRepresentation decompose_col21(const Mat& W, const Vec& x, double b_w, double b_x);

// Decomposition against a supplied orthonormal span basis E (k x r): atoms
// are signed columns of E scaled to b_w b_x.  Requires col(W) within span(E),
// the coefficient (p,1) norm <= b_w, ||x||_q <= b_x and 1/p + 1/q = 1.
ConvexRepresentation decompose_basis(const Mat& W, const Vec& x, const Mat& E, double p,
                                     double q, double b_w, double b_x);

// expected squared error guarantee at t samples
double maurey_error_bound(const ConvexRepresentation& rep, long t);

// Draw t atom indices iid from (weights, leftover -> zero atom); retried with
// the continuing stream until the guarantee (+1e-9) holds.  Hard cap of 1e6
// index draws, NumericFailure beyond.  Deterministic per seed.
SparseApprox sparsify(const ConvexRepresentation& rep, long t, std::uint64_t seed);

// t * ln(2r + 1): log of the sparsification count (2r+1)^t, an upper bound on
// the number of count vectors k with sum <= t over r atoms (plus signs).
double count_log_bound(Index r, long t);

}  // namespace genbound
