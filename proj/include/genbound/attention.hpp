#pragma once

// Single-head scalar-output attention:
//   score   a = X Wqk^T x_cls          (T)
//   mix     s = softmax(a)             (T, row-stabilised)
//   pooled  v = X^T s                  (d, convex combination of rows)
//   hidden  h = act(Wv^T v)            (k)
//   output  y = w . (Wc^T h)           (scalar)
// Multi-head output is the sum over heads.  All activations fix act(0) = 0.

#include "genbound/linalg.hpp"
#include "genbound/types.hpp"

#include <vector>

namespace genbound {

enum class Activation { relu, leaky_relu, tanh, identity };

double activation_lipschitz(Activation act, double leaky_slope);

struct HeadParams {
  Mat w_qk;  // d x d
  Mat w_v;   // d x k
  Mat w_c;   // k x d
  Vec w;     // d
  Vec x_cls; // d
  Activation act = Activation::relu;
  double leaky_slope = 0.01;
};

// Norm caps for one head.  b_wc / b_wv cap the max column 1-norm of Wc / Wv
// (what the output-boundedness chain contracts against); b_w caps ||w||_1;
// the score matrix obeys its own matrix-class spec; rows of X live in the
// input_exponent-ball of radius b_x.
struct ConstraintSet {
  double b_w = 1.0;
  double b_wc = 1.0;
  double b_wv = 1.0;
  MatrixClassSpec qk;        // d x d class for w_qk
  double b_x = 1.0;
  double input_exponent = 2.0;  // 1 or inf in the bound suites
};

struct SequenceBatch {
  std::vector<Mat> samples;  // each T x d
  Index T = 0;
  Index d = 0;
};

// rows sum to one, stabilised by the row max
Mat row_softmax(const Mat& scores);

double head_forward(const HeadParams& p, const Mat& X);
double multihead_forward(const std::vector<HeadParams>& heads, const Mat& X);

// Radial rescaling of each violated cap (never entrywise clipping); the score
// matrix is first pushed into its admissible span, then rank-truncated, then
// rescaled.  Idempotent on feasible parameters.
HeadParams project_constraints(HeadParams p, const ConstraintSet& c);

bool satisfies_constraints(const HeadParams& p, const ConstraintSet& c, double slack = 1e-9);

// Verifies the attention-mixing Lipschitz property for one pair of score
// matrices: || X^T (softmax(X u1) - softmax(X u2)) ||_inf
//            <= 2 b_x^2 || u1 - u2 ||_2   with u_i = Wi^T x_cls,
// for rows of X with ||row||_2 <= b_x.
bool attention_lipschitz_check(const Mat& W1, const Mat& W2, const Mat& X, const Vec& x_cls,
                               double b_x, double slack = 1e-12);

// deterministic batch with rows drawn in the exponent-p ball of radius b_x
SequenceBatch sample_batch(Index n, Index T, Index d, double input_exponent, double b_x,
                           std::uint64_t seed);

}  // namespace genbound
