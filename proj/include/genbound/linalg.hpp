#pragma once

// Norm kernels and constrained matrix classes.
//
// Convention used everywhere: a linear map W : R^d -> R^k is stored as a
// k x d matrix, so its columns W(:,l), l in [d], live in the output space.
// The class norms below are the exact quantities the covering arguments
// consume; in particular
//   col_21   : sum over the d columns of their 2-norms,
//   row_p1   : sum over the k rows of their p-norms,
//   basis_p1 : sum over columns of W^T E of their p-norms, E an orthonormal
//              basis of the admissible span (rows of the coefficient matrix
//              E^T W).
// col_21 and row_p1 differ at p = 2 on purpose: they cap different things.

#include "genbound/types.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>

namespace genbound {

// ---------------------------------------------------------------------------
// vector and entrywise matrix norms (expression-friendly, any real p >= 1)

template <class Derived>
double vec_norm(const Eigen::MatrixBase<Derived>& x, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("vec_norm: p must be >= 1");
  if (x.size() == 0) return 0.0;
  if (p == kInf) return x.cwiseAbs().maxCoeff();
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return x.norm();
  // scale by the max entry so pow() stays in range
  const double m = x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x.derived()(i)) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

// (sum_j ||A(:,j)||_p^q)^(1/q); q = inf gives max_j ||A(:,j)||_p.
template <class Derived>
double entrywise_norm(const Eigen::MatrixBase<Derived>& A, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0))
    throw std::invalid_argument("entrywise_norm: exponents must be >= 1");
  if (A.size() == 0) return 0.0;
  double worst = 0.0, acc = 0.0;
  for (Index j = 0; j < A.cols(); ++j) {
    const double cj = vec_norm(A.derived().col(j), p);
    worst = std::max(worst, cj);
  }
  if (q == kInf) return worst;
  if (worst == 0.0) return 0.0;
  for (Index j = 0; j < A.cols(); ++j) {
    const double cj = vec_norm(A.derived().col(j), p);
    acc += (q == 1.0) ? cj / worst : std::pow(cj / worst, q);
  }
  return worst * ((q == 1.0) ? acc : std::pow(acc, 1.0 / q));
}

// Largest singular value by power iteration on the Gram operator, fixed
// pseudorandom start so results are reproducible.  Relative tolerance;
// NumericFailure past max_iters.
template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& A_, double tol = 1e-10,
                     int max_iters = 10000) {
  const MatX<typename Derived::Scalar> A = A_;
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const bool wide = A.rows() < A.cols();  // iterate in the smaller space
  const Index dim = wide ? A.rows() : A.cols();

  std::mt19937_64 rng(0x5eed5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = gauss(rng);
  v.normalize();

  double sigma = 0.0;
  bool reseeded = false;
  for (int it = 0; it < max_iters; ++it) {
    Vec w = wide ? Vec(A.transpose() * v) : Vec(A * v);
    const double s = w.norm();
    if (s == 0.0) {
      // start landed in the null space (measure zero); retry once
      if (reseeded) return 0.0;
      reseeded = true;
      for (Index i = 0; i < dim; ++i) v(i) = gauss(rng);
      v.normalize();
      continue;
    }
    Vec back = wide ? Vec(A * w) : Vec(A.transpose() * w);
    const double bn = back.norm();
    if (bn == 0.0) return s;
    v = back / bn;
    if (it > 0 && std::abs(s - sigma) <= tol * std::max(s, 1e-300)) return s;
    sigma = s;
  }
  throw NumericFailure("spectral_norm: power iteration did not converge");
}

// ---------------------------------------------------------------------------
// rank and column-space basis (relative singular-value cutoff)

Index numerical_rank(const Mat& A, double rel_tol = 1e-8);

// k x r matrix with orthonormal columns spanning col(A) at the cutoff.
Mat colspace_basis(const Mat& A, double rel_tol = 1e-8);

// ---------------------------------------------------------------------------
// constrained matrix classes

enum class MatrixNorm {
  spectral,   // largest singular value
  frobenius,  // entrywise 2-norm
  entrywise,  // entrywise (p,q) norm
  col_21,     // sum of column 2-norms
  row_p1,     // sum of row p-norms (= basis_p1 with identity basis)
  basis_p1,   // sum over columns of W^T E of their p-norms
};

struct MatrixClassSpec {
  Index d = 0;  // input dimension (columns of W)
  Index k = 0;  // output dimension (rows of W)
  MatrixNorm norm_kind = MatrixNorm::frobenius;
  double p = 2.0;  // exponent for entrywise / row_p1 / basis_p1
  double q = 1.0;  // second exponent for entrywise
  double b_w = 1.0;
  std::optional<Index> rank_cap;  // if set: 1 <= rank_cap <= min(d,k)
  std::optional<Mat> basis;       // k x r, orthonormal columns (admissible span)

  void validate() const;          // std::invalid_argument on malformed specs
  Index effective_rank_cap() const;
  // exponent of the input-ball norm this class is paired with
  double input_exponent() const;
};

double conjugate_exponent(double p);

// the declared class norm of W under the given class
double class_norm(const MatrixClassSpec& spec, const Mat& W);

// Deterministic per-seed sample: low-rank Gaussian factor product, pushed
// into the admissible span, rescaled to a uniform (0,1] fraction of the
// norm-ball radius.  InfeasibleSpec if the span is zero-dimensional while
// b_w > 0.
Mat sample_class_member(const MatrixClassSpec& spec, std::uint64_t seed);

// iid standard normal matrix from the given stream
Mat gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng);

// random vector with ||x||_p == radius * u, u ~ uniform(0,1]
Vec sample_in_ball(Index dim, double p, double radius, std::mt19937_64& rng);

}  // namespace genbound
