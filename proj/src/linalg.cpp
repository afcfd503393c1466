#include "genbound/linalg.hpp"

#include <Eigen/SVD>

namespace genbound {

Index numerical_rank(const Mat& A, double rel_tol) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Mat> svd(A);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rel_tol * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return r;
}

Mat colspace_basis(const Mat& A, double rel_tol) {
  if (A.size() == 0) return Mat(A.rows(), 0);
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU);
  const Vec& sv = svd.singularValues();
  Index r = 0;
  if (sv.size() > 0 && sv(0) > 0.0) {
    const double cut = rel_tol * sv(0);
    while (r < sv.size() && sv(r) > cut) ++r;
  }
  return svd.matrixU().leftCols(r);
}

double conjugate_exponent(double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("conjugate_exponent: p must be >= 1");
  if (p == 1.0) return kInf;
  if (p == kInf) return 1.0;
  return p / (p - 1.0);
}

void MatrixClassSpec::validate() const {
  if (d < 1 || k < 1) throw std::invalid_argument("MatrixClassSpec: need d >= 1 and k >= 1");
  if (!(b_w >= 0.0) || !std::isfinite(b_w))
    throw std::invalid_argument("MatrixClassSpec: b_w must be finite and >= 0");
  const bool uses_p = norm_kind == MatrixNorm::entrywise || norm_kind == MatrixNorm::row_p1 ||
                      norm_kind == MatrixNorm::basis_p1;
  if (uses_p && !(p >= 1.0)) throw std::invalid_argument("MatrixClassSpec: p must be >= 1");
  if (norm_kind == MatrixNorm::entrywise && !(q >= 1.0))
    throw std::invalid_argument("MatrixClassSpec: q must be >= 1");
  if (rank_cap) {
    if (*rank_cap < 1 || *rank_cap > std::min(d, k))
      throw std::invalid_argument("MatrixClassSpec: rank_cap out of [1, min(d,k)]");
  }
  if (basis) {
    if (basis->rows() != k || basis->cols() > k)
      throw std::invalid_argument("MatrixClassSpec: basis must be k x r with r <= k");
    if (basis->cols() > 0) {
      Mat gram = basis->transpose() * (*basis);
      gram.diagonal().array() -= 1.0;
      if (gram.cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("MatrixClassSpec: basis columns not orthonormal");
    }
  }
}

Index MatrixClassSpec::effective_rank_cap() const {
  Index r = std::min(d, k);
  if (rank_cap) r = std::min(r, *rank_cap);
  if (basis) r = std::min(r, basis->cols());
  return r;
}

double MatrixClassSpec::input_exponent() const {
  switch (norm_kind) {
    case MatrixNorm::spectral:
    case MatrixNorm::frobenius:
      return 2.0;
    case MatrixNorm::col_21:
      return kInf;
    case MatrixNorm::row_p1:
    case MatrixNorm::basis_p1:
      return conjugate_exponent(p);
    case MatrixNorm::entrywise:
      // only the (1,1) class has a paired input ball in the bound suite
      return (p == 1.0 && q == 1.0) ? 1.0 : 2.0;
  }
  throw std::logic_error("input_exponent: bad norm kind");
}

double class_norm(const MatrixClassSpec& spec, const Mat& W) {
  if (W.rows() != spec.k || W.cols() != spec.d)
    throw PreconditionError("class_norm: W shape does not match the class dimensions");
  switch (spec.norm_kind) {
    case MatrixNorm::spectral:
      return spectral_norm(W);
    case MatrixNorm::frobenius:
      return W.norm();
    case MatrixNorm::entrywise:
      return entrywise_norm(W, spec.p, spec.q);
    case MatrixNorm::col_21:
      return entrywise_norm(W, 2.0, 1.0);
    case MatrixNorm::row_p1:
      return entrywise_norm(W.transpose(), spec.p, 1.0);
    case MatrixNorm::basis_p1: {
      if (!spec.basis) return entrywise_norm(W.transpose(), spec.p, 1.0);
      return entrywise_norm(W.transpose() * (*spec.basis), spec.p, 1.0);
    }
  }
  throw std::logic_error("class_norm: bad norm kind");
}

Mat gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat A(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) A(i, j) = gauss(rng);
  return A;
}

Vec sample_in_ball(Index dim, double p, double radius, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec x(dim);
  for (Index i = 0; i < dim; ++i) x(i) = gauss(rng);
  const double u = 1.0 - unif(rng);  // (0,1]
  const double nrm = vec_norm(x, p);
  if (nrm == 0.0 || radius == 0.0) return Vec::Zero(dim);
  return x * (radius * u / nrm);
}

Mat sample_class_member(const MatrixClassSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.b_w == 0.0) return Mat::Zero(spec.k, spec.d);
  const Index r = spec.effective_rank_cap();
  if (r == 0) throw InfeasibleSpec("sample_class_member: admissible span is zero-dimensional");

  std::mt19937_64 rng(derive_seed(seed, 0x11a1ULL));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Mat W0;
    if (spec.basis) {
      const Mat coeff = gaussian_matrix(spec.basis->cols(), r, rng) * gaussian_matrix(r, spec.d, rng);
      W0 = (*spec.basis) * coeff;
    } else {
      W0 = gaussian_matrix(spec.k, r, rng) * gaussian_matrix(r, spec.d, rng);
    }
    const double nu = class_norm(spec, W0);
    if (nu <= 1e-300) continue;  // measure-zero degenerate draw
    const double u = 1.0 - unif(rng);  // (0,1]
    return W0 * (spec.b_w * u / nu);
  }
  throw NumericFailure("sample_class_member: repeated degenerate draws");
}

}  // namespace genbound
