#include "genbound/maurey.hpp"

#include <cmath>
#include <random>

namespace genbound {

namespace {

inline double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }  // sgn(0) = +1

// Shared core: given a span basis E (k x r) and the coefficient rows
// E^T W (r x d), emit atoms +/- scale * E(:,j) weighted by |coeff_j . x|/scale.
ConvexRepresentation from_span(const Mat& W, const Vec& x, const Mat& E, double scale) {
  const Index r = E.cols();
  const Mat coeff = E.transpose() * W;  // r x d
  ConvexRepresentation rep;
  rep.atoms.resize(W.rows(), r);
  rep.weights.resize(r);
  rep.atom_norm_bound = scale;
  rep.target = W * x;
  for (Index j = 0; j < r; ++j) {
    const double proj = coeff.row(j).dot(x.transpose());
    rep.atoms.col(j) = E.col(j) * (sgn(proj) * scale);
    rep.weights(j) = std::abs(proj) / scale;
  }
  return rep;
}

}  // namespace

void ConvexRepresentation::validate() const {
  if (atoms.cols() != weights.size())
    throw PreconditionError("ConvexRepresentation: atom/weight count mismatch");
  if (weights.size() > 0 && weights.minCoeff() < 0.0)
    throw PreconditionError("ConvexRepresentation: negative weight");
  if (weight_sum() > 1.0 + 1e-12)
    throw PreconditionError("ConvexRepresentation: weights sum beyond 1");
  for (Index j = 0; j < atoms.cols(); ++j)
    if (atoms.col(j).norm() > atom_norm_bound + 1e-12)
      throw PreconditionError("ConvexRepresentation: atom exceeds norm bound");
  const Vec recon = atoms.cols() ? Vec(atoms * weights) : Vec(Vec::Zero(target.size()));
  if ((recon - target).norm() > 1e-10)
    throw PreconditionError("ConvexRepresentation: reconstruction off target");
}

ConvexRepresentation decompose_frobenius(const Mat& W, const Vec& x, double b_w, double b_x) {
  if (W.cols() != x.size()) throw PreconditionError("decompose_frobenius: shape mismatch");
  if (W.norm() > b_w + 1e-12) throw PreconditionError("decompose_frobenius: ||W||_F > b_w");
  if (vec_norm(x, 2.0) > b_x + 1e-12)
    throw PreconditionError("decompose_frobenius: ||x||_2 > b_x");
  const Mat E = colspace_basis(W);
  const double r = static_cast<double>(E.cols());
  return from_span(W, x, E, std::sqrt(std::max(r, 1.0)) * b_w * b_x);
}

ConvexRepresentation decompose_col21(const Mat& W, const Vec& x, double b_w, double b_x) {
  if (W.cols() != x.size()) throw PreconditionError("decompose_col21: shape mismatch");
  if (entrywise_norm(W, 2.0, 1.0) > b_w + 1e-12)
    throw PreconditionError("decompose_col21: column-norm sum > b_w");
  if (vec_norm(x, kInf) > b_x + 1e-12)
    throw PreconditionError("decompose_col21: ||x||_inf > b_x");
  const Mat E = colspace_basis(W);
  const double r = static_cast<double>(E.cols());
  return from_span(W, x, E, std::sqrt(std::max(r, 1.0)) * b_w * b_x);
}

ConvexRepresentation decompose_basis(const Mat& W, const Vec& x, const Mat& E, double p,
                                     double q, double b_w, double b_x) {
  if (W.cols() != x.size() || E.rows() != W.rows())
    throw PreconditionError("decompose_basis: shape mismatch");
  // conjugate exponents, with the usual (1, inf) endpoints
  const double conj = conjugate_exponent(p);
  const bool conj_ok = (conj == kInf && q == kInf) || std::abs(conj - q) <= 1e-12;
  if (!conj_ok) throw std::invalid_argument("decompose_basis: (p,q) not conjugate");
  if (E.cols() > 0) {
    Mat gram = E.transpose() * E;
    gram.diagonal().array() -= 1.0;
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      throw PreconditionError("decompose_basis: basis not orthonormal");
  }
  const double wnorm = W.norm();
  if ((W - E * (E.transpose() * W)).norm() > 1e-8 * std::max(1.0, wnorm))
    throw PreconditionError("decompose_basis: col(W) escapes span(E)");
  if (entrywise_norm(W.transpose() * E, p, 1.0) > b_w + 1e-12)
    throw PreconditionError("decompose_basis: coefficient (p,1) norm > b_w");
  if (vec_norm(x, q) > b_x + 1e-12) throw PreconditionError("decompose_basis: ||x||_q > b_x");
  return from_span(W, x, E, b_w * b_x);
}

double maurey_error_bound(const ConvexRepresentation& rep, long t) {
  if (t < 1) throw std::invalid_argument("maurey_error_bound: t must be >= 1");
  const double alpha = rep.weight_sum();
  const double b2 = rep.atom_norm_bound * rep.atom_norm_bound;
  return (alpha * b2 - rep.target.squaredNorm()) / static_cast<double>(t);
}

SparseApprox sparsify(const ConvexRepresentation& rep, long t, std::uint64_t seed) {
  if (t < 1) throw std::invalid_argument("sparsify: t must be >= 1");
  rep.validate();
  const Index m = rep.atoms.cols();

  SparseApprox out;
  out.t = t;
  out.counts.assign(static_cast<std::size_t>(m), 0);
  const double alpha = rep.weight_sum();
  if (m == 0 || alpha <= 0.0) {
    // zero target (or all-zero weights): the empty draw is already exact
    out.approx = Vec::Zero(rep.target.size());
    out.sq_error = rep.target.squaredNorm();
    return out;
  }

  std::vector<double> probs(static_cast<std::size_t>(m) + 1);
  for (Index j = 0; j < m; ++j) probs[static_cast<std::size_t>(j)] = rep.weights(j);
  probs.back() = std::max(0.0, 1.0 - alpha);  // zero atom
  std::mt19937_64 rng(derive_seed(seed, 0x3a42ULL));
  std::discrete_distribution<int> pick(probs.begin(), probs.end());

  const double guarantee = maurey_error_bound(rep, t) + 1e-9;
  const long draw_cap = 1000000;
  long drawn = 0;
  while (drawn < draw_cap) {
    std::fill(out.counts.begin(), out.counts.end(), 0L);
    for (long s = 0; s < t; ++s) {
      const int j = pick(rng);
      if (j < m) ++out.counts[static_cast<std::size_t>(j)];
    }
    drawn += t;
    Vec acc = Vec::Zero(rep.target.size());
    for (Index j = 0; j < m; ++j)
      if (out.counts[static_cast<std::size_t>(j)] > 0)
        acc += rep.atoms.col(j) * static_cast<double>(out.counts[static_cast<std::size_t>(j)]);
    out.approx = acc / static_cast<double>(t);
    out.sq_error = (rep.target - out.approx).squaredNorm();
    if (out.sq_error <= guarantee) return out;
  }
  throw NumericFailure("sparsify: draw budget exhausted before meeting the guarantee");
}

double count_log_bound(Index r, long t) {
  if (r < 1 || t < 1) throw std::invalid_argument("count_log_bound: need r >= 1 and t >= 1");
  return static_cast<double>(t) * std::log(2.0 * static_cast<double>(r) + 1.0);
}

}  // namespace genbound
