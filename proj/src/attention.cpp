#include "genbound/attention.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <random>

namespace genbound {

namespace {

double apply_act(Activation act, double slope, double v) {
  switch (act) {
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::leaky_relu: return v > 0.0 ? v : slope * v;
    case Activation::tanh: return std::tanh(v);
    case Activation::identity: return v;
  }
  throw std::logic_error("apply_act: bad activation");
}

void check_head(const HeadParams& p) {
  const Index d = p.x_cls.size();
  if (p.w_qk.rows() != d || p.w_qk.cols() != d)
    throw PreconditionError("head: w_qk must be d x d");
  if (p.w_v.rows() != d) throw PreconditionError("head: w_v must be d x k");
  const Index k = p.w_v.cols();
  if (p.w_c.rows() != k || p.w_c.cols() != d)
    throw PreconditionError("head: w_c must be k x d");
  if (p.w.size() != d) throw PreconditionError("head: w must have length d");
}

}  // namespace

double activation_lipschitz(Activation act, double leaky_slope) {
  switch (act) {
    case Activation::relu:
    case Activation::tanh:
    case Activation::identity:
      return 1.0;
    case Activation::leaky_relu:
      return std::max(1.0, std::abs(leaky_slope));
  }
  throw std::logic_error("activation_lipschitz: bad activation");
}

Mat row_softmax(const Mat& scores) {
  Mat out(scores.rows(), scores.cols());
  for (Index i = 0; i < scores.rows(); ++i) {
    const double mx = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - mx).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double head_forward(const HeadParams& p, const Mat& X) {
  check_head(p);
  if (X.cols() != p.x_cls.size()) throw PreconditionError("head_forward: X must be T x d");
  const Vec scores = X * (p.w_qk.transpose() * p.x_cls);   // T
  const Vec mix = row_softmax(scores.transpose()).transpose();  // T, sums to 1
  const Vec pooled = X.transpose() * mix;                   // d
  Vec hidden = p.w_v.transpose() * pooled;                  // k
  for (Index j = 0; j < hidden.size(); ++j) hidden(j) = apply_act(p.act, p.leaky_slope, hidden(j));
  return p.w.dot(p.w_c.transpose() * hidden);
}

double multihead_forward(const std::vector<HeadParams>& heads, const Mat& X) {
  double acc = 0.0;
  for (const HeadParams& h : heads) acc += head_forward(h, X);
  return acc;
}

HeadParams project_constraints(HeadParams p, const ConstraintSet& c) {
  check_head(p);
  c.qk.validate();
  if (c.qk.d != p.x_cls.size() || c.qk.k != p.x_cls.size())
    throw PreconditionError("project_constraints: qk spec must be d x d");

  // score matrix: span, then rank, then radius; each stage is skipped when
  // already satisfied so the whole map is bitwise idempotent
  if (c.qk.basis) {
    const Mat resid = p.w_qk - (*c.qk.basis) * (c.qk.basis->transpose() * p.w_qk);
    if (resid.norm() > 1e-8 * std::max(1.0, p.w_qk.norm()))
      p.w_qk = (*c.qk.basis) * (c.qk.basis->transpose() * p.w_qk);
  }
  const Index cap = c.qk.effective_rank_cap();
  if (cap < std::min(p.w_qk.rows(), p.w_qk.cols()) && numerical_rank(p.w_qk) > cap) {
    Eigen::BDCSVD<Mat> svd(p.w_qk, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index r = std::min<Index>(cap, svd.singularValues().size());
    p.w_qk = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
             svd.matrixV().leftCols(r).transpose();
  }
  const double qk_norm = class_norm(c.qk, p.w_qk);
  if (qk_norm > c.qk.b_w && qk_norm > 0.0) p.w_qk *= c.qk.b_w / qk_norm;

  const double wn = vec_norm(p.w, 1.0);
  if (wn > c.b_w && wn > 0.0) p.w *= c.b_w / wn;
  const double cn = entrywise_norm(p.w_c, 1.0, kInf);
  if (cn > c.b_wc && cn > 0.0) p.w_c *= c.b_wc / cn;
  const double vn = entrywise_norm(p.w_v, 1.0, kInf);
  if (vn > c.b_wv && vn > 0.0) p.w_v *= c.b_wv / vn;
  return p;
}

bool satisfies_constraints(const HeadParams& p, const ConstraintSet& c, double slack) {
  if (vec_norm(p.w, 1.0) > c.b_w + slack) return false;
  if (entrywise_norm(p.w_c, 1.0, kInf) > c.b_wc + slack) return false;
  if (entrywise_norm(p.w_v, 1.0, kInf) > c.b_wv + slack) return false;
  if (class_norm(c.qk, p.w_qk) > c.qk.b_w + slack) return false;
  if (numerical_rank(p.w_qk) > c.qk.effective_rank_cap()) return false;
  if (c.qk.basis) {
    const Mat resid = p.w_qk - (*c.qk.basis) * (c.qk.basis->transpose() * p.w_qk);
    if (resid.norm() > 1e-8 * std::max(1.0, p.w_qk.norm())) return false;
  }
  return true;
}

bool attention_lipschitz_check(const Mat& W1, const Mat& W2, const Mat& X, const Vec& x_cls,
                               double b_x, double slack) {
  const Vec u1 = W1.transpose() * x_cls;
  const Vec u2 = W2.transpose() * x_cls;
  const Vec s1 = row_softmax((X * u1).transpose()).transpose();
  const Vec s2 = row_softmax((X * u2).transpose()).transpose();
  const double lhs = vec_norm(X.transpose() * (s1 - s2), kInf);
  const double rhs = 2.0 * b_x * b_x * (u1 - u2).norm();
  return lhs <= rhs + slack;
}

SequenceBatch sample_batch(Index n, Index T, Index d, double input_exponent, double b_x,
                           std::uint64_t seed) {
  if (n < 0 || T < 1 || d < 1) throw std::invalid_argument("sample_batch: bad sizes");
  SequenceBatch batch;
  batch.T = T;
  batch.d = d;
  batch.samples.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 0xba7cULL, static_cast<std::uint64_t>(i)));
    Mat X(T, d);
    for (Index t = 0; t < T; ++t)
      X.row(t) = sample_in_ball(d, input_exponent, b_x, rng).transpose();
    batch.samples.push_back(std::move(X));
  }
  return batch;
}

}  // namespace genbound
