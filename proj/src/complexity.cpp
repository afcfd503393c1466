#include "genbound/complexity.hpp"

#include "genbound/linalg.hpp"
#include "genbound/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace genbound {

namespace {

double clamped_log(double x) { return x > 1.0 ? std::log(x) : 0.0; }

// compensated accumulator; summation order is fixed by the caller so totals
// are independent of the thread count
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double total() const { return sum + comp; }
};

}  // namespace

void ChainingParams::validate() const {
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("chaining: a must be >= 0");
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("chaining: b must be > 0");
  if (!(q >= 0.0) || !std::isfinite(q)) throw std::invalid_argument("chaining: q must be >= 0");
  if (!(eps0 > 0.0) || !std::isfinite(eps0))
    throw std::invalid_argument("chaining: eps0 must be > 0");
  if (!(b_x > 0.0) || !std::isfinite(b_x)) throw std::invalid_argument("chaining: b_x must be > 0");
  if (!(prefactor >= 0.0) || !std::isfinite(prefactor))
    throw std::invalid_argument("chaining: prefactor must be >= 0");
  if (!(n >= 1.0) || !std::isfinite(n)) throw std::invalid_argument("chaining: n must be >= 1");
  if (eps0 > b_x * (1.0 + 1e-12)) throw std::invalid_argument("chaining: eps0 must be <= b_x");
  // the parabolic majorant must dominate the volumetric one on (0, eps0];
  // probe a log grid down to eps0 / 2^20
  constexpr int kGrid = 129;
  for (int g = 0; g < kGrid; ++g) {
    const double eps = eps0 * std::pow(2.0, -20.0 * (kGrid - 1 - g) / (kGrid - 1));
    const double lhs = a * std::log(b / (eps * eps));
    const double rhs = (q / eps) * (q / eps);
    if (lhs > rhs * (1.0 + 1e-12) + 1e-12)
      throw std::invalid_argument("chaining: a*ln(b/eps^2) exceeds q^2/eps^2 below eps0");
  }
}

double chaining_bound(const ChainingParams& p) {
  p.validate();
  const double head = std::sqrt(p.a * clamped_log(p.b / (p.b_x * p.b_x)));
  const double ladder = std::sqrt(p.a * std::log(4.0)) / p.b_x *
                        (std::ceil(std::log2(p.b_x / p.eps0)) + 1.0);
  const double tail = p.q * clamped_log(p.b_x / p.eps0);
  return 24.0 * p.prefactor / std::sqrt(p.n) * (p.eps0 * (head + ladder) + tail);
}

namespace {

// Largest eps <= eps_nominal such that a*ln(b/eps^2) <= q^2/eps^2 holds on all
// of (0, eps].  The margin q^2/eps^2 - a*ln(b/eps^2) is strictly decreasing up
// to eps = q/sqrt(a) and increasing beyond, so if it is nonnegative at the
// deepest point inside the range the whole interval is fine; otherwise the
// admissible region ends at the margin's first zero, which we bracket by
// bisection (keeping the endpoint where the margin is still nonnegative).
double crossover_cap(double a, double b, double q, double eps_nominal) {
  if (a <= 0.0) return eps_nominal;
  if (q <= 0.0)
    throw std::invalid_argument("crossover_cap: q must be > 0 when a > 0");
  const auto margin = [&](double eps) {
    return (q / eps) * (q / eps) - a * std::log(b / (eps * eps));
  };
  const double eps_deepest = std::min(eps_nominal, q / std::sqrt(a));
  if (margin(eps_deepest) >= 0.0) return eps_nominal;
  double hi = eps_deepest;
  double lo = hi;
  do {
    lo *= 0.5;
  } while (margin(lo) < 0.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (margin(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

double attention_bound_common(double b_x, double b_qk, Index r, double extra_q_factor,
                              double prefactor, double n) {
  if (!(b_x > 0.0)) throw std::invalid_argument("attention bound: b_x must be > 0");
  if (!(b_qk > 0.0)) throw std::invalid_argument("attention bound: b_qk must be > 0");
  if (r < 1) throw std::invalid_argument("attention bound: rank/dimension must be >= 1");
  if (!(n >= 1.0)) throw std::invalid_argument("attention bound: n must be >= 1");
  if (!(prefactor >= 0.0)) throw std::invalid_argument("attention bound: prefactor must be >= 0");
  const double rr = static_cast<double>(r);
  const double b3 = b_x * b_x * b_x;
  ChainingParams p;
  p.a = rr / 2.0;
  p.b = 16.0 * b3 * b3 * b_qk * b_qk * rr;
  p.q = 2.0 * b3 * b_qk * std::sqrt(std::log(2.0 * rr + 1.0)) * extra_q_factor;
  // Nominal crossover scale below which the volumetric cover is meant to be
  // the smaller branch.  The closed form overshoots the true crossover once
  // r > 8*b_x^4*b_qk^2 (for the unscaled q), so cap it at the genuine one;
  // a smaller eps0 only loosens the bound and keeps the two-regime split of
  // the chaining sum valid.
  p.eps0 = crossover_cap(p.a, p.b, p.q, std::min(b_x, 2.0 * b3 * b_qk * std::sqrt(2.0 / rr)));
  p.b_x = b_x;
  p.prefactor = prefactor;
  p.n = n;
  return chaining_bound(p);
}

}  // namespace

double attention_bound_basis11(double b_x, double b_qk, Index r_w, double prefactor, double n) {
  return attention_bound_common(b_x, b_qk, r_w, 1.0, prefactor, n);
}

double attention_bound_entrywise11(double b_x, double b_qk, Index d, double prefactor, double n) {
  return attention_bound_common(b_x, b_qk, d, 1.0, prefactor, n);
}

double attention_bound_col21(double b_x, double b_qk, Index r_w, double prefactor, double n) {
  return attention_bound_common(b_x, b_qk, r_w, std::sqrt(static_cast<double>(r_w)), prefactor,
                                n);
}

double trauger_expression(double B, double b_x, double b_qk, Index d, double n) {
  if (!(B >= 0.0)) throw std::invalid_argument("trauger_expression: B must be >= 0");
  if (!(b_x > 0.0) || !(b_qk > 0.0))
    throw std::invalid_argument("trauger_expression: radii must be > 0");
  if (d < 1) throw std::invalid_argument("trauger_expression: d must be >= 1");
  if (!(n >= 1.0)) throw std::invalid_argument("trauger_expression: n must be >= 1");
  const double dd = static_cast<double>(d);
  const double alpha = b_qk * std::sqrt(2.0 * std::log(2.0 * dd * dd + 1.0));
  const double attn = b_x * b_x * b_x * alpha / std::sqrt(n) *
                      (1.0 + clamped_log(std::sqrt(n) / (b_x * b_x * alpha)));
  const double skip = b_x * std::sqrt(std::log(2.0 * dd) / n);
  return B * (attn + skip);
}

double gap_bound(double rademacher_value, double c, double delta, double n) {
  if (!(c >= 0.0)) throw std::invalid_argument("gap_bound: c must be >= 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::invalid_argument("gap_bound: delta must lie in (0,1)");
  if (!(n >= 1.0)) throw std::invalid_argument("gap_bound: n must be >= 1");
  if (!(rademacher_value >= 0.0))
    throw std::invalid_argument("gap_bound: rademacher_value must be >= 0");
  return 2.0 * rademacher_value + 4.0 * c * std::sqrt(2.0 * std::log(4.0 / delta) / n);
}

DudleyResult dudley_generic(const std::function<double(double)>& log_cover, double c_x, double n,
                            int m) {
  if (!(c_x > 0.0)) throw std::invalid_argument("dudley_generic: c_x must be > 0");
  if (!(n >= 1.0)) throw std::invalid_argument("dudley_generic: n must be >= 1");
  if (m < 1) throw std::invalid_argument("dudley_generic: m must be >= 1");

  const double factor = 12.0 / std::sqrt(n);
  // the limit sum either converges geometrically or not at all; 900 halvings
  // stay clear of subnormal radii
  constexpr int kMaxTerms = 900;
  DudleyResult out;
  NeumaierSum acc;
  double eps = c_x / 2.0;  // eps_1
  bool converged = false;
  int j = 1;
  for (; j <= kMaxTerms; ++j) {
    const double eps_next = eps / 2.0;
    const double term = factor * (eps - eps_next) * std::sqrt(std::max(0.0, log_cover(eps)));
    acc.add(term);
    if (j == m) out.truncated = acc.total() + 2.0 * eps_next;
    if (j >= m && 2.0 * eps_next + term <= 1e-15 * (1.0 + std::abs(acc.total()))) {
      converged = true;
      ++j;
      break;
    }
    eps = eps_next;
  }
  out.m_used = std::min(j, kMaxTerms);
  out.limit = converged ? acc.total() : kInf;
  return out;
}

// ---------------------------------------------------------------------------
// head-class machinery

HeadParams HeadClass::zero_head() const {
  const Index d = x_cls.size();
  HeadParams p;
  p.w_qk = Mat::Zero(d, d);
  p.w_v = Mat::Zero(d, k);
  p.w_c = Mat::Zero(k, d);
  p.w = Vec::Zero(d);
  p.x_cls = x_cls;
  p.act = act;
  p.leaky_slope = leaky_slope;
  return p;
}

std::vector<HeadParams> HeadClass::zero_member() const {
  return std::vector<HeadParams>(static_cast<std::size_t>(heads), zero_head());
}

std::vector<HeadParams> HeadClass::random_member(std::uint64_t seed) const {
  const Index d = x_cls.size();
  std::vector<HeadParams> member;
  member.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    std::mt19937_64 rng(derive_seed(seed, 0x4eadULL, static_cast<std::uint64_t>(h)));
    HeadParams p = zero_head();
    p.w_qk = gaussian_matrix(d, d, rng);
    p.w_v = gaussian_matrix(d, k, rng);
    p.w_c = gaussian_matrix(k, d, rng);
    p.w = gaussian_matrix(d, 1, rng);
    member.push_back(project_constraints(std::move(p), constraints));
  }
  return member;
}

std::vector<HeadParams> HeadClass::project(std::vector<HeadParams> member) const {
  for (HeadParams& p : member) p = project_constraints(std::move(p), constraints);
  return member;
}

namespace {

// Batched, allocation-free evaluator for a packed multi-head parameter
// vector; algebraically identical to multihead_forward
class HeadObjective {
 public:
  HeadObjective(const HeadClass& cls, const SequenceBatch& batch)
      : cls_(cls),
        batch_(&batch),
        n_(static_cast<Index>(batch.samples.size())),
        d_(batch.d),
        k_(cls.k),
        per_head_(d_ * d_ + 2 * d_ * k_ + d_) {
    if (cls.x_cls.size() != d_)
      throw PreconditionError("head objective: x_cls dimension must match batch");
    if (cls.heads < 1) throw PreconditionError("head objective: heads must be >= 1");
    u_.resize(d_);
    s_.resize(batch.T);
    z_.resize(d_);
    hid_.resize(k_);
    wcw_.resize(k_);
    y_.resize(n_);
  }

  Index dim() const { return per_head_ * cls_.heads; }
  Index samples() const { return n_; }

  Vec pack(const std::vector<HeadParams>& member) const {
    Vec theta(dim());
    Index off = 0;
    for (const HeadParams& p : member) {
      std::copy(p.w_qk.data(), p.w_qk.data() + d_ * d_, theta.data() + off);
      off += d_ * d_;
      std::copy(p.w_v.data(), p.w_v.data() + d_ * k_, theta.data() + off);
      off += d_ * k_;
      std::copy(p.w_c.data(), p.w_c.data() + k_ * d_, theta.data() + off);
      off += k_ * d_;
      std::copy(p.w.data(), p.w.data() + d_, theta.data() + off);
      off += d_;
    }
    return theta;
  }

  std::vector<HeadParams> unpack(const Vec& theta) const {
    std::vector<HeadParams> member(static_cast<std::size_t>(cls_.heads), cls_.zero_head());
    Index off = 0;
    for (HeadParams& p : member) {
      p.w_qk = Eigen::Map<const Mat>(theta.data() + off, d_, d_);
      off += d_ * d_;
      p.w_v = Eigen::Map<const Mat>(theta.data() + off, d_, k_);
      off += d_ * k_;
      p.w_c = Eigen::Map<const Mat>(theta.data() + off, k_, d_);
      off += k_ * d_;
      p.w = Eigen::Map<const Vec>(theta.data() + off, d_);
      off += d_;
    }
    return member;
  }

  Vec project(const Vec& theta) const { return pack(cls_.project(unpack(theta))); }

  // fills y with per-sample multi-head outputs
  void outputs(const Vec& theta, Vec& y) {
    y_.setZero();
    Index off = 0;
    for (int h = 0; h < cls_.heads; ++h) {
      Eigen::Map<const Mat> wqk(theta.data() + off, d_, d_);
      off += d_ * d_;
      Eigen::Map<const Mat> wv(theta.data() + off, d_, k_);
      off += d_ * k_;
      Eigen::Map<const Mat> wc(theta.data() + off, k_, d_);
      off += k_ * d_;
      Eigen::Map<const Vec> w(theta.data() + off, d_);
      off += d_;
      u_.noalias() = wqk.transpose() * cls_.x_cls;
      wcw_.noalias() = wc * w;
      for (Index i = 0; i < n_; ++i) {
        const Mat& X = batch_->samples[static_cast<std::size_t>(i)];
        s_.noalias() = X * u_;
        const double mx = s_.maxCoeff();
        s_ = (s_.array() - mx).exp();
        s_ /= s_.sum();
        z_.noalias() = X.transpose() * s_;
        hid_.noalias() = wv.transpose() * z_;
        apply_activation(hid_);
        y_[i] += wcw_.dot(hid_);
      }
    }
    y = y_;
  }

  double weighted(const Vec& theta, const Vec& weights) {
    outputs(theta, y_);
    return y_.dot(weights);
  }

 private:
  void apply_activation(Vec& v) const {
    switch (cls_.act) {
      case Activation::relu:
        v = v.cwiseMax(0.0);
        return;
      case Activation::leaky_relu: {
        const double sl = cls_.leaky_slope;
        v = v.unaryExpr([sl](double t) { return t > 0.0 ? t : sl * t; });
        return;
      }
      case Activation::tanh:
        v = v.array().tanh();
        return;
      case Activation::identity:
        return;
    }
  }

  const HeadClass& cls_;
  const SequenceBatch* batch_;
  Index n_, d_, k_, per_head_;
  Vec u_, s_, z_, hid_, wcw_, y_;
};

// adaptive projected ascent with a normalized step and in-iteration
// backtracking; returns the best objective value seen
template <class Objective, class Projector>
double adaptive_pga(Objective&& obj, Projector&& project, Vec theta, const PgaOptions& opt,
                    Vec* argmax = nullptr) {
  theta = project(theta);
  double best = obj(theta);
  if (argmax) *argmax = theta;
  double step = opt.init_step;
  Vec grad(theta.size());
  Vec probe = theta;
  for (int it = 0; it < opt.steps; ++it) {
    for (Index j = 0; j < theta.size(); ++j) {
      const double save = probe[j];
      probe[j] = save + opt.fd_step;
      const double up = obj(probe);
      probe[j] = save - opt.fd_step;
      const double dn = obj(probe);
      probe[j] = save;
      grad[j] = (up - dn) / (2.0 * opt.fd_step);
    }
    const double gn = grad.norm();
    if (!(gn > 0.0) || !std::isfinite(gn)) break;
    bool advanced = false;
    for (int bt = 0; bt < 6 && !advanced; ++bt) {
      Vec cand = project(theta + (step / gn) * grad);
      const double val = obj(cand);
      if (val > best) {
        theta = std::move(cand);
        probe = theta;
        best = val;
        if (argmax) *argmax = theta;
        step *= 1.5;
        advanced = true;
      } else {
        step *= 0.5;
      }
    }
    if (step < 1e-12) break;
  }
  return best;
}

}  // namespace

double HeadClassOracle::max_correlation(const Vec& sigma, const SequenceBatch& batch,
                                        int restarts, std::uint64_t seed) const {
  HeadObjective objective(cls, batch);
  if (sigma.size() != objective.samples())
    throw PreconditionError("max_correlation: sigma length must match batch");
  const Vec weights = sigma / static_cast<double>(objective.samples());
  auto value = [&](const Vec& th) { return objective.weighted(th, weights); };
  auto proj = [&](const Vec& th) { return objective.project(th); };

  double best = -kInf;
  const int total = std::max(restarts, 1);
  for (int r = 0; r < total; ++r) {
    // restart 0 ascends from the zero member, anchoring the value at >= 0
    Vec theta0 = (r == 0)
                     ? objective.pack(cls.zero_member())
                     : objective.pack(cls.random_member(
                           derive_seed(seed, 0xaafULL, static_cast<std::uint64_t>(r))));
    best = std::max(best, adaptive_pga(value, proj, std::move(theta0), opt));
  }
  return best;
}

RademacherEstimate mc_rademacher(const SupOracle& oracle, const SequenceBatch& batch,
                                 int sigma_draws, int restarts, std::uint64_t seed) {
  if (sigma_draws < 1) throw std::invalid_argument("mc_rademacher: sigma_draws must be >= 1");
  const Index n = static_cast<Index>(batch.samples.size());
  if (n < 1) throw PreconditionError("mc_rademacher: batch must be nonempty");

  std::vector<double> maxima(static_cast<std::size_t>(sigma_draws));
  parallel_for(static_cast<std::size_t>(sigma_draws), [&](std::size_t draw) {
    // sign draws depend only on (seed, draw), never on the class under test,
    // so nested classes see identical sign patterns
    std::mt19937_64 rng(derive_seed(seed, 0x51f0aULL, draw));
    Vec sigma(n);
    for (Index i = 0; i < n; ++i) sigma[i] = (rng() & 1ull) ? 1.0 : -1.0;
    maxima[draw] = oracle.max_correlation(sigma, batch, restarts,
                                          derive_seed(seed, 0x0a7eULL, draw));
  });

  NeumaierSum acc;
  for (double v : maxima) acc.add(v);
  RademacherEstimate est;
  est.value = acc.total() / sigma_draws;
  est.n = n;
  est.sigma_draws = sigma_draws;
  est.restarts = restarts;
  est.opt_steps = oracle.opt_steps();
  est.is_lower_bound = true;
  return est;
}

GapReport measure_gap(const HeadClass& cls, const SequenceBatch& train, const Vec& train_labels,
                      const SequenceBatch& holdout, const Vec& holdout_labels, double c,
                      double delta, double rademacher_bound, const PgaOptions& opt,
                      std::uint64_t seed) {
  const Index n = static_cast<Index>(train.samples.size());
  const Index m = static_cast<Index>(holdout.samples.size());
  if (n < 1 || m < 1) throw PreconditionError("measure_gap: empty batch");
  if (train_labels.size() != n || holdout_labels.size() != m)
    throw PreconditionError("measure_gap: label length mismatch");
  if (!(c >= 0.0)) throw std::invalid_argument("measure_gap: c must be >= 0");

  HeadObjective objective(cls, train);
  Vec y(n);
  auto neg_loss = [&](const Vec& th) {
    objective.outputs(th, y);
    NeumaierSum acc;
    for (Index i = 0; i < n; ++i) acc.add(std::min(std::abs(y[i] - train_labels[i]), c));
    return -acc.total() / static_cast<double>(n);
  };
  auto proj = [&](const Vec& th) { return objective.project(th); };

  // descend from the zero member plus two random restarts
  double best = -kInf;
  Vec theta_best;
  for (int r = 0; r < 3; ++r) {
    Vec theta0 = (r == 0)
                     ? objective.pack(cls.zero_member())
                     : objective.pack(cls.random_member(
                           derive_seed(seed, 0x7a1ULL, static_cast<std::uint64_t>(r))));
    Vec arg;
    const double val = adaptive_pga(neg_loss, proj, std::move(theta0), opt, &arg);
    if (val > best) {
      best = val;
      theta_best = std::move(arg);
    }
  }

  GapReport report;
  report.c = c;
  report.delta = delta;
  report.train_loss = -best;

  HeadObjective hold_objective(cls, holdout);
  Vec yh(m);
  hold_objective.outputs(theta_best, yh);
  NeumaierSum acc;
  for (Index i = 0; i < m; ++i) acc.add(std::min(std::abs(yh[i] - holdout_labels[i]), c));
  const double pop = acc.total() / static_cast<double>(m);
  NeumaierSum var_acc;
  for (Index i = 0; i < m; ++i) {
    const double dev = std::min(std::abs(yh[i] - holdout_labels[i]), c) - pop;
    var_acc.add(dev * dev);
  }
  report.population_loss_estimate = pop;
  report.proxy_std_error =
      m > 1 ? std::sqrt(var_acc.total() / (static_cast<double>(m) * (m - 1.0))) : 0.0;
  report.gap = std::abs(pop - report.train_loss);
  report.rademacher_bound = rademacher_bound;
  report.bound = gap_bound(rademacher_bound, c, delta, static_cast<double>(n));
  return report;
}

}  // namespace genbound
