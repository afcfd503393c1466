#pragma once

// Rademacher-complexity estimation and the closed-form chaining bounds for
// the attention class, plus the generalization-gap harness.
//
// The chaining evaluator assumes a hybrid log-covering majorant
//   log N(eps) <= min{ a ln(b / eps^2), q^2 / eps^2 },
// splits the dyadic sum at eps0 and evaluates
//   24 * prefactor / sqrt(n) * ( eps0 * [ sqrt(a ln(b/b_x^2))
//        + sqrt(a ln 4)/b_x * (ceil(log2(b_x/eps0)) + 1) ]
//        + q * ln(b_x/eps0) ),
// with every log clamped at 0.  The prefactor is deliberately a single
// opaque product supplied by the caller.

#include "genbound/attention.hpp"
#include "genbound/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace genbound {

struct ChainingParams {
  double a = 0.0;
  double b = 1.0;
  double q = 0.0;
  double eps0 = 1.0;   // split point, 0 < eps0 <= b_x
  double b_x = 1.0;    // input radius; the dyadic ladder starts at b_x
  double prefactor = 1.0;
  double n = 1.0;      // sample count

  // checks eps0 <= b_x and the majorant crossover a ln(b/e^2) <= q^2/e^2 on a
  // log grid of e <= eps0; std::invalid_argument on violation
  void validate() const;
};

double chaining_bound(const ChainingParams& p);

// closed-form class bounds, one per score-matrix constraint kind
// (basis-coefficient (1,1) ball with l1 inputs; entrywise (1,1) ball; column
// 2-norm-sum ball with linf inputs — the last carries an extra sqrt(r_w) in q)
double attention_bound_basis11(double b_x, double b_qk, Index r_w, double prefactor, double n);
double attention_bound_entrywise11(double b_x, double b_qk, Index d, double prefactor, double n);
double attention_bound_col21(double b_x, double b_qk, Index r_w, double prefactor, double n);

// comparator expression from Trauger & Tewari's sequence-length-independent
// bound, with unit implied constant:
//   B * ( b_x^3 alpha / sqrt(n) * (1 + ln(sqrt(n)/(b_x^2 alpha)))
//         + b_x sqrt(ln(2d)/n) ),  alpha = b_qk sqrt(2 ln(2 d^2 + 1))
double trauger_expression(double B, double b_x, double b_qk, Index d, double n);

// two-sided uniform-deviation bound: 2 R + 4 c sqrt(2 ln(4/delta) / n)
double gap_bound(double rademacher_value, double c, double delta, double n);

// ---------------------------------------------------------------------------
// generic dyadic chaining sum

struct DudleyResult {
  double truncated = 0.0;  // 2 eps_{m+1} + (12/sqrt(n)) sum_{j=1}^m (...)
  double limit = 0.0;      // m -> infinity value of the same sum
  int m_used = 0;          // terms accumulated for the limit
};

// eps_j = c_x / 2^j; log_cover is clamped at 0 before the square root
DudleyResult dudley_generic(const std::function<double(double)>& log_cover, double c_x,
                            double n, int m);

// ---------------------------------------------------------------------------
// Monte-Carlo Rademacher estimation

struct RademacherEstimate {
  double value = 0.0;
  Index n = 0;
  int sigma_draws = 0;
  int restarts = 0;
  int opt_steps = 0;
  bool is_lower_bound = true;  // optimisation shortfall only pulls it down
};

// Approximates sup over a function class of (1/n) sum_i sigma_i f(X_i).
// Implementations must stay at or below the true supremum.
struct SupOracle {
  virtual ~SupOracle() = default;
  virtual double max_correlation(const Vec& sigma, const SequenceBatch& batch, int restarts,
                                 std::uint64_t seed) const = 0;
  virtual int opt_steps() const { return 0; }
};

struct PgaOptions {
  int steps = 50;
  double fd_step = 1e-5;    // central-difference half width
  double init_step = 0.25;  // initial ascent step, adapted multiplicatively
};

// Feasible set of H identical-constraint heads with a shared fixed x_cls.
struct HeadClass {
  ConstraintSet constraints;
  Index k = 1;  // hidden width
  Activation act = Activation::relu;
  double leaky_slope = 0.01;
  Vec x_cls;
  int heads = 1;

  HeadParams zero_head() const;
  std::vector<HeadParams> zero_member() const;
  std::vector<HeadParams> random_member(std::uint64_t seed) const;  // projected Gaussian
  std::vector<HeadParams> project(std::vector<HeadParams> member) const;
};

// Projected-gradient-ascent oracle over a head class; restart 0 starts from
// the zero member so the returned value is never negative.
struct HeadClassOracle final : SupOracle {
  HeadClass cls;
  PgaOptions opt;

  explicit HeadClassOracle(HeadClass c, PgaOptions o = {}) : cls(std::move(c)), opt(o) {}
  double max_correlation(const Vec& sigma, const SequenceBatch& batch, int restarts,
                         std::uint64_t seed) const override;
  int opt_steps() const override { return opt.steps; }
};

// Averages the oracle value over iid sign draws; sign draws depend only on
// (seed, draw index), draws run in parallel under GENBOUND_THREADS, and the
// average is compensated and accumulated in draw order, so results are
// deterministic and thread-count independent.
RademacherEstimate mc_rademacher(const SupOracle& oracle, const SequenceBatch& batch,
                                 int sigma_draws, int restarts, std::uint64_t seed);

// ---------------------------------------------------------------------------
// train/holdout gap harness

struct GapReport {
  double train_loss = 0.0;
  double population_loss_estimate = 0.0;  // holdout proxy
  double gap = 0.0;                       // |holdout - train|
  double rademacher_bound = 0.0;
  double bound = 0.0;  // 2 * rademacher_bound + 4 c sqrt(2 ln(4/delta)/n)
  double c = 0.0;
  double delta = 0.0;
  double proxy_std_error = 0.0;  // holdout standard error (for test slack)
};

// Trains the class on (train, labels) by projected gradient descent on the
// c-truncated absolute loss, evaluates the holdout proxy, and reports the
// two-sided bound with the supplied class Rademacher bound.
GapReport measure_gap(const HeadClass& cls, const SequenceBatch& train, const Vec& train_labels,
                      const SequenceBatch& holdout, const Vec& holdout_labels, double c,
                      double delta, double rademacher_bound, const PgaOptions& opt,
                      std::uint64_t seed);

}  // namespace genbound
