#pragma once

// Closed-form log covering-number bounds for the constrained linear classes
// in linalg.hpp, plus the crossover lemma that orders the two regimes.
// All logs are natural; negative raw values clamp to 0 (a log cardinality
// is never negative).

#include "genbound/types.hpp"

namespace genbound {

struct BoundQuery {
  double b_x = 1.0;  // input-ball radius
  double b_w = 1.0;  // class norm-ball radius
  Index r_w = 1;     // rank / span-dimension parameter
  Index d = 0;       // input dimension (only the full-rank / row corollaries use it)
  Index k = 0;       // output dimension
  double eps = 1.0;  // covering radius (> 0)
};

enum class BoundKind {
  volumetric_spectral,  // grid count in an r_w-dim span, spectral ball, l2 inputs
  maurey_frobenius,     // sparsification count, Frobenius ball + rank cap, l2 inputs
  maurey_col21,         // same count, column-2-norm-sum ball + rank cap, linf inputs
  maurey_basis,         // basis-coefficient (p,1) ball, lq inputs
  col21_full_rank,      // maurey_col21 with r_w = min(d,k) (no rank cap assumed)
  rows_p1_general,      // maurey_basis with identity basis, r_w -> k
  entrywise_11,         // (1,1)-ball specialisation, l1 inputs
  volumetric_col21,     // volumetric count under column-norm/linf hypotheses
};

enum class Regime { volumetric, maurey };

struct BoundResult {
  double log_cover = 0.0;
  BoundKind kind = BoundKind::volumetric_spectral;
  Regime regime = Regime::volumetric;
};

// (r_w/2) * ln(4 b_x^2 b_w^2 r_w / eps^2), clamped at 0
BoundResult volumetric_log_cover(const BoundQuery& q);

// (r_w b_x^2 b_w^2 / eps^2) * ln(2 r_w + 1)
BoundResult maurey_log_cover_frobenius(const BoundQuery& q);

// same value, column-sum hypotheses
BoundResult maurey_log_cover_col21(const BoundQuery& q);

// (b_x^2 b_w^2 / eps^2) * ln(2 r_w + 1)
BoundResult maurey_log_cover_basis(const BoundQuery& q);

// volumetric form under column-sum/linf hypotheses (same closed form)
BoundResult volumetric_log_cover_col21(const BoundQuery& q);

// corollary evaluators
BoundResult maurey_log_cover_col21_full_rank(const BoundQuery& q);  // r_w := min(d,k)
BoundResult maurey_log_cover_rows(const BoundQuery& q);             // r_w := k
BoundResult maurey_log_cover_entrywise11(const BoundQuery& q);      // r_w := k, (1,1) ball

// pointwise minimum; ties go to the volumetric candidate
BoundResult best_bound(const BoundResult& volumetric, const BoundResult& maurey);

// Whether (c/2) ln(4 c y) < y ln(2c+1) holds at (c, y); defined for
// c >= (e-1)/2 and y >= c/2 (std::domain_error outside that region).
// The inequality is true throughout the region only for c <= (1+sqrt(3))/2;
// for larger c it fails in a band just above y = c/2 and only holds again
// past the genuine crossover, so it cannot be assumed near the boundary.
// The regime ordering best_bound relies on (volumetric below maurey for
// eps <= b_x b_w sqrt(2/r_w)) is the r-weaker comparison
// (c/2) ln(4 c y) < c y ln(2c+1), which does hold on the whole region.
bool volumetric_below_maurey_check(double c, double y);

}  // namespace genbound
