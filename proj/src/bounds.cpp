#include "genbound/bounds.hpp"

#include <cmath>

namespace genbound {

namespace {

void check_query(const BoundQuery& q, bool needs_dims) {
  if (!(q.eps > 0.0)) throw std::invalid_argument("bound query: eps must be > 0");
  if (!(q.b_x >= 0.0) || !(q.b_w >= 0.0))
    throw std::invalid_argument("bound query: radii must be >= 0");
  if (q.r_w < 1 && !needs_dims) throw std::invalid_argument("bound query: r_w must be >= 1");
  if (needs_dims && (q.d < 1 || q.k < 1))
    throw std::invalid_argument("bound query: d and k must be >= 1");
}

double volumetric_value(double b_x, double b_w, Index r_w, double eps) {
  const double arg = 4.0 * b_x * b_x * b_w * b_w * static_cast<double>(r_w) / (eps * eps);
  if (arg <= 1.0) return 0.0;  // log cardinality clamps at 0
  return 0.5 * static_cast<double>(r_w) * std::log(arg);
}

double maurey_value(double b_x, double b_w, double t_scale, Index r_w, double eps) {
  return t_scale * b_x * b_x * b_w * b_w / (eps * eps) *
         std::log(2.0 * static_cast<double>(r_w) + 1.0);
}

}  // namespace

BoundResult volumetric_log_cover(const BoundQuery& q) {
  check_query(q, false);
  return {volumetric_value(q.b_x, q.b_w, q.r_w, q.eps), BoundKind::volumetric_spectral,
          Regime::volumetric};
}

BoundResult maurey_log_cover_frobenius(const BoundQuery& q) {
  check_query(q, false);
  return {maurey_value(q.b_x, q.b_w, static_cast<double>(q.r_w), q.r_w, q.eps),
          BoundKind::maurey_frobenius, Regime::maurey};
}

BoundResult maurey_log_cover_col21(const BoundQuery& q) {
  check_query(q, false);
  return {maurey_value(q.b_x, q.b_w, static_cast<double>(q.r_w), q.r_w, q.eps),
          BoundKind::maurey_col21, Regime::maurey};
}

BoundResult maurey_log_cover_basis(const BoundQuery& q) {
  check_query(q, false);
  return {maurey_value(q.b_x, q.b_w, 1.0, q.r_w, q.eps), BoundKind::maurey_basis,
          Regime::maurey};
}

BoundResult volumetric_log_cover_col21(const BoundQuery& q) {
  check_query(q, false);
  return {volumetric_value(q.b_x, q.b_w, q.r_w, q.eps), BoundKind::volumetric_col21,
          Regime::volumetric};
}

BoundResult maurey_log_cover_col21_full_rank(const BoundQuery& q) {
  check_query(q, true);
  const Index r = std::min(q.d, q.k);
  return {maurey_value(q.b_x, q.b_w, static_cast<double>(r), r, q.eps),
          BoundKind::col21_full_rank, Regime::maurey};
}

BoundResult maurey_log_cover_rows(const BoundQuery& q) {
  check_query(q, true);
  return {maurey_value(q.b_x, q.b_w, 1.0, q.k, q.eps), BoundKind::rows_p1_general,
          Regime::maurey};
}

BoundResult maurey_log_cover_entrywise11(const BoundQuery& q) {
  check_query(q, true);
  return {maurey_value(q.b_x, q.b_w, 1.0, q.k, q.eps), BoundKind::entrywise_11,
          Regime::maurey};
}

BoundResult best_bound(const BoundResult& volumetric, const BoundResult& maurey) {
  if (volumetric.regime != Regime::volumetric || maurey.regime != Regime::maurey)
    throw PreconditionError("best_bound: arguments must be one bound per regime");
  return (volumetric.log_cover <= maurey.log_cover) ? volumetric : maurey;
}

bool volumetric_below_maurey_check(double c, double y) {
  const double c_min = 0.5 * (std::exp(1.0) - 1.0);
  if (!(c >= c_min)) throw std::domain_error("volumetric_below_maurey_check: need c >= (e-1)/2");
  if (!(y >= 0.5 * c)) throw std::domain_error("volumetric_below_maurey_check: need y >= c/2");
  return 0.5 * c * std::log(4.0 * c * y) < y * std::log(2.0 * c + 1.0);
}

}  // namespace genbound
