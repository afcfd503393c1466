#include "genbound/covering.hpp"

#include <bit>
#include <cmath>
#include <queue>

namespace genbound {

namespace {

constexpr Index kGreedyPointCap = 60000;   // m^2/8 bytes of adjacency
constexpr double kGridSizeCap = 1e8;

// row-major bitset adjacency: bit j of row i set iff ||p_i - p_j|| <= eps
struct BitAdjacency {
  Index m = 0, words = 0;
  std::vector<std::uint64_t> bits;

  void build(const Mat& P, double eps) {
    m = P.cols();
    words = (m + 63) / 64;
    bits.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(words), 0);
    const Vec sqn = P.colwise().squaredNorm().transpose();
    const double thr = eps * eps;
    const Index block = 256;
    Mat G;
    for (Index c0 = 0; c0 < m; c0 += block) {
      const Index bc = std::min(block, m - c0);
      G.noalias() = P.transpose() * P.middleCols(c0, bc);  // m x bc
      for (Index jb = 0; jb < bc; ++jb) {
        const Index j = c0 + jb;
        const std::size_t word = static_cast<std::size_t>(j >> 6);
        const std::uint64_t mask = 1ULL << (j & 63);
        for (Index i = 0; i < m; ++i) {
          const double d2 = sqn(i) + sqn(j) - 2.0 * G(i, jb);
          if (d2 <= thr)
            bits[static_cast<std::size_t>(i) * static_cast<std::size_t>(words) + word] |= mask;
        }
      }
    }
  }

  const std::uint64_t* row(Index i) const {
    return bits.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(words);
  }
};

Index popcount_and(const std::uint64_t* a, const std::uint64_t* b, Index words) {
  Index c = 0;
  for (Index w = 0; w < words; ++w) c += std::popcount(a[w] & b[w]);
  return c;
}

}  // namespace

ImageCloud build_cloud(const MatrixClassSpec& spec, const std::vector<Vec>& inputs,
                       Index n_matrices, std::uint64_t seed,
                       std::optional<double> declared_b_x) {
  spec.validate();
  if (n_matrices < 0) throw std::invalid_argument("build_cloud: n_matrices must be >= 0");
  const double in_p = spec.input_exponent();
  double b_x = declared_b_x.value_or(0.0);
  for (const Vec& x : inputs) {
    if (x.size() != spec.d) throw PreconditionError("build_cloud: input dimension mismatch");
    const double nx = vec_norm(x, in_p);
    if (declared_b_x && nx > *declared_b_x + 1e-9)
      throw PreconditionError("build_cloud: input escapes the declared ball");
    if (!declared_b_x) b_x = std::max(b_x, nx);
  }

  ImageCloud cloud;
  cloud.class_spec = spec;
  cloud.n_inputs = static_cast<Index>(inputs.size());
  cloud.n_matrices = n_matrices;
  cloud.b_x = b_x;
  cloud.points.resize(spec.k, n_matrices * cloud.n_inputs);
  for (Index w = 0; w < n_matrices; ++w) {
    const Mat W = sample_class_member(spec, derive_seed(seed, 0xc10dULL, static_cast<std::uint64_t>(w)));
    for (Index i = 0; i < cloud.n_inputs; ++i)
      cloud.points.col(w * cloud.n_inputs + i) = W * inputs[static_cast<std::size_t>(i)];
  }
  return cloud;
}

CoverEstimate greedy_cover(const ImageCloud& cloud, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("greedy_cover: eps must be >= 0");
  const Index m = cloud.points.cols();
  CoverEstimate est;
  est.eps = eps;
  est.method = CoverMethod::greedy_internal;
  if (m == 0) {
    est.centers.resize(cloud.points.rows(), 0);
    return est;
  }
  if (m > kGreedyPointCap) throw SizeLimitError("greedy_cover: cloud beyond adjacency cap");

  BitAdjacency adj;
  adj.build(cloud.points, eps);
  const Index words = adj.words;

  std::vector<std::uint64_t> uncovered(static_cast<std::size_t>(words), ~0ULL);
  if (m & 63) uncovered.back() = (1ULL << (m & 63)) - 1;  // mask off tail bits
  Index n_uncovered = m;

  // lazy max-heap of (count upper bound, index); counts only decrease, so a
  // popped entry whose recount is unchanged is the exact greedy choice with
  // lowest-index tie-breaking.
  using Entry = std::pair<Index, Index>;  // (count, index), ordered below
  auto cmp = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first < b.first;  // larger count first
    return a.second > b.second;                        // then smaller index
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (Index i = 0; i < m; ++i) heap.push({popcount_and(adj.row(i), uncovered.data(), words), i});

  std::vector<Index> centers;
  while (n_uncovered > 0) {
    auto [cnt, i] = heap.top();
    heap.pop();
    const Index fresh = popcount_and(adj.row(i), uncovered.data(), words);
    if (fresh < cnt) {
      if (fresh > 0) heap.push({fresh, i});
      continue;
    }
    centers.push_back(i);
    const std::uint64_t* r = adj.row(i);
    for (Index w = 0; w < words; ++w) uncovered[static_cast<std::size_t>(w)] &= ~r[w];
    n_uncovered -= fresh;
  }

  est.size = static_cast<Index>(centers.size());
  est.centers.resize(cloud.points.rows(), est.size);
  for (Index c = 0; c < est.size; ++c)
    est.centers.col(c) = cloud.points.col(centers[static_cast<std::size_t>(c)]);
  return est;
}

CoverEstimate exact_min_cover(const ImageCloud& cloud, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("exact_min_cover: eps must be >= 0");
  const Index m = cloud.points.cols();
  if (m > 16) throw SizeLimitError("exact_min_cover: more than 16 points");
  CoverEstimate est;
  est.eps = eps;
  est.method = CoverMethod::exact_min;
  if (m == 0) {
    est.centers.resize(cloud.points.rows(), 0);
    return est;
  }

  std::vector<std::uint32_t> cov(static_cast<std::size_t>(m), 0);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      if ((cloud.points.col(i) - cloud.points.col(j)).norm() <= eps)
        cov[static_cast<std::size_t>(i)] |= (1u << j);

  const std::uint32_t full = (m == 32) ? ~0u : ((1u << m) - 1u);
  std::uint32_t best_mask = full;
  int best = m + 1;
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const int sz = std::popcount(mask);
    if (sz >= best) continue;
    std::uint32_t reach = 0;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) reach |= cov[static_cast<std::size_t>(i)];
    if (reach == full) {
      best = sz;
      best_mask = mask;
    }
  }

  est.size = best;
  est.centers.resize(cloud.points.rows(), best);
  Index c = 0;
  for (Index i = 0; i < m; ++i)
    if (best_mask & (1u << i)) est.centers.col(c++) = cloud.points.col(i);
  return est;
}

CoverEstimate volumetric_grid_cover(double radius, Index dim, double eps) {
  if (!(radius >= 0.0)) throw std::invalid_argument("volumetric_grid_cover: radius < 0");
  if (dim < 1) throw std::invalid_argument("volumetric_grid_cover: dim must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("volumetric_grid_cover: eps must be > 0");

  CoverEstimate est;
  est.eps = eps;
  est.method = CoverMethod::volumetric_grid;
  if (radius == 0.0) {
    est.centers = Mat::Zero(dim, 1);
    est.size = 1;
    return est;
  }

  const double h = 2.0 * eps / std::sqrt(static_cast<double>(dim));
  const Index per_axis = std::max<Index>(1, static_cast<Index>(std::ceil(2.0 * radius / h)));
  if (std::pow(static_cast<double>(per_axis), static_cast<double>(dim)) > kGridSizeCap)
    throw SizeLimitError("volumetric_grid_cover: grid beyond the size cap");

  const double step = 2.0 * radius / static_cast<double>(per_axis);
  const double keep = radius + eps + 1e-12;
  std::vector<Index> digit(static_cast<std::size_t>(dim), 0);
  std::vector<Vec> kept;
  Vec g(dim);
  for (;;) {
    for (Index a = 0; a < dim; ++a)
      g(a) = -radius + (static_cast<double>(digit[static_cast<std::size_t>(a)]) + 0.5) * step;
    if (g.norm() <= keep) kept.push_back(g);
    Index a = 0;
    while (a < dim && ++digit[static_cast<std::size_t>(a)] == per_axis) digit[static_cast<std::size_t>(a++)] = 0;
    if (a == dim) break;
  }

  est.size = static_cast<Index>(kept.size());
  est.centers.resize(dim, est.size);
  for (Index c = 0; c < est.size; ++c) est.centers.col(c) = kept[static_cast<std::size_t>(c)];
  return est;
}

double empirical_log_cover(const MatrixClassSpec& spec, const std::vector<Vec>& inputs,
                           double eps, Index n_matrices, std::uint64_t seed) {
  const ImageCloud cloud = build_cloud(spec, inputs, n_matrices, seed);
  const CoverEstimate est = greedy_cover(cloud, eps);
  return std::log(static_cast<double>(std::max<Index>(est.size, 1)));
}

}  // namespace genbound
