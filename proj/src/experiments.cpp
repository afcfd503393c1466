#include "genbound/experiments.hpp"

#include "genbound/attention.hpp"
#include "genbound/bounds.hpp"
#include "genbound/complexity.hpp"
#include "genbound/covering.hpp"
#include "genbound/linalg.hpp"
#include "genbound/maurey.hpp"
#include "genbound/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace genbound {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!s.empty() && s.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  if (value == "inf") return kInf;
  const char* begin = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError("parameter '" + key + "': cannot parse '" + value + "' as a number");
  return v;
}

Index parse_index(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || std::abs(r) > 1e15)
    throw ConfigError("parameter '" + key + "': '" + value + "' is not an integer");
  return static_cast<Index>(r);
}

std::uint64_t parse_seed(const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ConfigError("seeds: empty entry");
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError("seeds: cannot parse '" + v + "'");
  return static_cast<std::uint64_t>(s);
}

// canonical serialized form: numeric strings are re-emitted via
// format_double so identical values always print identically
std::string canonical_value(const std::string& raw) {
  if (raw.empty()) return raw;
  if (raw == "inf") return raw;
  const char* begin = raw.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin && *end == '\0') return format_double(v);
  return raw;
}

using Combo = std::map<std::string, std::string>;

struct ComboView {
  const Combo* combo;
  const std::string& str(const std::string& key) const {
    auto it = combo->find(key);
    if (it == combo->end()) throw ConfigError("missing parameter '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_double(key, str(key)); }
  Index idx(const std::string& key) const { return parse_index(key, str(key)); }
};

struct ParamSpec {
  const char* key;
  const char* def;  // nullptr: must appear in the config
};

struct RowData {
  double measured = 0.0;
  double theoretical = 0.0;
  double slack = 0.0;
};

// ---------------------------------------------------------------------------
// suite schemas (column order of the emitted params)

const std::vector<ParamSpec>& schema_for(ExperimentKind kind) {
  static const std::vector<ParamSpec> bounds_eval = {
      {"bound", "volumetric"}, {"b_x", "1"}, {"b_w", "1"}, {"r_w", nullptr},
      {"d", "0"},              {"k", "0"},   {"eps", nullptr},
  };
  static const std::vector<ParamSpec> covering_verify = {
      {"class", nullptr}, {"d", nullptr},         {"k", nullptr},
      {"r_w", "1"},       {"eps", nullptr},       {"n_matrices", "200"},
      {"n_inputs", "50"}, {"b_x", "1"},           {"b_w", "1"},
  };
  static const std::vector<ParamSpec> maurey_verify = {
      {"decomposition", nullptr}, {"d", nullptr}, {"k", nullptr}, {"r_w", "1"},
      {"t", nullptr},             {"p", "2"},     {"b_x", "1"},   {"b_w", "1"},
  };
  static const std::vector<ParamSpec> rademacher_verify = {
      {"constraint", nullptr}, {"T", "4"},    {"d", "3"},        {"k", "2"},
      {"heads", "1"},          {"n", "16"},   {"draws", "4"},    {"restarts", "4"},
      {"r_w", "2"},            {"b_x", "1"},  {"b_qk", "1"},     {"b_w", "1"},
      {"b_wc", "1"},           {"b_wv", "1"}, {"act", "relu"},
  };
  static const std::vector<ParamSpec> decay_study = {
      {"target", nullptr}, {"n", "100"}, {"r_w", "1"},       {"b_x", "1"},
      {"b_qk", "1"},       {"d", "4"},   {"prefactor", "1"},
  };
  static const std::vector<ParamSpec> compare_trauger = {
      {"n", nullptr}, {"B", "1"}, {"b_x", "1"}, {"b_qk", "1"}, {"d", "16"},
  };
  static const std::vector<ParamSpec> gap_study = {
      {"constraint", "basis11"}, {"T", "4"},     {"d", "3"},     {"k", "2"},
      {"heads", "1"},            {"n", "64"},    {"holdout", "10000"},
      {"r_w", "2"},              {"c", "1"},     {"delta", "0.1"},
      {"b_x", "1"},              {"b_qk", "1"},  {"b_w", "1"},
      {"b_wc", "1"},             {"b_wv", "1"},  {"act", "relu"},
      {"noise", "0.1"},
  };
  switch (kind) {
    case ExperimentKind::bounds_eval: return bounds_eval;
    case ExperimentKind::covering_verify: return covering_verify;
    case ExperimentKind::maurey_verify: return maurey_verify;
    case ExperimentKind::rademacher_verify: return rademacher_verify;
    case ExperimentKind::decay_study: return decay_study;
    case ExperimentKind::compare_trauger: return compare_trauger;
    case ExperimentKind::gap_study: return gap_study;
  }
  throw std::logic_error("schema_for: bad experiment kind");
}

// decay_study / compare_trauger rows carry an extra derived `stat` column
bool has_stat_column(ExperimentKind kind) {
  return kind == ExperimentKind::decay_study || kind == ExperimentKind::compare_trauger;
}

// ---------------------------------------------------------------------------
// shared construction helpers

Mat make_orthobasis(Index rows, Index cols, std::uint64_t seed) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, 0xba5e5ULL, static_cast<std::uint64_t>(attempt)));
    const Mat E = colspace_basis(gaussian_matrix(rows, cols, rng));
    if (E.cols() == cols) return E;
  }
  throw NumericFailure("make_orthobasis: degenerate random spans");
}

MatrixClassSpec covering_class_spec(const std::string& name, Index d, Index k, Index r_w,
                                    double b_w, std::uint64_t seed) {
  MatrixClassSpec spec;
  spec.d = d;
  spec.k = k;
  spec.b_w = b_w;
  if (name == "spectral_subspace") {
    spec.norm_kind = MatrixNorm::spectral;
    spec.basis = make_orthobasis(k, r_w, seed);
  } else if (name == "frobenius_rank") {
    spec.norm_kind = MatrixNorm::frobenius;
    spec.rank_cap = r_w;
  } else if (name == "col21_rank") {
    spec.norm_kind = MatrixNorm::col_21;
    spec.rank_cap = r_w;
  } else if (name == "col21_subspace") {
    spec.norm_kind = MatrixNorm::col_21;
    spec.basis = make_orthobasis(k, r_w, seed);
  } else if (name == "basis11") {
    spec.norm_kind = MatrixNorm::basis_p1;
    spec.p = 1.0;
    spec.basis = make_orthobasis(k, r_w, seed);
  } else {
    throw ConfigError("covering_verify: unknown class '" + name + "'");
  }
  spec.validate();
  return spec;
}

double covering_closed_form(const std::string& name, double b_x, double b_w, Index r_w, double eps) {
  BoundQuery q;
  q.b_x = b_x;
  q.b_w = b_w;
  q.r_w = r_w;
  q.eps = eps;
  if (name == "spectral_subspace") return volumetric_log_cover(q).log_cover;
  if (name == "frobenius_rank") return maurey_log_cover_frobenius(q).log_cover;
  if (name == "col21_rank") return maurey_log_cover_col21(q).log_cover;
  if (name == "col21_subspace") return volumetric_log_cover_col21(q).log_cover;
  if (name == "basis11") return maurey_log_cover_basis(q).log_cover;
  throw ConfigError("covering_verify: unknown class '" + name + "'");
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

struct AttentionSetup {
  HeadClass cls;
  double single_head_bound = 0.0;  // matching closed form at the given n
};

AttentionSetup make_attention_setup(const ComboView& v, double bound_n,
                                    std::uint64_t seed) {
  const std::string constraint = v.str("constraint");
  const Index d = v.idx("d");
  const Index k = v.idx("k");
  const Index r_w = v.idx("r_w");
  const double b_x = v.num("b_x");
  const double b_qk = v.num("b_qk");
  const Activation act = parse_activation(v.str("act"));

  ConstraintSet cs;
  cs.b_w = v.num("b_w");
  cs.b_wc = v.num("b_wc");
  cs.b_wv = v.num("b_wv");
  cs.b_x = b_x;
  cs.qk.d = d;
  cs.qk.k = d;
  cs.qk.b_w = b_qk;

  const double prefactor = cs.b_w * cs.b_wc * cs.b_wv * activation_lipschitz(act, 0.01);
  double single = 0.0;
  if (constraint == "basis11") {
    cs.input_exponent = 1.0;
    cs.qk.norm_kind = MatrixNorm::basis_p1;
    cs.qk.p = 1.0;
    cs.qk.basis = make_orthobasis(d, r_w, derive_seed(seed, 0x9a51ULL));
    single = attention_bound_basis11(b_x, b_qk, r_w, prefactor, bound_n);
  } else if (constraint == "entrywise11") {
    cs.input_exponent = 1.0;
    cs.qk.norm_kind = MatrixNorm::entrywise;
    cs.qk.p = 1.0;
    cs.qk.q = 1.0;
    single = attention_bound_entrywise11(b_x, b_qk, d, prefactor, bound_n);
  } else if (constraint == "col21") {
    cs.input_exponent = kInf;
    cs.qk.norm_kind = MatrixNorm::col_21;
    cs.qk.basis = make_orthobasis(d, r_w, derive_seed(seed, 0x9a51ULL));
    single = attention_bound_col21(b_x, b_qk, r_w, prefactor, bound_n);
  } else {
    throw ConfigError("unknown constraint '" + constraint + "'");
  }
  cs.qk.validate();

  HeadClass cls;
  cls.constraints = cs;
  cls.k = k;
  cls.act = act;
  cls.x_cls = [&] {
    std::mt19937_64 rng(derive_seed(seed, 0xc15cULL));
    return sample_in_ball(d, cs.input_exponent, b_x, rng);
  }();
  cls.heads = static_cast<int>(v.idx("heads"));
  return {std::move(cls), single};
}

// ---------------------------------------------------------------------------
// per-suite row computations

RowData run_bounds_eval(const ComboView& v, std::uint64_t /*seed*/) {
  BoundQuery q;
  q.b_x = v.num("b_x");
  q.b_w = v.num("b_w");
  q.r_w = v.idx("r_w");
  q.d = v.idx("d");
  q.k = v.idx("k");
  q.eps = v.num("eps");
  const std::string& bound = v.str("bound");
  double value = 0.0;
  if (bound == "volumetric") value = volumetric_log_cover(q).log_cover;
  else if (bound == "maurey_frobenius") value = maurey_log_cover_frobenius(q).log_cover;
  else if (bound == "maurey_col21") value = maurey_log_cover_col21(q).log_cover;
  else if (bound == "maurey_basis") value = maurey_log_cover_basis(q).log_cover;
  else if (bound == "volumetric_col21") value = volumetric_log_cover_col21(q).log_cover;
  else if (bound == "col21_full_rank") value = maurey_log_cover_col21_full_rank(q).log_cover;
  else if (bound == "rows_p1") value = maurey_log_cover_rows(q).log_cover;
  else if (bound == "entrywise11") value = maurey_log_cover_entrywise11(q).log_cover;
  else if (bound == "best_frobenius")
    value = best_bound(volumetric_log_cover(q), maurey_log_cover_frobenius(q)).log_cover;
  else if (bound == "best_col21")
    value = best_bound(volumetric_log_cover_col21(q), maurey_log_cover_col21(q)).log_cover;
  else throw ConfigError("bounds_eval: unknown bound '" + bound + "'");
  return {value, value, 0.0};
}

RowData run_covering_verify(const ComboView& v, std::uint64_t seed) {
  const std::string& name = v.str("class");
  const Index d = v.idx("d");
  const Index k = v.idx("k");
  const Index r_w = v.idx("r_w");
  const double eps = v.num("eps");
  const double b_x = v.num("b_x");
  const double b_w = v.num("b_w");
  const Index n_matrices = v.idx("n_matrices");
  const Index n_inputs = v.idx("n_inputs");

  const MatrixClassSpec spec =
      covering_class_spec(name, d, k, r_w, b_w, derive_seed(seed, 0x5eedbULL, d, r_w));
  std::mt19937_64 rng(derive_seed(seed, 0xc0ffeULL, static_cast<std::uint64_t>(d),
                                  static_cast<std::uint64_t>(n_inputs)));
  std::vector<Vec> inputs;
  inputs.reserve(static_cast<std::size_t>(n_inputs));
  for (Index i = 0; i < n_inputs; ++i)
    inputs.push_back(sample_in_ball(d, spec.input_exponent(), b_x, rng));

  const double measured = empirical_log_cover(spec, inputs, eps, n_matrices, seed);
  const double theoretical = covering_closed_form(name, b_x, b_w, r_w, eps / 2.0);
  return {measured, theoretical, 0.0};
}

RowData run_maurey_verify(const ComboView& v, std::uint64_t seed) {
  const std::string& decomposition = v.str("decomposition");
  const Index d = v.idx("d");
  const Index k = v.idx("k");
  const Index r_w = v.idx("r_w");
  const long t = static_cast<long>(v.idx("t"));
  const double b_x = v.num("b_x");
  const double b_w = v.num("b_w");

  MatrixClassSpec spec;
  spec.d = d;
  spec.k = k;
  spec.b_w = b_w;
  Mat E;
  if (decomposition == "frobenius") {
    spec.norm_kind = MatrixNorm::frobenius;
    spec.rank_cap = r_w;
  } else if (decomposition == "col21") {
    spec.norm_kind = MatrixNorm::col_21;
    spec.rank_cap = r_w;
  } else if (decomposition == "basis") {
    spec.norm_kind = MatrixNorm::basis_p1;
    spec.p = v.num("p");
    E = make_orthobasis(k, r_w, derive_seed(seed, 0xe1e1ULL, d, r_w));
    spec.basis = E;
  } else {
    throw ConfigError("maurey_verify: unknown decomposition '" + decomposition + "'");
  }
  spec.validate();

  const Mat W = sample_class_member(spec, derive_seed(seed, 0x3a7fULL, 1));
  std::mt19937_64 rng(derive_seed(seed, 0x3a7fULL, 2));
  const Vec x = sample_in_ball(d, spec.input_exponent(), b_x, rng);

  ConvexRepresentation rep;
  if (decomposition == "frobenius") rep = decompose_frobenius(W, x, b_w, b_x);
  else if (decomposition == "col21") rep = decompose_col21(W, x, b_w, b_x);
  else rep = decompose_basis(W, x, E, spec.p, conjugate_exponent(spec.p), b_w, b_x);

  const SparseApprox approx = sparsify(rep, t, derive_seed(seed, 0x3a7fULL, 3));
  return {approx.sq_error, maurey_error_bound(rep, t), 1e-9};
}

RowData run_rademacher_verify(const ComboView& v, std::uint64_t seed) {
  const Index T = v.idx("T");
  const Index d = v.idx("d");
  const Index n = v.idx("n");
  const int draws = static_cast<int>(v.idx("draws"));
  const int restarts = static_cast<int>(v.idx("restarts"));

  AttentionSetup setup = make_attention_setup(v, static_cast<double>(n), seed);
  const SequenceBatch batch = sample_batch(n, T, d, setup.cls.constraints.input_exponent,
                                           setup.cls.constraints.b_x,
                                           derive_seed(seed, 0xba7c0ULL));
  HeadClassOracle oracle(setup.cls);
  const RademacherEstimate est =
      mc_rademacher(oracle, batch, draws, restarts, derive_seed(seed, 0x4adeULL));
  return {est.value, setup.cls.heads * setup.single_head_bound, 0.0};
}

RowData run_decay_point(const ComboView& v, std::uint64_t /*seed*/) {
  const std::string& target = v.str("target");
  const double b_x = v.num("b_x");
  const double b_qk = v.num("b_qk");
  const double prefactor = v.num("prefactor");
  double value = 0.0;
  if (target == "main2_n") {
    value = attention_bound_entrywise11(b_x, b_qk, v.idx("d"), prefactor, v.num("n"));
  } else if (target == "main1_rw") {
    value = attention_bound_basis11(b_x, b_qk, v.idx("r_w"), prefactor, v.num("n"));
  } else {
    throw ConfigError("decay_study: unknown target '" + target + "'");
  }
  return {value, value, 0.0};
}

RowData run_trauger_point(const ComboView& v, std::uint64_t /*seed*/) {
  const double n = v.num("n");
  const double B = v.num("B");
  const double b_x = v.num("b_x");
  const double b_qk = v.num("b_qk");
  const Index d = v.idx("d");
  const double ours = attention_bound_entrywise11(b_x, b_qk, d, B, n);
  const double theirs = trauger_expression(B, b_x, b_qk, d, n);
  return {ours, theirs, 0.0};
}

RowData run_gap_study(const ComboView& v, std::uint64_t seed) {
  const Index T = v.idx("T");
  const Index d = v.idx("d");
  const Index n = v.idx("n");
  const Index holdout_n = v.idx("holdout");
  const double c = v.num("c");
  const double delta = v.num("delta");
  const double noise = v.num("noise");

  AttentionSetup setup = make_attention_setup(v, static_cast<double>(n), seed);
  const double exponent = setup.cls.constraints.input_exponent;
  const double b_x = setup.cls.constraints.b_x;
  const SequenceBatch train = sample_batch(n, T, d, exponent, b_x, derive_seed(seed, 0x7a11ULL));
  const SequenceBatch holdout =
      sample_batch(holdout_n, T, d, exponent, b_x, derive_seed(seed, 0x7a12ULL));

  const std::vector<HeadParams> teacher = setup.cls.random_member(derive_seed(seed, 0x7ea0ULL));
  auto make_labels = [&](const SequenceBatch& batch, std::uint64_t label_seed) {
    std::mt19937_64 rng(label_seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vec labels(static_cast<Index>(batch.samples.size()));
    for (Index i = 0; i < labels.size(); ++i)
      labels[i] = multihead_forward(teacher, batch.samples[static_cast<std::size_t>(i)]) +
                  noise * unif(rng);
    return labels;
  };
  const Vec train_labels = make_labels(train, derive_seed(seed, 0x1ab1ULL));
  const Vec holdout_labels = make_labels(holdout, derive_seed(seed, 0x1ab2ULL));

  const double rademacher_bound = setup.cls.heads * setup.single_head_bound;
  const GapReport report = measure_gap(setup.cls, train, train_labels, holdout, holdout_labels,
                                       c, delta, rademacher_bound, PgaOptions{},
                                       derive_seed(seed, 0x6a60ULL));
  return {report.gap, report.bound, 3.0 * report.proxy_std_error};
}

RowData dispatch(ExperimentKind kind, const Combo& combo, std::uint64_t seed) {
  const ComboView v{&combo};
  switch (kind) {
    case ExperimentKind::bounds_eval: return run_bounds_eval(v, seed);
    case ExperimentKind::covering_verify: return run_covering_verify(v, seed);
    case ExperimentKind::maurey_verify: return run_maurey_verify(v, seed);
    case ExperimentKind::rademacher_verify: return run_rademacher_verify(v, seed);
    case ExperimentKind::decay_study: return run_decay_point(v, seed);
    case ExperimentKind::compare_trauger: return run_trauger_point(v, seed);
    case ExperimentKind::gap_study: return run_gap_study(v, seed);
  }
  throw std::logic_error("dispatch: bad experiment kind");
}

// ---------------------------------------------------------------------------
// grid machinery

std::vector<std::pair<std::string, std::vector<std::string>>> resolve_axes(
    const ExperimentConfig& config, const std::vector<ParamSpec>& schema) {
  if (config.grid.empty()) throw ConfigError("config: empty grid");
  if (config.seeds.empty()) throw ConfigError("config: seeds must be nonempty");

  auto in_schema = [&](const std::string& key) {
    for (const ParamSpec& p : schema)
      if (key == p.key) return true;
    return false;
  };
  for (const auto& [key, values] : config.grid) {
    if (!in_schema(key))
      throw ConfigError(std::string("config: unknown parameter '") + key + "' for " +
                        experiment_name(config.experiment));
    if (values.empty()) throw ConfigError("config: parameter '" + key + "' has no values");
    for (const std::string& value : values)
      if (value.empty()) throw ConfigError("config: parameter '" + key + "' has an empty value");
  }

  // axes in config order, then missing schema keys pinned to their defaults
  std::vector<std::pair<std::string, std::vector<std::string>>> axes = config.grid;
  for (const ParamSpec& p : schema) {
    bool present = false;
    for (const auto& [key, values] : axes) present = present || key == p.key;
    if (present) continue;
    if (p.def == nullptr)
      throw ConfigError(std::string("config: required parameter '") + p.key + "' missing");
    axes.emplace_back(p.key, std::vector<std::string>{p.def});
  }
  return axes;
}

std::vector<Combo> enumerate_combos(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& axes) {
  std::size_t total = 1;
  for (const auto& [key, values] : axes) {
    if (total > 4'000'000 / values.size())
      throw ConfigError("config: parameter grid too large");
    total *= values.size();
  }
  std::vector<Combo> combos;
  combos.reserve(total);
  std::vector<std::size_t> cursor(axes.size(), 0);
  for (std::size_t i = 0; i < total; ++i) {
    Combo combo;
    for (std::size_t a = 0; a < axes.size(); ++a)
      combo[axes[a].first] = axes[a].second[cursor[a]];
    combos.push_back(std::move(combo));
    for (std::size_t a = axes.size(); a-- > 0;) {  // first axis slowest
      if (++cursor[a] < axes[a].second.size()) break;
      cursor[a] = 0;
    }
  }
  return combos;
}

ResultRow make_row(ExperimentKind kind, const std::vector<ParamSpec>& schema, const Combo& combo,
                   const std::string& stat, std::uint64_t seed, const RowData& data,
                   double runtime_ms) {
  ResultRow row;
  row.experiment = experiment_name(kind);
  if (has_stat_column(kind)) row.params.emplace_back("stat", stat);
  for (const ParamSpec& p : schema) row.params.emplace_back(p.key, canonical_value(combo.at(p.key)));
  row.params.emplace_back("seed", std::to_string(seed));
  row.params.emplace_back("slack", format_double(data.slack));
  row.measured = data.measured;
  row.theoretical = data.theoretical;
  row.pass = data.measured <= data.theoretical + data.slack;
  row.runtime_ms = runtime_ms;
  return row;
}

// least-squares slope of y against x
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw NumericFailure("fitted_slope: degenerate sweep");
  return sxy / sxx;
}

// relative residual of the best c1 + c2*x fit
double affine_fit_residual(const std::vector<double>& x, const std::vector<double>& y) {
  const double slope = fitted_slope(x, y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double rss = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fit = my + slope * (x[i] - mx);
    rss += (y[i] - fit) * (y[i] - fit);
    yy += y[i] * y[i];
  }
  if (!(yy > 0.0)) throw NumericFailure("affine_fit_residual: zero response");
  return std::sqrt(rss / yy);
}

// groups decay/trauger rows by every param except the sweep axis and appends
// the slope / fit-quality assertion rows
void append_summary_rows(ExperimentKind kind, const std::vector<ParamSpec>& schema,
                         const std::string& sweep_key, std::vector<ResultRow>& rows) {
  struct Group {
    Combo params;  // shared params, sweep key zeroed
    std::uint64_t seed = 0;
    std::vector<double> sweep;
    std::vector<double> measured;
    std::vector<double> theoretical;
  };
  std::vector<Group> groups;
  auto group_for = [&](const Combo& shared, std::uint64_t seed) -> Group& {
    for (Group& g : groups)
      if (g.seed == seed && g.params == shared) return g;
    groups.push_back(Group{shared, seed, {}, {}, {}});
    return groups.back();
  };

  for (const ResultRow& row : rows) {
    Combo shared;
    std::uint64_t seed = 0;
    double sweep = 0;
    for (const auto& [key, value] : row.params) {
      if (key == "stat" || key == "slack") continue;
      if (key == "seed") seed = parse_seed(value);
      else if (key == sweep_key) sweep = parse_double(key, value);
      else shared[key] = value;
    }
    Group& g = group_for(shared, seed);
    g.sweep.push_back(sweep);
    g.measured.push_back(row.measured);
    g.theoretical.push_back(row.theoretical);
  }

  for (const Group& g : groups) {
    if (g.sweep.size() < 2) continue;
    Combo combo = g.params;
    combo[sweep_key] = "0";
    std::vector<double> lx(g.sweep.size());
    for (std::size_t i = 0; i < lx.size(); ++i) lx[i] = std::log(g.sweep[i]);

    auto push = [&](const char* stat, double measured, double theoretical) {
      rows.push_back(make_row(kind, schema, combo, stat, g.seed,
                              RowData{measured, theoretical, 0.0}, 0.0));
    };
    const std::string target = g.params.at("target");
    std::vector<double> ly(g.measured.size());
    for (std::size_t i = 0; i < ly.size(); ++i) ly[i] = std::log(g.measured[i]);
    if (target == "main2_n") {
      // |slope + 1/2| within the decay tolerance
      push("slope_dev", std::abs(fitted_slope(lx, ly) + 0.5), 1e-3);
    } else {
      // c1 + c2 ln(r_w) fit quality, global relative residual
      push("fit_residual", affine_fit_residual(lx, g.measured), 0.05);
    }
  }
}

// splits each comparator row into one self-documenting row per series (ours /
// trauger) and appends the comparator's slope-bracket assertions plus the
// relative-decay assertion (our bound gains on the comparator as n grows)
void append_trauger_rows(const std::vector<ParamSpec>& schema, std::vector<ResultRow>& rows) {
  constexpr ExperimentKind kind = ExperimentKind::compare_trauger;
  struct Group {
    Combo params;  // shared params, sweep key excluded
    std::uint64_t seed = 0;
    std::vector<double> sweep;
    std::vector<double> ours;
    std::vector<double> theirs;
  };
  std::vector<Group> groups;
  auto group_for = [&](const Combo& shared, std::uint64_t seed) -> Group& {
    for (Group& g : groups)
      if (g.seed == seed && g.params == shared) return g;
    groups.push_back(Group{shared, seed, {}, {}, {}});
    return groups.back();
  };

  std::vector<ResultRow> out;
  out.reserve(rows.size() * 2 + 3 * rows.size());
  for (const ResultRow& row : rows) {
    Combo shared;
    Combo full;
    std::uint64_t seed = 0;
    double sweep = 0;
    for (const auto& [key, value] : row.params) {
      if (key == "stat" || key == "slack") continue;
      if (key == "seed") {
        seed = parse_seed(value);
        continue;
      }
      full[key] = value;
      if (key == "n") sweep = parse_double(key, value);
      else shared[key] = value;
    }
    Group& g = group_for(shared, seed);
    g.sweep.push_back(sweep);
    g.ours.push_back(row.measured);
    g.theirs.push_back(row.theoretical);
    out.push_back(make_row(kind, schema, full, "ours", seed,
                           RowData{row.measured, row.measured, 0.0}, row.runtime_ms));
    out.push_back(make_row(kind, schema, full, "trauger", seed,
                           RowData{row.theoretical, row.theoretical, 0.0}, 0.0));
  }

  for (const Group& g : groups) {
    if (g.sweep.size() < 2) continue;
    std::vector<std::size_t> order(g.sweep.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.sweep[a] < g.sweep[b]; });
    std::vector<double> lx, ly;
    lx.reserve(order.size());
    ly.reserve(order.size());
    for (std::size_t idx : order) {
      lx.push_back(std::log(g.sweep[idx]));
      ly.push_back(std::log(g.theirs[idx]));
    }
    Combo combo = g.params;
    combo["n"] = "0";
    auto push = [&](const char* stat, double measured, double theoretical) {
      out.push_back(make_row(kind, schema, combo, stat, g.seed,
                             RowData{measured, theoretical, 0.0}, 0.0));
    };
    const double slope = fitted_slope(lx, ly);
    // the comparator decays strictly slower than 1/sqrt(n) ...
    push("slope_lo", -0.5 - slope, 0.0);
    // ... but still faster than n^{-0.3} on this range
    push("slope_hi", slope + 0.3, 0.0);
    // our bound divided by the comparator shrinks from the smallest to the
    // largest n in the sweep
    const std::size_t first = order.front();
    const std::size_t last = order.back();
    push("ratio_trend",
         (g.ours[last] / g.theirs[last]) / (g.ours[first] / g.theirs[first]), 1.0);
  }
  rows = std::move(out);
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentKind parse_experiment(const std::string& name) {
  if (name == "bounds_eval") return ExperimentKind::bounds_eval;
  if (name == "covering_verify") return ExperimentKind::covering_verify;
  if (name == "maurey_verify") return ExperimentKind::maurey_verify;
  if (name == "rademacher_verify") return ExperimentKind::rademacher_verify;
  if (name == "decay_study") return ExperimentKind::decay_study;
  if (name == "compare_trauger") return ExperimentKind::compare_trauger;
  if (name == "gap_study") return ExperimentKind::gap_study;
  throw ConfigError("unknown experiment '" + name + "'");
}

const char* experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::bounds_eval: return "bounds_eval";
    case ExperimentKind::covering_verify: return "covering_verify";
    case ExperimentKind::maurey_verify: return "maurey_verify";
    case ExperimentKind::rademacher_verify: return "rademacher_verify";
    case ExperimentKind::decay_study: return "decay_study";
    case ExperimentKind::compare_trauger: return "compare_trauger";
    case ExperimentKind::gap_study: return "gap_study";
  }
  throw std::logic_error("experiment_name: bad kind");
}

OutputFormat parse_format(const std::string& name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError("unknown format '" + name + "' (expected csv or json)");
}

const char* format_name(OutputFormat format) {
  return format == OutputFormat::csv ? "csv" : "json";
}

ExperimentConfig load_config(const std::string& path, ExperimentKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  ExperimentConfig config;
  config.experiment = kind;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");

    if (key == "experiment") {
      if (value != experiment_name(kind))
        throw ConfigError(path + ": experiment '" + value + "' does not match subcommand '" +
                          experiment_name(kind) + "'");
    } else if (key == "seeds") {
      for (const std::string& s : split_list(value)) config.seeds.push_back(parse_seed(s));
    } else if (key == "out") {
      config.output_path = value;
    } else if (key == "format") {
      config.format = parse_format(value);
    } else if (key == "timings") {
      if (value == "on") config.timings = true;
      else if (value == "off") config.timings = false;
      else throw ConfigError(path + ": timings must be on or off");
    } else {
      for (const auto& [existing, values] : config.grid)
        if (existing == key)
          throw ConfigError(path + ": duplicate parameter '" + key + "'");
      config.grid.emplace_back(key, split_list(value));
    }
  }
  return config;
}

bool all_pass(const std::vector<ResultRow>& rows) {
  for (const ResultRow& row : rows)
    if (!row.pass) return false;
  return true;
}

std::vector<ResultRow> run(const ExperimentConfig& config) {
  const std::vector<ParamSpec>& schema = schema_for(config.experiment);
  const auto axes = resolve_axes(config, schema);
  const std::vector<Combo> combos = enumerate_combos(axes);
  const std::size_t n_seeds = config.seeds.size();
  const std::size_t total = combos.size() * n_seeds;

  std::vector<ResultRow> rows(total);
  parallel_for(total, [&](std::size_t i) {
    const Combo& combo = combos[i / n_seeds];
    const std::uint64_t seed = config.seeds[i % n_seeds];
    const auto t0 = std::chrono::steady_clock::now();
    const RowData data = dispatch(config.experiment, combo, seed);
    double runtime_ms = 0.0;
    if (config.timings) {
      const auto t1 = std::chrono::steady_clock::now();
      runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    rows[i] = make_row(config.experiment, schema, combo, "value", seed, data, runtime_ms);
  });

  if (config.experiment == ExperimentKind::decay_study) {
    // main2_n sweeps n, main1_rw sweeps r_w; group separately per target
    std::vector<ResultRow> by_target[2];
    for (ResultRow& row : rows) {
      const bool main2 = std::find_if(row.params.begin(), row.params.end(), [](const auto& kv) {
                           return kv.first == "target";
                         })->second == "main2_n";
      by_target[main2 ? 0 : 1].push_back(std::move(row));
    }
    rows.clear();
    append_summary_rows(config.experiment, schema, "n", by_target[0]);
    append_summary_rows(config.experiment, schema, "r_w", by_target[1]);
    for (auto& part : by_target)
      for (ResultRow& row : part) rows.push_back(std::move(row));
  } else if (config.experiment == ExperimentKind::compare_trauger) {
    append_trauger_rows(schema, rows);
  }

  if (!config.output_path.empty()) emit(rows, config.format, config.output_path);
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string emit_string(const std::vector<ResultRow>& rows, OutputFormat format) {
  std::ostringstream out;
  if (format == OutputFormat::csv) {
    out << "experiment";
    if (!rows.empty())
      for (const auto& [key, value] : rows.front().params) out << ',' << key;
    out << ",measured,theoretical,pass,runtime_ms\n";
    for (const ResultRow& row : rows) {
      out << row.experiment;
      for (const auto& [key, value] : row.params) out << ',' << value;
      out << ',' << format_double(row.measured) << ',' << format_double(row.theoretical) << ','
          << (row.pass ? 1 : 0) << ',' << format_double(row.runtime_ms) << '\n';
    }
    return out.str();
  }
  out << "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& row = rows[i];
    out << (i ? ",\n  " : "\n  ");
    out << "{\"experiment\":\"" << json_escape(row.experiment) << "\"";
    for (const auto& [key, value] : row.params)
      out << ",\"" << json_escape(key) << "\":\"" << json_escape(value) << "\"";
    out << ",\"measured\":" << format_double(row.measured)
        << ",\"theoretical\":" << format_double(row.theoretical)
        << ",\"pass\":" << (row.pass ? "true" : "false")
        << ",\"runtime_ms\":" << format_double(row.runtime_ms) << "}";
  }
  out << (rows.empty() ? "]\n" : "\n]\n");
  return out.str();
}

void emit(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file '" + path + "'");
  out << emit_string(rows, format);
  if (!out) throw IoError("failed writing output file '" + path + "'");
}

std::vector<ResultRow> parse_results(const std::string& text, OutputFormat format) {
  std::vector<ResultRow> rows;
  if (format == OutputFormat::csv) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("parse_results: empty csv");
    const std::vector<std::string> header = split_list(line);
    if (header.size() < 5 || header.front() != "experiment" ||
        header[header.size() - 4] != "measured" || header.back() != "runtime_ms")
      throw IoError("parse_results: unexpected csv header");
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const std::vector<std::string> cells = split_list(line);
      if (cells.size() != header.size()) throw IoError("parse_results: ragged csv row");
      ResultRow row;
      row.experiment = cells.front();
      for (std::size_t c = 1; c + 4 < cells.size(); ++c)
        row.params.emplace_back(header[c], cells[c]);
      row.measured = parse_double("measured", cells[cells.size() - 4]);
      row.theoretical = parse_double("theoretical", cells[cells.size() - 3]);
      row.pass = cells[cells.size() - 2] == "1";
      row.runtime_ms = parse_double("runtime_ms", cells.back());
      rows.push_back(std::move(row));
    }
    return rows;
  }

  const nlohmann::ordered_json doc = nlohmann::ordered_json::parse(text);
  if (!doc.is_array()) throw IoError("parse_results: expected a json array");
  for (const auto& obj : doc) {
    ResultRow row;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::string& key = it.key();
      if (key == "experiment") row.experiment = it.value().get<std::string>();
      else if (key == "measured") row.measured = it.value().get<double>();
      else if (key == "theoretical") row.theoretical = it.value().get<double>();
      else if (key == "pass") row.pass = it.value().get<bool>();
      else if (key == "runtime_ms") row.runtime_ms = it.value().get<double>();
      else row.params.emplace_back(key, it.value().get<std::string>());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace genbound
