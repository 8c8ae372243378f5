#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/config.hpp"
#include "sbrsf/csv.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/random.hpp"

namespace sbrsf {

// Covariate-space partition: a binary tree whose internal nodes test either a
// single-feature threshold or the sign of a shifted two-feature product, and
// whose leaves carry one coefficient vector each.
struct SubspaceNode {
  enum class Kind { Threshold, SignProduct, Leaf };
  Kind kind = Kind::Leaf;
  int feature = -1;       // Threshold: x[feature] <= threshold goes left
  double threshold = 0.0;
  int feature_a = -1;     // SignProduct: (x[a]+offset_a)*(x[b]+offset_b) > 0 goes left
  double offset_a = 0.0;
  int feature_b = -1;
  double offset_b = 0.0;
  int left = -1;
  int right = -1;
  int coef_index = -1;    // Leaf
};

struct SubspaceModel {
  std::vector<SubspaceNode> nodes;
  int root = 0;
  std::vector<std::vector<double>> coefficients;

  int subspace_of(std::span<const double> x) const {
    int id = root;
    for (;;) {
      const SubspaceNode& n = nodes[id];
      switch (n.kind) {
        case SubspaceNode::Kind::Leaf:
          return n.coef_index;
        case SubspaceNode::Kind::Threshold:
          id = (x[n.feature] <= n.threshold) ? n.left : n.right;
          break;
        case SubspaceNode::Kind::SignProduct:
          id = ((x[n.feature_a] + n.offset_a) * (x[n.feature_b] + n.offset_b) > 0.0)
                   ? n.left
                   : n.right;
          break;
      }
    }
  }

  double linear_predictor(std::span<const double> x) const {
    const auto& coef = coefficients[subspace_of(x)];
    double y = 0.0;
    for (std::size_t k = 0; k < coef.size(); ++k) y += coef[k] * x[k];
    return y;
  }

  int n_subspaces() const { return static_cast<int>(coefficients.size()); }

  void validate(int p) const {
    if (nodes.empty()) throw std::runtime_error("subspace model: no nodes");
    if (coefficients.empty()) throw std::runtime_error("subspace model: no coefficients");
    std::size_t leaves = 0;
    for (const auto& n : nodes) {
      switch (n.kind) {
        case SubspaceNode::Kind::Leaf:
          if (n.coef_index < 0 || n.coef_index >= static_cast<int>(coefficients.size()))
            throw std::runtime_error("subspace model: leaf references missing coefficients");
          ++leaves;
          break;
        case SubspaceNode::Kind::Threshold:
          if (n.feature < 0 || n.feature >= p)
            throw std::runtime_error("subspace model: threshold feature out of range");
          break;
        case SubspaceNode::Kind::SignProduct:
          if (n.feature_a < 0 || n.feature_a >= p || n.feature_b < 0 || n.feature_b >= p)
            throw std::runtime_error("subspace model: sign-product feature out of range");
          break;
      }
      if (n.kind != SubspaceNode::Kind::Leaf &&
          (n.left < 0 || n.right < 0 || n.left >= static_cast<int>(nodes.size()) ||
           n.right >= static_cast<int>(nodes.size())))
        throw std::runtime_error("subspace model: invalid child index");
    }
    if (leaves != coefficients.size())
      throw std::runtime_error("subspace model: leaf/coefficient count mismatch");
    for (const auto& c : coefficients)
      if (c.size() != static_cast<std::size_t>(p))
        throw std::runtime_error("subspace model: coefficient length != covariate count");
  }
};

enum class CensoringKind { None, Uniform, Dependent };

struct SimConfig {
  int n = 1000;
  int p = 3;
  double range_low = -15.0;
  double range_high = 15.0;
  double weibull_shape = 2.0;
  SubspaceModel model;
  CensoringKind censoring = CensoringKind::Uniform;
  double censoring_target = 0.2;       // uniform censoring: calibrated fraction
  double censoring_cmax = 0.0;         // uniform censoring: fixed c_max when > 0
  double dependent_shape = 2.0;        // dependent censoring: Weibull shape of C
  double dependent_scale_factor = 2.0; // dependent censoring: C scale = factor * exp(Y)
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 1) throw std::runtime_error("sim config: n must be >= 1");
    if (p < 1) throw std::runtime_error("sim config: p must be >= 1");
    if (!(range_low < range_high)) throw std::runtime_error("sim config: empty covariate range");
    if (!(weibull_shape > 0.0)) throw std::runtime_error("sim config: weibull shape must be > 0");
    if (censoring == CensoringKind::Uniform && censoring_cmax <= 0.0 &&
        !(censoring_target > 0.0 && censoring_target < 1.0))
      throw std::runtime_error("sim config: censoring target must be in (0,1)");
    if (censoring == CensoringKind::Dependent &&
        (!(dependent_shape > 0.0) || !(dependent_scale_factor > 0.0)))
      throw std::runtime_error("sim config: dependent censoring parameters must be positive");
    model.validate(p);
  }
};

struct SimResult {
  Dataset data;
  std::vector<double> true_time;   // latent event time, before censoring
  std::vector<int> subspace;       // generating subspace id per record
  double cmax_used = 0.0;          // calibrated c_max (uniform censoring only)
};

// The first simulation design's regime-switching linear predictor.
inline double linear_predictor_ex1(std::span<const double> x) {
  if (x.size() != 3)
    throw std::invalid_argument("linear_predictor_ex1: expected a length-3 vector");
  if ((x[0] + 7.0) * (x[2] - 10.0) > 0.0)
    return 0.2 * x[0] - 0.1 * x[1] + 0.5 * x[2];
  return 0.3 * x[0] + 0.1 * x[1] - 0.3 * x[2];
}

namespace detail {

constexpr std::uint64_t kSimRecordStream = 11;
constexpr std::uint64_t kSimPilotStream = 13;
constexpr int kCalibrationPilot = 4096;

inline double weibull_draw(Rng& rng, double shape, double scale) {
  const double u = rng.uniform();
  return scale * std::pow(-std::log1p(-u), 1.0 / shape);
}

struct LatentDraw {
  std::vector<double> x;
  double y = 0.0;
  double t = 0.0;
  int subspace = 0;
};

inline LatentDraw draw_latent(const SimConfig& cfg, Rng& rng) {
  LatentDraw d;
  d.x.resize(cfg.p);
  for (int k = 0; k < cfg.p; ++k) d.x[k] = rng.uniform(cfg.range_low, cfg.range_high);
  d.subspace = cfg.model.subspace_of(d.x);
  d.y = cfg.model.linear_predictor(d.x);
  d.t = weibull_draw(rng, cfg.weibull_shape, std::exp(d.y));
  return d;
}

// Expected censored fraction under C ~ U(0, c) given latent times: for one
// subject, P(C < T) = min(T, c) / c. Monotone decreasing in c, so bisection
// finds the c hitting the target fraction.
inline double calibrate_uniform_cmax(const SimConfig& cfg) {
  std::vector<double> pilot(kCalibrationPilot);
  for (int i = 0; i < kCalibrationPilot; ++i) {
    Rng rng(derive_seed(derive_seed(cfg.seed, kSimPilotStream), i));
    pilot[i] = draw_latent(cfg, rng).t;
  }
  const auto censored_fraction = [&](double c) {
    double sum = 0.0;
    for (double t : pilot) sum += std::min(t, c) / c;
    return sum / static_cast<double>(pilot.size());
  };
  double lo = 1e-9;
  double hi = 1.0;
  int guard = 0;
  while (censored_fraction(hi) > cfg.censoring_target && guard++ < 600) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censored_fraction(mid) > cfg.censoring_target) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Draws the synthetic dataset. Each record has its own derived seed, so block
// parallel generation would reproduce the sequential output; the draw order
// within a record is covariates, event time, censoring time.
inline SimResult simulate(const SimConfig& cfg) {
  cfg.validate();

  SimResult result;
  result.data.feature_names.reserve(cfg.p);
  for (int k = 0; k < cfg.p; ++k)
    result.data.feature_names.push_back("x" + std::to_string(k + 1));

  double cmax = 0.0;
  if (cfg.censoring == CensoringKind::Uniform)
    cmax = cfg.censoring_cmax > 0.0 ? cfg.censoring_cmax : detail::calibrate_uniform_cmax(cfg);
  result.cmax_used = cmax;

  result.data.records.reserve(cfg.n);
  result.true_time.reserve(cfg.n);
  result.subspace.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    Rng rng(derive_seed(derive_seed(cfg.seed, detail::kSimRecordStream), i));
    const detail::LatentDraw d = detail::draw_latent(cfg, rng);
    double censor_time = std::numeric_limits<double>::infinity();
    switch (cfg.censoring) {
      case CensoringKind::None:
        break;
      case CensoringKind::Uniform:
        censor_time = cmax * rng.uniform();
        break;
      case CensoringKind::Dependent:
        censor_time = detail::weibull_draw(rng, cfg.dependent_shape,
                                           cfg.dependent_scale_factor * std::exp(d.y));
        break;
    }
    SurvivalRecord rec;
    rec.time = std::min(d.t, censor_time);
    rec.event = d.t <= censor_time;
    rec.covariates = d.x;
    result.data.records.push_back(std::move(rec));
    result.true_time.push_back(d.t);
    result.subspace.push_back(d.subspace);
  }
  return result;
}

inline void write_oracle_csv(const SimResult& result, const std::string& path) {
  CsvWriter w(path);
  w.row({"true_time", "subspace_id"});
  for (std::size_t i = 0; i < result.true_time.size(); ++i)
    w.row({format_double(result.true_time[i]), std::to_string(result.subspace[i])});
}

// --- key=value round trip -------------------------------------------------

inline SubspaceModel subspace_model_from_kv(const KvConfig& kv, int p) {
  SubspaceModel model;
  for (int id = 0;; ++id) {
    const std::string key = "model.node." + std::to_string(id);
    if (!kv.has(key)) break;
    const auto tok = split_tokens(kv.get(key));
    SubspaceNode node;
    if (tok.empty()) throw std::runtime_error("config: empty " + key);
    if (tok[0] == "leaf") {
      if (tok.size() != 2) throw std::runtime_error("config: " + key + ": expected 'leaf K'");
      node.kind = SubspaceNode::Kind::Leaf;
      node.coef_index = static_cast<int>(parse_double(tok[1], key));
    } else if (tok[0] == "threshold") {
      if (tok.size() != 5)
        throw std::runtime_error("config: " + key + ": expected 'threshold F T LEFT RIGHT'");
      node.kind = SubspaceNode::Kind::Threshold;
      node.feature = static_cast<int>(parse_double(tok[1], key));
      node.threshold = parse_double(tok[2], key);
      node.left = static_cast<int>(parse_double(tok[3], key));
      node.right = static_cast<int>(parse_double(tok[4], key));
    } else if (tok[0] == "signprod") {
      if (tok.size() != 7)
        throw std::runtime_error("config: " + key +
                                 ": expected 'signprod FA OA FB OB LEFT RIGHT'");
      node.kind = SubspaceNode::Kind::SignProduct;
      node.feature_a = static_cast<int>(parse_double(tok[1], key));
      node.offset_a = parse_double(tok[2], key);
      node.feature_b = static_cast<int>(parse_double(tok[3], key));
      node.offset_b = parse_double(tok[4], key);
      node.left = static_cast<int>(parse_double(tok[5], key));
      node.right = static_cast<int>(parse_double(tok[6], key));
    } else {
      throw std::runtime_error("config: " + key + ": unknown node kind '" + tok[0] + "'");
    }
    model.nodes.push_back(node);
  }
  for (int id = 0;; ++id) {
    const std::string key = "model.coef." + std::to_string(id);
    if (!kv.has(key)) break;
    const auto tok = split_tokens(kv.get(key));
    std::vector<double> coef;
    coef.reserve(tok.size());
    for (const auto& t : tok) coef.push_back(parse_double(t, key));
    model.coefficients.push_back(std::move(coef));
  }
  model.validate(p);
  return model;
}

inline SimConfig sim_config_from_kv(const KvConfig& kv) {
  SimConfig cfg;
  cfg.n = static_cast<int>(kv.get_int("sim.n"));
  cfg.p = static_cast<int>(kv.get_int("sim.p"));
  cfg.range_low = kv.get_double_or("sim.range_low", cfg.range_low);
  cfg.range_high = kv.get_double_or("sim.range_high", cfg.range_high);
  cfg.weibull_shape = kv.get_double_or("sim.weibull_shape", cfg.weibull_shape);
  const std::string cens = kv.get_or("sim.censoring", "uniform");
  if (cens == "none") cfg.censoring = CensoringKind::None;
  else if (cens == "uniform") cfg.censoring = CensoringKind::Uniform;
  else if (cens == "dependent") cfg.censoring = CensoringKind::Dependent;
  else throw std::runtime_error("sim config: unknown censoring kind '" + cens + "'");
  cfg.censoring_target = kv.get_double_or("sim.censoring_target", cfg.censoring_target);
  cfg.censoring_cmax = kv.get_double_or("sim.censoring_cmax", cfg.censoring_cmax);
  cfg.dependent_shape = kv.get_double_or("sim.dependent_shape", cfg.dependent_shape);
  cfg.dependent_scale_factor =
      kv.get_double_or("sim.dependent_scale_factor", cfg.dependent_scale_factor);
  cfg.seed = static_cast<std::uint64_t>(kv.get_int_or("sim.seed", 1));
  cfg.model = subspace_model_from_kv(kv, cfg.p);
  cfg.validate();
  return cfg;
}

inline KvConfig sim_config_to_kv(const SimConfig& cfg) {
  KvConfig kv;
  kv.set("sim.n", std::to_string(cfg.n));
  kv.set("sim.p", std::to_string(cfg.p));
  kv.set("sim.range_low", format_double(cfg.range_low));
  kv.set("sim.range_high", format_double(cfg.range_high));
  kv.set("sim.weibull_shape", format_double(cfg.weibull_shape));
  switch (cfg.censoring) {
    case CensoringKind::None: kv.set("sim.censoring", "none"); break;
    case CensoringKind::Uniform: kv.set("sim.censoring", "uniform"); break;
    case CensoringKind::Dependent: kv.set("sim.censoring", "dependent"); break;
  }
  kv.set("sim.censoring_target", format_double(cfg.censoring_target));
  kv.set("sim.censoring_cmax", format_double(cfg.censoring_cmax));
  kv.set("sim.dependent_shape", format_double(cfg.dependent_shape));
  kv.set("sim.dependent_scale_factor", format_double(cfg.dependent_scale_factor));
  kv.set("sim.seed", std::to_string(cfg.seed));
  for (std::size_t id = 0; id < cfg.model.nodes.size(); ++id) {
    const SubspaceNode& n = cfg.model.nodes[id];
    std::string v;
    switch (n.kind) {
      case SubspaceNode::Kind::Leaf:
        v = "leaf " + std::to_string(n.coef_index);
        break;
      case SubspaceNode::Kind::Threshold:
        v = "threshold " + std::to_string(n.feature) + " " + format_double(n.threshold) + " " +
            std::to_string(n.left) + " " + std::to_string(n.right);
        break;
      case SubspaceNode::Kind::SignProduct:
        v = "signprod " + std::to_string(n.feature_a) + " " + format_double(n.offset_a) + " " +
            std::to_string(n.feature_b) + " " + format_double(n.offset_b) + " " +
            std::to_string(n.left) + " " + std::to_string(n.right);
        break;
    }
    kv.set("model.node." + std::to_string(id), v);
  }
  for (std::size_t id = 0; id < cfg.model.coefficients.size(); ++id) {
    std::string v;
    for (std::size_t k = 0; k < cfg.model.coefficients[id].size(); ++k) {
      if (k) v += ' ';
      v += format_double(cfg.model.coefficients[id][k]);
    }
    kv.set("model.coef." + std::to_string(id), v);
  }
  return kv;
}

// --- shipped presets --------------------------------------------------------

// Two subspaces split by the sign of (x1+7)(x3-10); three covariates.
inline SimConfig example1_default() {
  SimConfig cfg;
  cfg.n = 1000;
  cfg.p = 3;
  cfg.censoring = CensoringKind::Uniform;
  cfg.censoring_target = 0.2;
  cfg.seed = 1;
  SubspaceNode root;
  root.kind = SubspaceNode::Kind::SignProduct;
  root.feature_a = 0;
  root.offset_a = 7.0;
  root.feature_b = 2;
  root.offset_b = -10.0;
  root.left = 1;
  root.right = 2;
  SubspaceNode leaf0;
  leaf0.kind = SubspaceNode::Kind::Leaf;
  leaf0.coef_index = 0;
  SubspaceNode leaf1;
  leaf1.kind = SubspaceNode::Kind::Leaf;
  leaf1.coef_index = 1;
  cfg.model.nodes = {root, leaf0, leaf1};
  cfg.model.coefficients = {{0.2, -0.1, 0.5}, {0.3, 0.1, -0.3}};
  return cfg;
}

// Four subspaces over five covariates; the partition uses three of them.
// The numeric constants here are this library's documented defaults (see
// configs/example2.cfg), not values taken from anywhere else.
inline SimConfig example2_default() {
  SimConfig cfg;
  cfg.n = 1000;
  cfg.p = 5;
  cfg.censoring = CensoringKind::Uniform;
  cfg.censoring_target = 0.2;
  cfg.seed = 2;
  auto threshold = [](int f, double t, int l, int r) {
    SubspaceNode n;
    n.kind = SubspaceNode::Kind::Threshold;
    n.feature = f;
    n.threshold = t;
    n.left = l;
    n.right = r;
    return n;
  };
  auto leaf = [](int k) {
    SubspaceNode n;
    n.kind = SubspaceNode::Kind::Leaf;
    n.coef_index = k;
    return n;
  };
  cfg.model.nodes = {threshold(0, 0.0, 1, 2), threshold(1, 0.0, 3, 4),
                     threshold(2, 0.0, 5, 6), leaf(0), leaf(1), leaf(2), leaf(3)};
  cfg.model.coefficients = {{0.3, 0.1, -0.2, 0.4, -0.1},
                            {-0.2, 0.4, 0.1, -0.3, 0.2},
                            {0.1, -0.3, 0.4, 0.2, -0.2},
                            {-0.4, 0.2, -0.1, 0.1, 0.3}};
  return cfg;
}

// Example 1 structure with covariate-driven censoring: C is Weibull with the
// same shape as T and scale factor * exp(Y), giving a censored fraction of
// 1 / (1 + factor^shape) at every Y (factor 2, shape 2 -> 20%).
inline SimConfig dependent_censoring_default() {
  SimConfig cfg = example1_default();
  cfg.n = 600;
  cfg.censoring = CensoringKind::Dependent;
  cfg.dependent_shape = 2.0;
  cfg.dependent_scale_factor = 2.0;
  cfg.seed = 3;
  return cfg;
}

}  // namespace sbrsf
