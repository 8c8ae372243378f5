#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/csv.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/parallel.hpp"
#include "sbrsf/random.hpp"
#include "sbrsf/tree.hpp"

namespace sbrsf {

struct ForestConfig {
  int n_trees = 200;
  TreeConfig tree;
  // Bootstrap sampling probabilities over training records; absent means
  // uniform. Must be nonnegative and sum to 1 within 1e-9.
  std::optional<std::vector<double>> sampling_weights;
  std::uint64_t seed = 0;
};

struct Forest {
  std::vector<SurvivalTree> trees;
  ForestConfig config;
  std::size_t train_size = 0;
};

// N_train x N_test nonnegative weights; each test case's column sums to 1.
struct WeightMatrix {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::vector<double>> cols;  // cols[test][train]

  static WeightMatrix uniform(std::size_t n_train, std::size_t n_test) {
    WeightMatrix w;
    w.n_train = n_train;
    w.n_test = n_test;
    w.cols.assign(n_test, std::vector<double>(n_train, 1.0 / static_cast<double>(n_train)));
    return w;
  }

  void write_csv(const std::string& path) const {
    CsvWriter w(path);
    std::vector<std::string> header = {"train_id"};
    for (std::size_t j = 0; j < n_test; ++j) header.push_back("test_" + std::to_string(j));
    w.row(header);
    for (std::size_t i = 0; i < n_train; ++i) {
      std::vector<std::string> row;
      row.reserve(1 + n_test);
      row.push_back(std::to_string(i));
      for (std::size_t j = 0; j < n_test; ++j) row.push_back(format_double(cols[j][i]));
      w.row(row);
    }
  }
};

namespace detail {

constexpr std::uint64_t kBootstrapStream = 1;
constexpr std::uint64_t kGrowStream = 2;
constexpr int kBootstrapRetryCap = 100;

inline bool all_equal_weights(const std::vector<double>& w) {
  for (double v : w)
    if (v != w.front()) return false;
  return true;
}

inline void check_sampling_weights(const std::vector<double>& w, std::size_t n_train) {
  if (w.size() != n_train)
    throw std::invalid_argument("fit_forest: sampling_weights length mismatch");
  double sum = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("fit_forest: sampling weights must be nonnegative");
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("fit_forest: sampling weights must sum to 1");
}

// Draws a size-n bootstrap, redrawing until the sample carries at least d0
// unique death times. Uniform and weighted draws share the retry logic.
inline std::vector<std::uint32_t> draw_bootstrap(const TrainView& view, Rng& rng,
                                                 const DiscreteSampler* sampler, int d0,
                                                 std::vector<double>& scratch) {
  std::vector<std::uint32_t> sample(view.n);
  for (int attempt = 0; attempt < kBootstrapRetryCap; ++attempt) {
    for (std::size_t k = 0; k < view.n; ++k) {
      const std::size_t rec = sampler ? sampler->sample(rng) : rng.uniform_index(view.n);
      sample[k] = static_cast<std::uint32_t>(rec);
    }
    if (count_unique_death_times(view, sample, scratch) >= static_cast<std::size_t>(d0))
      return sample;
  }
  throw std::runtime_error(
      "fit_forest: bootstrap retry cap exhausted; samples keep drawing fewer than d0 = " +
      std::to_string(d0) + " unique death times (dataset too censored or weights too "
      "concentrated)");
}

}  // namespace detail

inline Forest fit_forest(const Dataset& data, const ForestConfig& config, unsigned workers = 1) {
  data.validate();
  if (config.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees must be >= 1");

  const detail::TrainView view = detail::TrainView::build(data);

  // Explicit all-equal weights are the uniform bootstrap; routing them through
  // the same draw path keeps the two spellings bit-identical.
  const std::vector<double>* weights = nullptr;
  if (config.sampling_weights) {
    detail::check_sampling_weights(*config.sampling_weights, view.n);
    if (!detail::all_equal_weights(*config.sampling_weights))
      weights = &*config.sampling_weights;
  }
  std::optional<DiscreteSampler> sampler;
  if (weights) sampler.emplace(std::span<const double>(*weights));

  Forest forest;
  forest.config = config;
  forest.train_size = view.n;
  forest.trees.resize(static_cast<std::size_t>(config.n_trees));

  parallel_for(forest.trees.size(), workers, [&](std::size_t b) {
    const std::uint64_t tree_seed = derive_seed(config.seed, b);
    Rng boot_rng(derive_seed(tree_seed, detail::kBootstrapStream));
    std::vector<double> scratch;
    const std::vector<std::uint32_t> sample = detail::draw_bootstrap(
        view, boot_rng, sampler ? &*sampler : nullptr, config.tree.d0, scratch);
    TreeConfig tree_cfg = config.tree;
    tree_cfg.seed = derive_seed(tree_seed, detail::kGrowStream);
    forest.trees[b] = detail::grow_tree_on_view(view, sample, tree_cfg);
  });
  return forest;
}

// Ensemble CHF: pointwise mean of the B routed terminal-node CHFs, evaluated
// exactly on the union of their jump points.
inline ChfCurve predict_chf(const Forest& forest, std::span<const double> x) {
  if (forest.trees.empty()) throw std::logic_error("predict_chf: empty forest");
  if (forest.trees.size() == 1) {
    const SurvivalTree& tree = forest.trees.front();
    return tree.nodes[tree.route(x)].chf;  // mean of one, exactly
  }

  std::vector<std::pair<double, double>> jumps;  // (time, increment)
  for (const auto& tree : forest.trees) {
    const ChfCurve& chf = tree.nodes[tree.route(x)].chf;
    double prev = 0.0;
    for (std::size_t i = 0; i < chf.times.size(); ++i) {
      jumps.emplace_back(chf.times[i], chf.values[i] - prev);
      prev = chf.values[i];
    }
  }
  std::stable_sort(jumps.begin(), jumps.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  ChfCurve out;
  out.baseline = 0.0;
  const double inv_b = 1.0 / static_cast<double>(forest.trees.size());
  double acc = 0.0;
  std::size_t k = 0;
  while (k < jumps.size()) {
    const double t = jumps[k].first;
    while (k < jumps.size() && jumps[k].first == t) {
      acc += jumps[k].second;
      ++k;
    }
    out.times.push_back(t);
    out.values.push_back(acc * inv_b);
  }
  return out;
}

// Similarity weights from terminal-node co-occurrence: how many trees route
// test case j into a leaf containing training record i (membership counted
// once per tree, regardless of bootstrap multiplicity), normalized per test
// case.
inline WeightMatrix similarity_weights(const Forest& forest, const Dataset& train,
                                       const Dataset& test, unsigned workers = 1) {
  if (forest.train_size != train.n())
    throw std::invalid_argument("similarity_weights: forest/train size mismatch");
  if (test.n() == 0) throw std::invalid_argument("similarity_weights: empty test set");
  if (test.n_features() != train.n_features())
    throw std::invalid_argument("similarity_weights: covariate dimension mismatch");

  WeightMatrix w;
  w.n_train = train.n();
  w.n_test = test.n();
  w.cols.resize(test.n());

  parallel_for(test.n(), workers, [&](std::size_t j) {
    std::vector<double> counts(train.n(), 0.0);
    const std::span<const double> x(test.records[j].covariates);
    for (const auto& tree : forest.trees) {
      const TreeNode& leaf = tree.nodes[tree.route(x)];
      const auto& members = leaf.members;  // sorted; skip bootstrap duplicates
      for (std::size_t k = 0; k < members.size(); ++k) {
        if (k > 0 && members[k] == members[k - 1]) continue;
        counts[members[k]] += 1.0;
      }
    }
    double total = 0.0;
    for (double c : counts) total += c;
    if (!(total > 0.0))
      throw std::logic_error("similarity_weights: test case shares no leaf with training data");
    for (double& c : counts) c /= total;
    w.cols[j] = std::move(counts);
  });
  return w;
}

}  // namespace sbrsf
