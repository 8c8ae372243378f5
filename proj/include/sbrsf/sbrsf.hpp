#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbrsf/csv.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/estimators.hpp"
#include "sbrsf/forest.hpp"
#include "sbrsf/ipcw.hpp"
#include "sbrsf/parallel.hpp"

namespace sbrsf {

struct SbrsfConfig {
  ForestConfig global;
  ForestConfig per_case;
  bool dependent_censoring = false;
  // When set, per-case weights below threshold * column max are zeroed before
  // renormalization. Must lie in [0, 1).
  std::optional<double> threshold;
  std::uint64_t seed = 0;
};

struct SbrsfPrediction {
  std::vector<ChfCurve> per_test_chf;
  WeightMatrix weight_matrix;
};

// Seed streams: the global forest and each per-case forest get independent
// deterministic streams off the master seed, so per-case work can run on any
// worker layout with identical results.
inline std::uint64_t global_forest_seed(std::uint64_t master) { return derive_seed(master, 0); }
inline std::uint64_t per_case_seed(std::uint64_t master, std::size_t test_index) {
  return derive_seed(master, 1 + test_index);
}

inline WeightMatrix apply_weight_threshold(const WeightMatrix& w, double threshold) {
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw std::invalid_argument("apply_weight_threshold: threshold must be in [0,1)");
  WeightMatrix out;
  out.n_train = w.n_train;
  out.n_test = w.n_test;
  out.cols.resize(w.n_test);
  for (std::size_t j = 0; j < w.n_test; ++j) {
    std::vector<double> col = w.cols[j];
    double max = 0.0;
    for (double v : col) max = std::max(max, v);
    const double cut = threshold * max;
    double total = 0.0;
    for (double& v : col) {
      if (v < cut) v = 0.0;
      total += v;
    }
    if (!(total > 0.0))
      throw std::runtime_error("apply_weight_threshold: threshold zeroed every weight for "
                               "test case " + std::to_string(j));
    for (double& v : col) v /= total;
    out.cols[j] = std::move(col);
  }
  return out;
}

// Step 3 of the method: one weighted forest per test case, fitted with that
// case's weight vector as the bootstrap sampling distribution, then discarded
// once its ensemble CHF is recorded.
inline SbrsfPrediction sbrsf_predict_with_weights(const Dataset& train, const Dataset& test,
                                                  const WeightMatrix& weights,
                                                  const ForestConfig& per_case,
                                                  std::uint64_t master_seed,
                                                  unsigned workers = 1) {
  if (weights.n_train != train.n() || weights.n_test != test.n())
    throw std::invalid_argument("sbrsf_predict_with_weights: weight matrix dimension mismatch");
  if (test.n_features() != train.n_features())
    throw std::invalid_argument("sbrsf_predict_with_weights: covariate dimension mismatch");

  SbrsfPrediction pred;
  pred.per_test_chf.resize(test.n());
  pred.weight_matrix = weights;

  parallel_for(test.n(), workers, [&](std::size_t j) {
    ForestConfig cfg = per_case;
    cfg.sampling_weights = weights.cols[j];
    cfg.seed = per_case_seed(master_seed, j);
    const Forest forest = fit_forest(train, cfg, 1);
    pred.per_test_chf[j] = predict_chf(forest, test.records[j].covariates);
  });
  return pred;
}

// The full similarity-based pipeline: global forest, co-occurrence weights,
// optional IPCW combination and hard threshold, then per-case forests.
inline SbrsfPrediction sbrsf_fit_predict(const Dataset& train, const Dataset& test,
                                         const SbrsfConfig& config, unsigned workers = 1) {
  if (test.n() == 0) throw std::invalid_argument("sbrsf_fit_predict: empty test set");

  ForestConfig global = config.global;
  global.sampling_weights.reset();  // step 1 uses the uniform bootstrap
  global.seed = global_forest_seed(config.seed);
  const Forest forest = fit_forest(train, global, workers);

  WeightMatrix weights = similarity_weights(forest, train, test, workers);
  if (config.dependent_censoring)
    weights = combine_weights(ipcw_weights(train), weights);
  if (config.threshold)
    weights = apply_weight_threshold(weights, *config.threshold);

  return sbrsf_predict_with_weights(train, test, weights, config.per_case, config.seed, workers);
}

// Baseline comparator: one uniform-bootstrap forest predicting every test
// case; the reported weight matrix is uniform by definition.
inline SbrsfPrediction rsf_fit_predict(const Dataset& train, const Dataset& test,
                                       const ForestConfig& config, unsigned workers = 1) {
  if (test.n() == 0) throw std::invalid_argument("rsf_fit_predict: empty test set");
  if (test.n_features() != train.n_features())
    throw std::invalid_argument("rsf_fit_predict: covariate dimension mismatch");
  ForestConfig cfg = config;
  cfg.sampling_weights.reset();
  const Forest forest = fit_forest(train, cfg, workers);

  SbrsfPrediction pred;
  pred.per_test_chf.resize(test.n());
  pred.weight_matrix = WeightMatrix::uniform(train.n(), test.n());
  parallel_for(test.n(), workers, [&](std::size_t j) {
    pred.per_test_chf[j] = predict_chf(forest, test.records[j].covariates);
  });
  return pred;
}

// Long-format serialization (test_id, time, chf, survival), one row per jump
// point; a curve with no jumps emits a single zero row so every test id
// appears.
inline void write_predictions_csv(std::span<const ChfCurve> predictions,
                                  const std::string& path) {
  CsvWriter w(path);
  w.row({"test_id", "time", "chf", "survival"});
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const ChfCurve& chf = predictions[j];
    if (chf.times.empty()) {
      w.row({std::to_string(j), "0", "0", "1"});
      continue;
    }
    for (std::size_t k = 0; k < chf.times.size(); ++k)
      w.row({std::to_string(j), format_double(chf.times[k]), format_double(chf.values[k]),
             format_double(std::exp(-chf.values[k]))});
  }
}

inline std::vector<std::pair<std::size_t, ChfCurve>> read_predictions_csv(
    const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t id_col = table.column("test_id");
  const std::size_t time_col = table.column("time");
  const std::size_t chf_col = table.column("chf");

  std::map<std::size_t, ChfCurve> curves;
  for (const auto& row : table.rows) {
    const double idv = parse_double(row[id_col], "test_id");
    const std::size_t id = static_cast<std::size_t>(idv);
    if (static_cast<double>(id) != idv)
      throw std::runtime_error(path + ": non-integer test_id");
    ChfCurve& c = curves[id];
    const double t = parse_double(row[time_col], "time");
    const double v = parse_double(row[chf_col], "chf");
    if (t == 0.0 && v == 0.0) continue;  // placeholder row for an empty curve
    if (!c.times.empty() && t <= c.times.back())
      throw std::runtime_error(path + ": jump times for test_id " + std::to_string(id) +
                               " not strictly increasing");
    c.times.push_back(t);
    c.values.push_back(v);
  }
  std::vector<std::pair<std::size_t, ChfCurve>> out;
  out.reserve(curves.size());
  for (auto& [id, curve] : curves) out.emplace_back(id, std::move(curve));
  return out;
}

}  // namespace sbrsf
