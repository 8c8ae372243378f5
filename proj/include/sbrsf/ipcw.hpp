#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/csv.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/estimators.hpp"
#include "sbrsf/forest.hpp"

namespace sbrsf {

// Kaplan-Meier for the censoring process: the event indicator is flipped, so
// the curve is G(t), the probability of remaining uncensored past t.
inline StepFunction censoring_km(const Dataset& train) {
  if (train.n() == 0) throw std::invalid_argument("censoring_km: empty input");
  std::vector<double> times;
  std::vector<std::uint8_t> flipped;
  times.reserve(train.n());
  flipped.reserve(train.n());
  for (const auto& r : train.records) {
    times.push_back(r.time);
    flipped.push_back(r.event ? 0 : 1);
  }
  return kaplan_meier(times, flipped);
}

// Inverse probability-of-censoring weights, 1 / G(X_i-). The left limit keeps
// each subject's own censoring event out of its weight.
struct IpcwVector {
  std::vector<double> weights;
};

inline IpcwVector ipcw_weights(const Dataset& train) {
  const StepFunction g = censoring_km(train);
  IpcwVector out;
  out.weights.reserve(train.n());
  for (std::size_t i = 0; i < train.n(); ++i) {
    const double gi = g.left_limit(train.records[i].time);
    if (!(gi > 0.0))
      throw std::runtime_error("ipcw_weights: record " + std::to_string(i) +
                               " has zero censoring-survival left limit; IPCW inapplicable "
                               "at the latest times");
    out.weights.push_back(1.0 / gi);
  }
  return out;
}

inline void write_ipcw_csv(const IpcwVector& ipcw, const std::string& path) {
  CsvWriter w(path);
  w.row({"train_id", "ipcw"});
  for (std::size_t i = 0; i < ipcw.weights.size(); ++i)
    w.row({std::to_string(i), format_double(ipcw.weights[i])});
}

// SamplingW proportional to IPCW_i * SW_ij, renormalized per test case.
inline WeightMatrix combine_weights(const IpcwVector& ipcw, const WeightMatrix& sw) {
  if (ipcw.weights.size() != sw.n_train)
    throw std::invalid_argument("combine_weights: dimension mismatch");
  WeightMatrix out;
  out.n_train = sw.n_train;
  out.n_test = sw.n_test;
  out.cols.resize(sw.n_test);
  for (std::size_t j = 0; j < sw.n_test; ++j) {
    std::vector<double> col(sw.n_train);
    double total = 0.0;
    for (std::size_t i = 0; i < sw.n_train; ++i) {
      col[i] = ipcw.weights[i] * sw.cols[j][i];
      total += col[i];
    }
    if (!(total > 0.0))
      throw std::runtime_error("combine_weights: test case " + std::to_string(j) +
                               " has all-zero combined weights");
    for (double& v : col) v /= total;
    out.cols[j] = std::move(col);
  }
  return out;
}

}  // namespace sbrsf
