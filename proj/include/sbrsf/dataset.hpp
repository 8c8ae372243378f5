#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbrsf/csv.hpp"
#include "sbrsf/random.hpp"

namespace sbrsf {

// One subject: observed time (event or censoring, whichever came first),
// event indicator, and the covariate vector.
struct SurvivalRecord {
  double time = 0.0;
  bool event = false;
  std::vector<double> covariates;
};

struct FeatureSpec {
  enum class Kind { Numeric, Categorical };
  std::string name;
  Kind kind = Kind::Numeric;
  std::vector<std::string> categories;  // level labels, categorical only
};

struct Dataset {
  std::vector<SurvivalRecord> records;
  std::vector<std::string> feature_names;

  std::size_t n() const { return records.size(); }
  std::size_t n_features() const { return feature_names.size(); }

  std::size_t n_events() const {
    std::size_t k = 0;
    for (const auto& r : records) k += r.event ? 1 : 0;
    return k;
  }

  void validate() const {
    if (records.empty()) throw std::runtime_error("dataset: empty");
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (!(r.time >= 0.0) || !std::isfinite(r.time))
        throw std::runtime_error("dataset: record " + std::to_string(i) +
                                 " has invalid time");
      if (r.covariates.size() != feature_names.size())
        throw std::runtime_error("dataset: record " + std::to_string(i) +
                                 " has wrong covariate count");
    }
    if (n_events() == 0)
      throw std::runtime_error("dataset: no events (at least one record with event = 1 required)");
  }
};

// Column-role mapping for CSV ingestion. When covariate_columns is empty every
// non-time, non-event column is a covariate. Columns listed in `categorical`
// are expanded into one indicator column per level ("name:level"), levels
// sorted lexicographically.
struct CsvSchema {
  std::string time_column = "time";
  std::string event_column = "event";
  std::vector<std::string> covariate_columns;
  std::vector<std::string> categorical;
};

inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {},
                        std::vector<std::string>* warnings = nullptr) {
  const CsvTable table = read_csv(path);
  const std::size_t time_col = table.column(schema.time_column);
  const std::size_t event_col = table.column(schema.event_column);

  std::vector<std::string> covariate_names = schema.covariate_columns;
  if (covariate_names.empty()) {
    for (const auto& h : table.header)
      if (h != schema.time_column && h != schema.event_column) covariate_names.push_back(h);
  }
  if (covariate_names.empty())
    throw std::runtime_error(path + ": no covariate columns");

  const std::set<std::string> categorical(schema.categorical.begin(), schema.categorical.end());
  for (const auto& c : categorical)
    if (std::find(covariate_names.begin(), covariate_names.end(), c) == covariate_names.end())
      throw std::runtime_error(path + ": categorical column '" + c + "' not among covariates");

  // First pass: feature specs, with category levels collected from the data.
  std::vector<FeatureSpec> specs;
  for (const auto& name : covariate_names) {
    FeatureSpec spec;
    spec.name = name;
    if (categorical.count(name)) {
      spec.kind = FeatureSpec::Kind::Categorical;
      std::set<std::string> levels;
      const std::size_t col = table.column(name);
      for (const auto& row : table.rows) {
        if (row[col].empty())
          throw std::runtime_error(path + ": missing value in column '" + name + "'");
        levels.insert(row[col]);
      }
      spec.categories.assign(levels.begin(), levels.end());
    }
    specs.push_back(std::move(spec));
  }

  Dataset data;
  for (const auto& spec : specs) {
    if (spec.kind == FeatureSpec::Kind::Numeric) {
      data.feature_names.push_back(spec.name);
    } else {
      for (const auto& level : spec.categories)
        data.feature_names.push_back(spec.name + ":" + level);
    }
  }

  std::size_t zero_times = 0;
  for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
    const auto& row = table.rows[ri];
    const std::string where = path + " row " + std::to_string(ri + 2);
    SurvivalRecord rec;
    rec.time = parse_double(row[time_col], where + " time");
    if (!(rec.time >= 0.0) || !std::isfinite(rec.time))
      throw std::runtime_error(where + ": time must be a finite nonnegative number");
    if (rec.time == 0.0) ++zero_times;
    const std::string& ev = row[event_col];
    if (ev == "0") rec.event = false;
    else if (ev == "1") rec.event = true;
    else throw std::runtime_error(where + ": invalid event indicator '" + ev + "' (expected 0 or 1)");

    for (const auto& spec : specs) {
      const std::size_t col = table.column(spec.name);
      const std::string& cell = row[col];
      if (cell.empty())
        throw std::runtime_error(where + ": missing value in column '" + spec.name + "'");
      if (spec.kind == FeatureSpec::Kind::Numeric) {
        rec.covariates.push_back(parse_double(cell, where + " " + spec.name));
      } else {
        for (const auto& level : spec.categories)
          rec.covariates.push_back(cell == level ? 1.0 : 0.0);
      }
    }
    data.records.push_back(std::move(rec));
  }

  if (data.records.empty()) throw std::runtime_error(path + ": no data rows");
  if (warnings && zero_times > 0)
    warnings->push_back(std::to_string(zero_times) +
                        " record(s) with time = 0 (event at enrollment)");
  if (data.n_events() == 0 && warnings)
    warnings->push_back("dataset has no events; it cannot be used for fitting");
  return data;
}

inline void save_csv(const Dataset& data, const std::string& path) {
  CsvWriter w(path);
  std::vector<std::string> header = {"time", "event"};
  header.insert(header.end(), data.feature_names.begin(), data.feature_names.end());
  w.row(header);
  for (const auto& r : data.records) {
    std::vector<std::string> row;
    row.reserve(2 + r.covariates.size());
    row.push_back(format_double(r.time));
    row.push_back(r.event ? "1" : "0");
    for (double v : r.covariates) row.push_back(format_double(v));
    w.row(row);
  }
}

// Deterministic partition: a seeded shuffle selects round(fraction * n)
// records for the training part; both parts keep the original row order.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double fraction,
                                                    std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_train_test: fraction must be in (0,1)");
  const std::size_t n = data.n();
  const std::size_t n_train =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n)
    throw std::runtime_error("split_train_test: fraction " + format_double(fraction) +
                             " leaves an empty part for n = " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, 0x5911ULL));
  for (std::size_t i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_index(i + 1)]);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  Dataset train, test;
  train.feature_names = data.feature_names;
  test.feature_names = data.feature_names;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : test).records.push_back(data.records[i]);

  if (train.n_events() == 0)
    throw std::runtime_error("split_train_test: training part has zero events");
  return {std::move(train), std::move(test)};
}

}  // namespace sbrsf
