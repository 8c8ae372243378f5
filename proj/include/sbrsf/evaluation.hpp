#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/csv.hpp"
#include "sbrsf/dataset.hpp"
#include "sbrsf/step_function.hpp"

namespace sbrsf {

// Time-varying AUC on an evaluation grid. Entries are NaN where either the
// case or the control group is empty at that time.
struct AucCurve {
  std::vector<double> grid;
  std::vector<double> auc;
  std::vector<int> n_cases;
  std::vector<int> n_controls;

  static bool defined(double v) { return !std::isnan(v); }

  // Mean over defined grid points; NaN when nothing is defined.
  double mean_defined() const {
    double sum = 0.0;
    std::size_t k = 0;
    for (double v : auc)
      if (defined(v)) {
        sum += v;
        ++k;
      }
    return k ? sum / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN();
  }

  void write_csv(const std::string& path) const {
    CsvWriter w(path);
    w.row({"t", "auc", "n_cases", "n_controls"});
    for (std::size_t i = 0; i < grid.size(); ++i)
      w.row({format_double(grid[i]), defined(auc[i]) ? format_double(auc[i]) : "NA",
             std::to_string(n_cases[i]), std::to_string(n_controls[i])});
  }
};

inline AucCurve read_auc_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  const std::size_t t_col = table.column("t");
  const std::size_t auc_col = table.column("auc");
  const std::size_t cases_col = table.column("n_cases");
  const std::size_t controls_col = table.column("n_controls");
  AucCurve c;
  for (const auto& row : table.rows) {
    c.grid.push_back(parse_double(row[t_col], "t"));
    c.auc.push_back(row[auc_col] == "NA" ? std::numeric_limits<double>::quiet_NaN()
                                         : parse_double(row[auc_col], "auc"));
    c.n_cases.push_back(static_cast<int>(parse_double(row[cases_col], "n_cases")));
    c.n_controls.push_back(static_cast<int>(parse_double(row[controls_col], "n_controls")));
  }
  return c;
}

// Cumulative/dynamic time-dependent AUC. At each grid time t, cases are test
// records with an observed event by t, controls are records still under
// observation past t; records censored at or before t are excluded. The risk
// score of record i is its predicted cumulative hazard H_i(t); tied scores
// count half per the Mann-Whitney convention.
inline AucCurve time_varying_auc(const Dataset& test, std::span<const ChfCurve> predictions,
                                 std::span<const double> grid) {
  if (predictions.size() != test.n())
    throw std::invalid_argument("time_varying_auc: one prediction per test record required");
  if (grid.empty()) throw std::invalid_argument("time_varying_auc: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("time_varying_auc: grid must be strictly increasing");

  AucCurve out;
  out.grid.assign(grid.begin(), grid.end());
  out.auc.resize(grid.size());
  out.n_cases.resize(grid.size());
  out.n_controls.resize(grid.size());

  std::vector<double> case_scores, control_scores;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double t = grid[gi];
    case_scores.clear();
    control_scores.clear();
    for (std::size_t i = 0; i < test.n(); ++i) {
      const auto& r = test.records[i];
      if (r.event && r.time <= t) case_scores.push_back(predictions[i](t));
      else if (r.time > t) control_scores.push_back(predictions[i](t));
    }
    out.n_cases[gi] = static_cast<int>(case_scores.size());
    out.n_controls[gi] = static_cast<int>(control_scores.size());
    if (case_scores.empty() || control_scores.empty()) {
      out.auc[gi] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double concordant = 0.0;
    for (double cs : case_scores)
      for (double ks : control_scores) {
        if (cs > ks) concordant += 1.0;
        else if (cs == ks) concordant += 0.5;
      }
    out.auc[gi] = concordant / (static_cast<double>(case_scores.size()) *
                                static_cast<double>(control_scores.size()));
  }
  return out;
}

// Per-time difference a - b plus the aggregates used for method comparison.
// Grid points undefined in either curve are skipped pairwise.
struct AucComparison {
  std::vector<double> grid;
  std::vector<double> auc_a;
  std::vector<double> auc_b;
  std::vector<double> diff;
  std::size_t n_defined = 0;
  std::size_t n_a_wins = 0;  // strict a > b
  double mean_diff = std::numeric_limits<double>::quiet_NaN();
  double win_fraction = std::numeric_limits<double>::quiet_NaN();

  void write_csv(const std::string& path) const {
    CsvWriter w(path);
    w.row({"t", "auc_a", "auc_b", "diff"});
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool ok = AucCurve::defined(diff[i]);
      w.row({format_double(grid[i]),
             AucCurve::defined(auc_a[i]) ? format_double(auc_a[i]) : "NA",
             AucCurve::defined(auc_b[i]) ? format_double(auc_b[i]) : "NA",
             ok ? format_double(diff[i]) : "NA"});
    }
  }
};

inline AucComparison compare_auc(const AucCurve& a, const AucCurve& b) {
  if (a.grid.size() != b.grid.size())
    throw std::invalid_argument("compare_auc: grid size mismatch");
  for (std::size_t i = 0; i < a.grid.size(); ++i)
    if (a.grid[i] != b.grid[i]) throw std::invalid_argument("compare_auc: grid mismatch");

  AucComparison cmp;
  cmp.grid = a.grid;
  cmp.auc_a = a.auc;
  cmp.auc_b = b.auc;
  cmp.diff.resize(a.grid.size(), std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    if (!AucCurve::defined(a.auc[i]) || !AucCurve::defined(b.auc[i])) continue;
    cmp.diff[i] = a.auc[i] - b.auc[i];
    sum += cmp.diff[i];
    ++cmp.n_defined;
    if (a.auc[i] > b.auc[i]) ++cmp.n_a_wins;
  }
  if (cmp.n_defined > 0) {
    cmp.mean_diff = sum / static_cast<double>(cmp.n_defined);
    cmp.win_fraction = static_cast<double>(cmp.n_a_wins) / static_cast<double>(cmp.n_defined);
  }
  return cmp;
}

// Grid syntax "start:stop:step" (stop included when aligned) or a single time.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) {
    out.push_back(parse_double(spec, "grid"));
    return out;
  }
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw std::runtime_error("grid: expected start:stop:step, got '" + spec + "'");
  const double start = parse_double(spec.substr(0, c1), "grid start");
  const double stop = parse_double(spec.substr(c1 + 1, c2 - c1 - 1), "grid stop");
  const double step = parse_double(spec.substr(c2 + 1), "grid step");
  if (!(step > 0.0)) throw std::runtime_error("grid: step must be positive");
  if (stop < start) throw std::runtime_error("grid: stop precedes start");
  const double tol = step * 1e-9;
  for (double v = start; v <= stop + tol; v += step)
    out.push_back(std::min(v, stop));
  if (out.empty()) throw std::runtime_error("grid: empty");
  return out;
}

}  // namespace sbrsf
