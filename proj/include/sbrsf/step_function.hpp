#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/csv.hpp"

namespace sbrsf {

// Right-continuous piecewise-constant function on [0, inf). Jump times are
// strictly increasing; values[i] holds on [times[i], times[i+1]) and the last
// value extends to infinity. Before the first jump the function is `baseline`.
struct StepFunction {
  double baseline = 0.0;
  std::vector<double> times;
  std::vector<double> values;

  double operator()(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return baseline;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  // Value just before t: the largest jump strictly below t wins.
  double left_limit(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return baseline;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }

  std::size_t n_jumps() const { return times.size(); }

  void check() const {
    if (times.size() != values.size())
      throw std::logic_error("StepFunction: times/values length mismatch");
    for (std::size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw std::logic_error("StepFunction: jump times not strictly increasing");
  }

  void write_csv(const std::string& path) const {
    CsvWriter w(path);
    w.row({"time", "value"});
    for (std::size_t i = 0; i < times.size(); ++i)
      w.row({format_double(times[i]), format_double(values[i])});
  }
};

// Cumulative hazard curves share the representation; baseline is 0 and the
// values are nonnegative and non-decreasing.
using ChfCurve = StepFunction;

}  // namespace sbrsf
