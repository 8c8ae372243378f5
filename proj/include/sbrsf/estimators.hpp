#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "sbrsf/dataset.hpp"
#include "sbrsf/step_function.hpp"

namespace sbrsf {

namespace detail {

// (time, deaths, censorings) aggregated per distinct observed time, ascending.
// Records censored at a death time stay in the risk set for that time.
struct TimeAgg {
  double time;
  std::size_t deaths;
  std::size_t censored;
};

inline std::vector<TimeAgg> aggregate_times(std::span<const double> times,
                                            std::span<const std::uint8_t> events) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  std::vector<TimeAgg> aggs;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = times[order[k]];
    TimeAgg agg{t, 0, 0};
    while (k < order.size() && times[order[k]] == t) {
      if (events[order[k]]) ++agg.deaths; else ++agg.censored;
      ++k;
    }
    aggs.push_back(agg);
  }
  return aggs;
}

inline StepFunction kaplan_meier_agg(const std::vector<TimeAgg>& aggs, std::size_t n) {
  StepFunction s;
  s.baseline = 1.0;
  double surv = 1.0;
  std::size_t at_risk = n;
  for (const auto& a : aggs) {
    if (a.deaths > 0) {
      surv *= 1.0 - static_cast<double>(a.deaths) / static_cast<double>(at_risk);
      s.times.push_back(a.time);
      s.values.push_back(surv);
    }
    at_risk -= a.deaths + a.censored;
  }
  return s;
}

inline ChfCurve nelson_aalen_agg(const std::vector<TimeAgg>& aggs, std::size_t n) {
  ChfCurve h;
  h.baseline = 0.0;
  double sum = 0.0;
  std::size_t at_risk = n;
  for (const auto& a : aggs) {
    if (a.deaths > 0) {
      sum += static_cast<double>(a.deaths) / static_cast<double>(at_risk);
      h.times.push_back(a.time);
      h.values.push_back(sum);
    }
    at_risk -= a.deaths + a.censored;
  }
  return h;
}

inline void split_columns(std::span<const SurvivalRecord> records, std::vector<double>& times,
                          std::vector<std::uint8_t>& events) {
  times.reserve(records.size());
  events.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.time);
    events.push_back(r.event ? 1 : 0);
  }
}

}  // namespace detail

// Product-limit estimate of S(t). Jumps only at distinct event times; tied
// deaths at one time are aggregated into a single factor.
inline StepFunction kaplan_meier(std::span<const double> times,
                                 std::span<const std::uint8_t> events) {
  if (times.empty()) throw std::invalid_argument("kaplan_meier: empty input");
  if (times.size() != events.size())
    throw std::invalid_argument("kaplan_meier: times/events length mismatch");
  return detail::kaplan_meier_agg(detail::aggregate_times(times, events), times.size());
}

inline StepFunction kaplan_meier(std::span<const SurvivalRecord> records) {
  if (records.empty()) throw std::invalid_argument("kaplan_meier: empty input");
  std::vector<double> times;
  std::vector<std::uint8_t> events;
  detail::split_columns(records, times, events);
  return kaplan_meier(times, events);
}

// H(t) = sum over event times t_j <= t of d_j / n_j.
inline ChfCurve nelson_aalen(std::span<const double> times,
                             std::span<const std::uint8_t> events) {
  if (times.empty()) throw std::invalid_argument("nelson_aalen: empty input");
  if (times.size() != events.size())
    throw std::invalid_argument("nelson_aalen: times/events length mismatch");
  return detail::nelson_aalen_agg(detail::aggregate_times(times, events), times.size());
}

inline ChfCurve nelson_aalen(std::span<const SurvivalRecord> records) {
  if (records.empty()) throw std::invalid_argument("nelson_aalen: empty input");
  std::vector<double> times;
  std::vector<std::uint8_t> events;
  detail::split_columns(records, times, events);
  return nelson_aalen(times, events);
}

// S(t) = exp(-H(t)), pointwise.
inline StepFunction survival_from_chf(const ChfCurve& chf) {
  StepFunction s;
  s.baseline = std::exp(-chf.baseline);
  s.times = chf.times;
  s.values.reserve(chf.values.size());
  for (double h : chf.values) s.values.push_back(std::exp(-h));
  return s;
}

}  // namespace sbrsf
