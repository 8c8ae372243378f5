#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbrsf/dataset.hpp"
#include "sbrsf/estimators.hpp"
#include "sbrsf/random.hpp"
#include "sbrsf/step_function.hpp"

namespace sbrsf {

struct TreeConfig {
  int d0 = 3;             // minimum unique death times per terminal node
  int mtry = 0;           // candidate features per split; 0 resolves to ceil(sqrt(p))
  std::uint64_t seed = 0;

  int resolved_mtry(std::size_t p) const {
    if (mtry > 0) return mtry;
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  }
};

// Absolute standardized two-sample log-rank statistic with hypergeometric
// variance. Returns 0 when the variance sum is 0.
inline double logrank_score(std::span<const SurvivalRecord> left,
                            std::span<const SurvivalRecord> right) {
  if (left.empty() || right.empty())
    throw std::invalid_argument("logrank_score: empty group");

  struct Entry {
    double time;
    bool event;
    bool in_left;
  };
  std::vector<Entry> entries;
  entries.reserve(left.size() + right.size());
  for (const auto& r : left) entries.push_back({r.time, r.event, true});
  for (const auto& r : right) entries.push_back({r.time, r.event, false});
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.time < b.time; });

  double numerator = 0.0;
  double variance = 0.0;
  std::size_t at_risk = entries.size();
  std::size_t at_risk_left = left.size();
  std::size_t k = 0;
  while (k < entries.size()) {
    const double t = entries[k].time;
    std::size_t deaths = 0, deaths_left = 0, block = 0, block_left = 0;
    while (k < entries.size() && entries[k].time == t) {
      ++block;
      if (entries[k].in_left) ++block_left;
      if (entries[k].event) {
        ++deaths;
        if (entries[k].in_left) ++deaths_left;
      }
      ++k;
    }
    if (deaths > 0) {
      const double n = static_cast<double>(at_risk);
      const double n1 = static_cast<double>(at_risk_left);
      const double d = static_cast<double>(deaths);
      numerator += static_cast<double>(deaths_left) - n1 * d / n;
      if (at_risk > 1) {
        const double frac = n1 / n;
        variance += frac * (1.0 - frac) * ((n - d) / (n - 1.0)) * d;
      }
    }
    at_risk -= block;
    at_risk_left -= block_left;
  }
  if (!(variance > 0.0)) return 0.0;
  return std::fabs(numerator) / std::sqrt(variance);
}

struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> members;  // terminal only; bootstrap multiset, sorted
  ChfCurve chf;                        // terminal only

  bool is_leaf() const { return left < 0; }
};

struct SurvivalTree {
  std::vector<TreeNode> nodes;
  std::int32_t root = 0;
  std::size_t n_features = 0;

  std::int32_t route(std::span<const double> x) const {
    if (x.size() != n_features)
      throw std::invalid_argument("route: covariate dimension mismatch");
    std::int32_t id = root;
    while (!nodes[id].is_leaf())
      id = (x[nodes[id].feature] <= nodes[id].threshold) ? nodes[id].left : nodes[id].right;
    return id;
  }

  std::size_t n_leaves() const {
    std::size_t k = 0;
    for (const auto& n : nodes) k += n.is_leaf() ? 1 : 0;
    return k;
  }

  std::string dump() const {
    std::ostringstream out;
    dump_node(out, root, 0);
    return out.str();
  }

private:
  void dump_node(std::ostringstream& out, std::int32_t id, int depth) const {
    for (int i = 0; i < depth; ++i) out << "  ";
    const TreeNode& n = nodes[id];
    if (n.is_leaf()) {
      out << "node " << id << ": leaf n=" << n.members.size()
          << " unique_deaths=" << n.chf.n_jumps() << "\n";
    } else {
      out << "node " << id << ": x" << n.feature << " <= " << format_double(n.threshold)
          << "\n";
      dump_node(out, n.left, depth + 1);
      dump_node(out, n.right, depth + 1);
    }
  }
};

namespace detail {

// Column-major copy of the training data; built once per forest and shared by
// every tree grown from it.
struct TrainView {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> times;
  std::vector<std::uint8_t> events;
  std::vector<std::vector<double>> columns;

  static TrainView build(const Dataset& data) {
    TrainView v;
    v.n = data.n();
    v.p = data.n_features();
    v.times.reserve(v.n);
    v.events.reserve(v.n);
    v.columns.assign(v.p, {});
    for (auto& c : v.columns) c.reserve(v.n);
    for (const auto& r : data.records) {
      v.times.push_back(r.time);
      v.events.push_back(r.event ? 1 : 0);
      for (std::size_t f = 0; f < v.p; ++f) v.columns[f].push_back(r.covariates[f]);
    }
    return v;
  }
};

inline std::size_t count_unique_death_times(const TrainView& view,
                                            std::span<const std::uint32_t> sample,
                                            std::vector<double>& scratch) {
  scratch.clear();
  for (std::uint32_t rec : sample)
    if (view.events[rec]) scratch.push_back(view.times[rec]);
  std::sort(scratch.begin(), scratch.end());
  scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
  return scratch.size();
}

// Reusable buffers for one tree growth.
struct GrowWorkspace {
  std::vector<std::uint32_t> idx;       // sample entries, partitioned in place
  std::vector<std::uint32_t> by_time;   // node entries sorted by observed time
  std::vector<std::uint32_t> slot_of;   // per record: #node event times <= its time
  std::vector<std::int32_t> death_idx;  // per record: node event-time index of its death
  std::vector<double> event_times;      // node distinct death times
  std::vector<std::uint32_t> dcnt;      // deaths per node event time (with multiplicity)
  std::vector<std::uint32_t> cnt_eq;    // entries per slot value
  std::vector<std::uint32_t> dl;        // left-child deaths per event time
  std::vector<std::uint32_t> cntl_eq;   // left-child entries per slot value
  std::vector<std::pair<double, std::uint32_t>> vals;  // (feature value, record)
  std::vector<std::uint32_t> feat_buf;
  std::vector<double> unique_scratch;

  void init(std::size_t n, std::size_t p) {
    slot_of.assign(n, 0);
    death_idx.assign(n, -1);
    event_times.resize(n);
    dcnt.resize(n + 1);
    cnt_eq.resize(n + 2);
    dl.resize(n + 1);
    cntl_eq.resize(n + 2);
    feat_buf.resize(p);
    std::iota(feat_buf.begin(), feat_buf.end(), 0u);
  }
};

struct BestSplit {
  double score = -1.0;
  std::int32_t feature = -1;
  double threshold = 0.0;
  bool found() const { return feature >= 0; }
};

class TreeGrower {
public:
  TreeGrower(const TrainView& view, const TreeConfig& cfg)
      : view_(view), cfg_(cfg), mtry_(cfg.resolved_mtry(view.p)), rng_(cfg.seed) {
    if (cfg_.d0 < 1) throw std::invalid_argument("TreeConfig: d0 must be >= 1");
    if (static_cast<std::size_t>(mtry_) > view_.p)
      throw std::invalid_argument("TreeConfig: mtry exceeds feature count");
  }

  SurvivalTree grow(std::span<const std::uint32_t> sample) {
    ws_.init(view_.n, view_.p);
    ws_.idx.assign(sample.begin(), sample.end());
    if (ws_.idx.empty()) throw std::invalid_argument("grow_tree: empty sample");
    for (std::uint32_t rec : ws_.idx)
      if (rec >= view_.n) throw std::invalid_argument("grow_tree: sample index out of range");
    const std::size_t unique_deaths =
        count_unique_death_times(view_, ws_.idx, ws_.unique_scratch);
    if (unique_deaths < static_cast<std::size_t>(cfg_.d0))
      throw std::runtime_error("grow_tree: sample has " + std::to_string(unique_deaths) +
                               " unique death times, need at least " +
                               std::to_string(cfg_.d0));

    tree_ = SurvivalTree{};
    tree_.n_features = view_.p;
    tree_.nodes.emplace_back();
    grow_range(0, 0, ws_.idx.size());
    return std::move(tree_);
  }

private:
  // Builds the node's event-time table over idx[b, e). Returns T, the number
  // of distinct death times in the node.
  std::size_t build_time_table(std::size_t b, std::size_t e) {
    ws_.by_time.assign(ws_.idx.begin() + b, ws_.idx.begin() + e);
    std::sort(ws_.by_time.begin(), ws_.by_time.end(),
              [&](std::uint32_t a, std::uint32_t c) { return view_.times[a] < view_.times[c]; });
    std::size_t t_count = 0;
    std::size_t k = 0;
    const std::size_t m = ws_.by_time.size();
    std::fill(ws_.cnt_eq.begin(),
              ws_.cnt_eq.begin() + std::min(m + 2, ws_.cnt_eq.size()), 0u);
    while (k < m) {
      const double t = view_.times[ws_.by_time[k]];
      std::size_t block = 0, deaths = 0;
      const std::size_t start = k;
      while (k < m && view_.times[ws_.by_time[k]] == t) {
        ++block;
        if (view_.events[ws_.by_time[k]]) ++deaths;
        ++k;
      }
      if (deaths > 0) {
        ws_.event_times[t_count] = t;
        ws_.dcnt[t_count] = static_cast<std::uint32_t>(deaths);
        ++t_count;
      }
      const std::uint32_t slot = static_cast<std::uint32_t>(t_count);
      for (std::size_t q = start; q < k; ++q) {
        const std::uint32_t rec = ws_.by_time[q];
        ws_.slot_of[rec] = slot;
        ws_.death_idx[rec] = view_.events[rec] ? static_cast<std::int32_t>(t_count) - 1 : -1;
      }
      ws_.cnt_eq[slot] += static_cast<std::uint32_t>(block);
    }
    return t_count;
  }

  // Log-rank statistic for the current left/right partition, swept over the
  // node's event times. Left-child at-risk counts are reconstructed from the
  // slot histograms so each candidate threshold costs O(T).
  double split_statistic(std::size_t m, std::size_t m_left, std::size_t t_count) const {
    double numerator = 0.0;
    double variance = 0.0;
    double y_all = static_cast<double>(m);
    double y_left = static_cast<double>(m_left);
    for (std::size_t j = 0; j < t_count; ++j) {
      y_all -= ws_.cnt_eq[j];
      y_left -= ws_.cntl_eq[j];
      if (y_left <= 0.0) break;
      if (y_left >= y_all) break;  // right child exhausted; remaining terms are zero
      const double d = static_cast<double>(ws_.dcnt[j]);
      numerator += static_cast<double>(ws_.dl[j]) - y_left * (d / y_all);
      const double frac = y_left / y_all;
      variance += frac * (1.0 - frac) * ((y_all - d) / (y_all - 1.0)) * d;
    }
    if (!(variance > 0.0)) return 0.0;
    return std::fabs(numerator) / std::sqrt(variance);
  }

  BestSplit find_best_split(std::size_t b, std::size_t e, std::size_t t_count) {
    const std::size_t m = e - b;
    BestSplit best;

    // mtry candidate features, drawn without replacement, examined in
    // ascending index order so equal scores break toward the lowest feature.
    const std::size_t p = view_.p;
    for (std::size_t i = 0; i < static_cast<std::size_t>(mtry_); ++i) {
      const std::size_t j = i + rng_.uniform_index(p - i);
      std::swap(ws_.feat_buf[i], ws_.feat_buf[j]);
    }
    std::sort(ws_.feat_buf.begin(), ws_.feat_buf.begin() + mtry_);

    for (int fi = 0; fi < mtry_; ++fi) {
      const std::uint32_t f = ws_.feat_buf[fi];
      const std::vector<double>& col = view_.columns[f];

      ws_.vals.clear();
      for (std::size_t q = b; q < e; ++q)
        ws_.vals.emplace_back(col[ws_.idx[q]], ws_.idx[q]);
      std::sort(ws_.vals.begin(), ws_.vals.end(),
                [](const auto& a, const auto& c) { return a.first < c.first; });
      if (ws_.vals.front().first == ws_.vals.back().first) continue;  // constant feature

      std::fill(ws_.cntl_eq.begin(), ws_.cntl_eq.begin() + t_count + 2, 0u);
      std::fill(ws_.dl.begin(), ws_.dl.begin() + t_count + 1, 0u);
      std::size_t unique_left = 0;
      std::size_t unique_right = t_count;
      std::size_t m_left = 0;

      std::size_t q = 0;
      while (q < m) {
        const double v = ws_.vals[q].first;
        while (q < m && ws_.vals[q].first == v) {
          const std::uint32_t rec = ws_.vals[q].second;
          ++ws_.cntl_eq[ws_.slot_of[rec]];
          ++m_left;
          const std::int32_t dj = ws_.death_idx[rec];
          if (dj >= 0) {
            if (++ws_.dl[dj] == 1) ++unique_left;
            if (ws_.dl[dj] == ws_.dcnt[dj]) --unique_right;
          }
          ++q;
        }
        if (q >= m) break;  // last distinct value: no threshold beyond it

        if (unique_left < static_cast<std::size_t>(cfg_.d0) ||
            unique_right < static_cast<std::size_t>(cfg_.d0))
          continue;

        const double score = split_statistic(m, m_left, t_count);
        if (score > best.score) {
          double mid = v + 0.5 * (ws_.vals[q].first - v);
          if (mid >= ws_.vals[q].first) mid = v;  // keep the right group strictly right
          best.score = score;
          best.feature = static_cast<std::int32_t>(f);
          best.threshold = mid;
        }
      }
    }
    return best;
  }

  void make_terminal(std::int32_t node_id, std::size_t b, std::size_t e) {
    TreeNode& node = tree_.nodes[node_id];
    node.members.assign(ws_.idx.begin() + b, ws_.idx.begin() + e);
    std::sort(node.members.begin(), node.members.end());
    std::vector<double> times;
    std::vector<std::uint8_t> events;
    times.reserve(node.members.size());
    events.reserve(node.members.size());
    for (std::uint32_t rec : node.members) {
      times.push_back(view_.times[rec]);
      events.push_back(view_.events[rec]);
    }
    node.chf = nelson_aalen(times, events);
  }

  void grow_range(std::int32_t node_id, std::size_t b, std::size_t e) {
    const std::size_t t_count = build_time_table(b, e);
    const BestSplit best =
        (e - b >= 2) ? find_best_split(b, e, t_count) : BestSplit{};
    if (!best.found()) {
      make_terminal(node_id, b, e);
      return;
    }

    const std::vector<double>& col = view_.columns[best.feature];
    const auto mid = std::stable_partition(
        ws_.idx.begin() + b, ws_.idx.begin() + e,
        [&](std::uint32_t rec) { return col[rec] <= best.threshold; });
    const std::size_t split_at = static_cast<std::size_t>(mid - ws_.idx.begin());

    const std::int32_t left_id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::int32_t right_id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[node_id].feature = best.feature;
    tree_.nodes[node_id].threshold = best.threshold;
    tree_.nodes[node_id].left = left_id;
    tree_.nodes[node_id].right = right_id;

    grow_range(left_id, b, split_at);
    grow_range(right_id, split_at, e);
  }

  const TrainView& view_;
  TreeConfig cfg_;
  int mtry_;
  Rng rng_;
  GrowWorkspace ws_;
  SurvivalTree tree_;
};

inline SurvivalTree grow_tree_on_view(const TrainView& view,
                                      std::span<const std::uint32_t> sample,
                                      const TreeConfig& cfg) {
  TreeGrower grower(view, cfg);
  return grower.grow(sample);
}

}  // namespace detail

// Grows one survival tree on the given bootstrap sample (record indices with
// multiplicity). Deterministic in (data, sample, config).
inline SurvivalTree grow_tree(const Dataset& data, std::span<const std::uint32_t> sample,
                              const TreeConfig& cfg) {
  const detail::TrainView view = detail::TrainView::build(data);
  return detail::grow_tree_on_view(view, sample, cfg);
}

}  // namespace sbrsf
