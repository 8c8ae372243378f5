#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace sbrsf {

// Mixing function used to derive independent seed streams. Every worker item
// (tree, test case, record block) gets its seed from (master, stream index),
// never from scheduling order, so results do not depend on thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// mt19937_64 engine with hand-rolled draw helpers. The standard engine is
// bit-reproducible across implementations; the standard distributions are not,
// so we implement our own.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n); n > 0. Multiply-shift; bias is O(n / 2^64).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

private:
  std::mt19937_64 eng_;
};

// Draws indices from a fixed nonnegative weight vector by inverse-CDF lookup
// on the running sums. Built once, sampled many times.
class DiscreteSampler {
public:
  explicit DiscreteSampler(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("DiscreteSampler: empty weights");
    cum_.reserve(weights.size());
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("DiscreteSampler: negative weight");
      total += w;
      cum_.push_back(total);
    }
    if (!(total > 0.0)) throw std::invalid_argument("DiscreteSampler: zero total weight");
    total_ = total;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform() * total_;
    std::size_t lo = 0, hi = cum_.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cum_[mid] > u) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

  std::size_t size() const { return cum_.size(); }

private:
  std::vector<double> cum_;
  double total_ = 0.0;
};

}  // namespace sbrsf
