#pragma once

// Counter-based random streams for reproducible Monte Carlo.
//
// Each replication (sample, path) owns the stream keyed by (seed, index), so
// results do not depend on how work is split across threads. Partial sums
// are reduced in block order for the same reason.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

namespace posthoc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// SplitMix64 stream seeded from (seed, stream index). Models
/// UniformRandomBitGenerator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : state_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_closed() { return 1.0 - uniform01(); }

private:
  std::uint64_t state_;
};

struct MomentSums {
  double sum = 0;
  double sum_sq = 0;
  std::uint64_t count = 0;
};

inline unsigned default_workers() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Accumulates f(i) and f(i)^2 over i in [0, n). Blocks are fixed-size and
/// summed in order, so the result is bit-identical for any worker count.
template <class F>
MomentSums reduce_moments(std::uint64_t n, F&& f, unsigned workers = default_workers()) {
  constexpr std::uint64_t kBlock = 4096;
  const std::uint64_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<MomentSums> partial(blocks);
  auto run_block = [&](std::uint64_t b) {
    MomentSums m;
    const std::uint64_t end = std::min(n, (b + 1) * kBlock);
    for (std::uint64_t i = b * kBlock; i < end; ++i) {
      const double v = f(i);
      m.sum += v;
      m.sum_sq += v * v;
      ++m.count;
    }
    partial[b] = m;
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::uint64_t>(blocks, 1))));
  if (workers == 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t b = w; b < blocks; b += workers) run_block(b);
      });
    }
    for (auto& t : pool) t.join();
  }
  MomentSums total;
  for (const auto& m : partial) {
    total.sum += m.sum;
    total.sum_sq += m.sum_sq;
    total.count += m.count;
  }
  return total;
}

}  // namespace posthoc
