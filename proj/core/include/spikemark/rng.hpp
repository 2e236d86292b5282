#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace spikemark {

// All stochastic code in this project draws from mt19937_64 streams whose
// seeds are derived from one master seed with string/index tags. mt19937_64
// output is pinned by the standard, and the uniform/bounded draws below avoid
// std::*_distribution (whose sequences are implementation-defined), so runs
// are reproducible bit-for-bit across toolchains.

uint64_t splitmix64(uint64_t x);

// Tagged seed derivation: children of one master seed are decorrelated and
// stable under reordering of unrelated call sites.
uint64_t derive_seed(uint64_t base, std::string_view tag);
uint64_t derive_seed(uint64_t base, uint64_t index);
uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index);

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next() { return gen_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n), n >= 1; rejection sampling, no modulo bias
  uint64_t below(uint64_t n);

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over raw bytes; used for content-addressed sub-seeds and model hashes.
uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ull);

}  // namespace spikemark
