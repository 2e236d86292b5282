#include "spikemark/rng.hpp"

namespace spikemark {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t fnv1a(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t derive_seed(uint64_t base, std::string_view tag) {
  return splitmix64(base ^ fnv1a(tag.data(), tag.size()));
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  return splitmix64(splitmix64(base) ^ splitmix64(index * 0x9e3779b97f4a7c15ull + 1));
}

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
  return derive_seed(derive_seed(base, tag), index);
}

uint64_t Rng::below(uint64_t n) {
  if (n == 0) return 0;
  uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    uint64_t r = gen_();
    if (r >= threshold) return r % n;
  }
}

}  // namespace spikemark
