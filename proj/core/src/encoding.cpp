#include "spikemark/encoding.hpp"

#include "spikemark/errors.hpp"

namespace spikemark {

namespace {

void check_pixels(std::span<const double> x) {
  for (double v : x)
    require(v >= 0.0 && v <= 1.0, ErrorKind::InputDomain,
            "rate_encode: pixel outside [0, 1]");
}

// Canonical draw order: steps outer, pixels inner; zero pixels consume no
// randomness (they can never fire). Both encoders below must keep this order.
template <typename Sink>
void encode(std::span<const double> x, uint32_t steps, Rng& rng, Sink&& sink) {
  for (uint32_t n = 0; n < steps; ++n)
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= 0.0) continue;
      if (rng.uniform01() < x[i]) sink(n, i);
    }
}

}  // namespace

SpikeTrain rate_encode(std::span<const double> x, uint32_t steps, Rng& rng) {
  require(steps >= 1, ErrorKind::InputDomain, "rate_encode: steps must be >= 1");
  check_pixels(x);
  SpikeTrain t;
  t.steps = steps;
  t.dim = static_cast<uint32_t>(x.size());
  t.bits.assign(static_cast<size_t>(steps) * x.size(), 0);
  encode(x, steps, rng,
         [&](uint32_t n, size_t i) { t.bits[n * t.dim + i] = 1; });
  return t;
}

SpikeIndexTrain rate_encode_indices(std::span<const double> x, uint32_t steps,
                                    Rng& rng) {
  require(steps >= 1, ErrorKind::InputDomain, "rate_encode: steps must be >= 1");
  check_pixels(x);
  SpikeIndexTrain t;
  t.steps = steps;
  t.dim = static_cast<uint32_t>(x.size());
  t.active.resize(steps);
  encode(x, steps, rng, [&](uint32_t n, size_t i) {
    t.active[n].push_back(static_cast<uint16_t>(i));
  });
  return t;
}

SpikeIndexTrain to_indices(const SpikeTrain& t) {
  SpikeIndexTrain s;
  s.steps = t.steps;
  s.dim = t.dim;
  s.active.resize(t.steps);
  for (uint32_t n = 0; n < t.steps; ++n)
    for (uint32_t i = 0; i < t.dim; ++i)
      if (t.bits[static_cast<size_t>(n) * t.dim + i])
        s.active[n].push_back(static_cast<uint16_t>(i));
  return s;
}

}  // namespace spikemark
