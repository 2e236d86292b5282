#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikemark/model.hpp"
#include "spikemark/rng.hpp"

namespace spikemark {

// Rate encoding of a static intensity vector: bits[n][i] ~ Bernoulli(x[i]),
// independent across steps and pixels. Pixels must lie in [0, 1]; a pixel of
// 0 never fires and a pixel of 1 fires every step.
SpikeTrain rate_encode(std::span<const double> x, uint32_t steps, Rng& rng);

// Sparse view of one encoded presentation: active input indices per step.
// This is the event-driven representation the hot paths consume; it draws
// from the RNG in exactly the same order as rate_encode, so both forms of
// the same (x, steps, rng-state) encoding carry identical bits.
struct SpikeIndexTrain {
  uint32_t steps = 0;
  uint32_t dim = 0;
  std::vector<std::vector<uint16_t>> active;  // per step, ascending indices
};

SpikeIndexTrain rate_encode_indices(std::span<const double> x, uint32_t steps,
                                    Rng& rng);

SpikeIndexTrain to_indices(const SpikeTrain& t);

}  // namespace spikemark
