#pragma once

#include <cstdint>

#include "spikemark/data_io.hpp"
#include "spikemark/fingerprint.hpp"  // EmbedResult
#include "spikemark/training.hpp"
#include "spikemark/watermark.hpp"

namespace spikemark {

struct TriggerSpec {
  size_t count = 50;
  uint64_t generator_seed = 0;
  uint64_t label_seed = 0;
};

// Procedurally generated abstract 28x28 patterns with uniformly random
// labels: blurred white noise overlaid with a few full-intensity strokes.
// Deterministic given the two seeds; patterns are pairwise distinct.
WatermarkKeySet generate_triggers(const TriggerSpec& spec);

struct Architecture {
  ModelKind kind = ModelKind::Ann;
  std::vector<size_t> dims = {784, 512, 512, 10};
  LifParams lif;
};

// Trains a model of the given architecture from scratch on the union of the
// dataset and the trigger set (triggers oversampled tenfold per epoch) until
// the trigger tally reaches zero and the optional accuracy target is met.
// Throws EmbeddingFailure when the final tally reaches the decision
// threshold for significance level p.
EmbedResult embed_backdoor(const Architecture& arch, const Dataset& data,
                           const WatermarkKeySet& keys,
                           const TrainConfig& config, double p = 0.05);

}  // namespace spikemark
