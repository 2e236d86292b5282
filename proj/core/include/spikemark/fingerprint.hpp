#pragma once

#include <cstdint>

#include "spikemark/data_io.hpp"
#include "spikemark/training.hpp"
#include "spikemark/watermark.hpp"

namespace spikemark {

// Adversarial frontier stitching, key-generation half: perturbs pool samples
// with the FGSM generator matching the model kind and partitions the results
// into true adversaries (now misclassified) and false adversaries (still
// correct). Expected labels are the source samples' true labels. Candidates
// the model already gets wrong in clean form are skipped.
//
// Classification of each key uses an encoding stream derived from the key-set
// seed and the key image itself, so kinds can be re-derived from the stored
// set alone (see reclassify_kinds). Throws InsufficientCandidates when the
// pool runs out before both quotas are met.
WatermarkKeySet generate_fingerprint_keys(const Model& model,
                                          const Dataset& pool, size_t n_true,
                                          size_t n_false, double epsilon,
                                          uint64_t seed);

// Re-derives the true/false partition of an existing fingerprint set against
// a model, using the same content-addressed encoding streams as generation.
std::vector<KeyKind> reclassify_kinds(const Model& model,
                                      const WatermarkKeySet& keys);

struct EmbedResult {
  Model model;
  uint32_t tally = 0;   // mismatches on the key set after embedding
  uint32_t passes = 0;  // optimization passes actually run
};

// Frontier stitching, embedding half: fine-tunes on (key image, expected
// label) batches, optionally interleaving one clean-data batch per pass,
// until the key tally reaches zero or config.epochs passes elapse. Throws
// EmbeddingFailure when the final tally is still at or above the decision
// threshold for significance level p.
EmbedResult embed_fingerprint(const Model& model, const WatermarkKeySet& keys,
                              const TrainConfig& config,
                              const Dataset* clean_interleave = nullptr,
                              double p = 0.05);

}  // namespace spikemark
