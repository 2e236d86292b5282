#pragma once

#include <cstdint>
#include <string>

#include "spikemark/data_io.hpp"
#include "spikemark/training.hpp"
#include "spikemark/verification.hpp"
#include "spikemark/watermark.hpp"

namespace spikemark {

enum class PruneMethod : uint8_t { L1 = 0, Random = 1 };

struct PruneSpec {
  PruneMethod method = PruneMethod::L1;
  double fraction = 0.0;  // q in [0, 1]
  uint64_t seed = 0;      // Random only

  void validate() const;
};

struct AttackOutcome {
  Model attacked_model;
  double post_accuracy = 0.0;  // on the 9000-image eval split
  VerificationReport report;
};

// Continues training the stolen model on the 1000-image split with true
// labels, then evaluates accuracy and the watermark on the eval split.
AttackOutcome finetune_attack(const Model& model, const Dataset& finetune_split,
                              const Dataset& eval_split,
                              const WatermarkKeySet& keys, double p,
                              const TrainConfig& config);

// Crafts FGSM adversaries from the split against the current model (matching
// generator for the model kind), fine-tunes on (adversary, true label)
// pairs, then evaluates. mix_clean additionally interleaves the original
// split samples.
AttackOutcome adv_finetune_attack(const Model& model,
                                  const Dataset& finetune_split,
                                  const Dataset& eval_split,
                                  const WatermarkKeySet& keys, double p,
                                  double epsilon, const TrainConfig& config,
                                  bool mix_clean = false);

// Unstructured weight pruning: exactly floor(q * n) entries per weight
// matrix are zeroed, smallest |w| first for L1 (ties to the lowest flat
// index) or uniformly without replacement for Random. Biases are untouched.
Model prune(const Model& model, const PruneSpec& spec);

struct SweepPoint {
  double fraction = 0.0;
  double accuracy = 0.0;
  uint32_t tally = 0;
  uint32_t threshold = 0;
  bool watermarked = false;
};

// Prunes a fresh copy of the model at each fraction and records accuracy
// plus the verification outcome.
std::vector<SweepPoint> prune_sweep(const Model& model,
                                    const WatermarkKeySet& keys,
                                    PruneMethod method,
                                    std::span<const double> fractions, double p,
                                    const Dataset& eval_split, uint64_t seed);

// header fraction,accuracy,tally,threshold,verdict; accuracy to 4 decimals
std::string sweep_to_csv(std::span<const SweepPoint> points);

std::vector<double> fraction_grid(double from, double to, double step);

}  // namespace spikemark
