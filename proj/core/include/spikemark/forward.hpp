#pragma once

#include <span>
#include <utility>
#include <vector>

#include "spikemark/encoding.hpp"
#include "spikemark/model.hpp"

namespace spikemark {

// Shared membrane update, the single source of truth for Eq.-style LIF
// arithmetic everywhere (per-sample ops, batched trainer, oracles):
//   v' = alpha * v + weighted_input - prev_spike * eta
inline double lif_update(double v, double weighted_input, double prev_spike,
                         const LifParams& p) {
  return p.alpha * v + weighted_input - prev_spike * p.eta;
}

// Strict threshold: a membrane exactly at eta does not fire.
inline double lif_fire(double v, const LifParams& p) {
  return v > p.eta ? 1.0 : 0.0;
}

struct LifStepResult {
  LifState state;              // membrane = v[n], prev_spike = O[n]
  std::vector<double> spikes;  // O[n], entries in {0, 1}
};

// One discrete-time step of a population of LIF neurons fed by an already
// weighted input current (bias included by the caller).
LifStepResult lif_step(const LifState& state,
                       std::span<const double> weighted_input,
                       const LifParams& params);

struct SnnTrace {
  Matrix membrane_trace;             // T x 10 output-layer membrane potential
  std::vector<double> spike_counts;  // per-class output spike totals, diagnostic
};

// Unrolls the full network over the spike train. State starts at v=0, O=0.
SnnTrace snn_forward(const Model& model, const SpikeTrain& spikes);
SnnTrace snn_forward(const Model& model, const SpikeIndexTrain& spikes);

// Cumulative output membrane sum_n v_out[n]; the SNN class score.
std::vector<double> snn_class_scores(const Model& model,
                                     const SpikeIndexTrain& spikes);

// Sigmoid hidden layers, raw logits out.
std::vector<double> ann_forward(const Model& model, std::span<const double> x);

// Batched ANN logits for evaluation/training, images as rows.
Matrix ann_forward_batch(const Model& model, const Matrix& images);

// Smallest index among maximal entries.
int argmax_lowest(std::span<const double> scores);

// Class prediction. ANN: argmax of logits (steps/rng unused). SNN: the input
// is rate-encoded with `rng` over `steps` steps and scored by cumulative
// output membrane. Deterministic given the rng state.
int predict(const Model& model, std::span<const double> x, uint32_t steps,
            Rng& rng);
int predict(const Model& model, std::span<const double> x, Rng& rng);

// Fraction of rows classified correctly. SNN encodings use one sub-stream
// per sample index derived from `seed`, so the result does not depend on
// evaluation order or batching.
double evaluate_accuracy(const Model& model, const Matrix& images,
                         std::span<const uint8_t> labels, uint64_t seed);

}  // namespace spikemark
