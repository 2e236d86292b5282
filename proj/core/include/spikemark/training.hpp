#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spikemark/data_io.hpp"
#include "spikemark/encoding.hpp"
#include "spikemark/model.hpp"

namespace spikemark {

enum class Optimizer : uint8_t { Sgd = 0, Adam = 1 };

struct TrainConfig {
  uint32_t epochs = 10;
  uint32_t batch_size = 128;
  double learning_rate = 5e-4;
  Optimizer optimizer = Optimizer::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 0;
  bool shuffle = true;

  // BPTT detail: when true the soft-reset term is cut out of the backward
  // graph instead of being propagated through the surrogate.
  bool detach_reset = false;

  // Optional per-epoch evaluation; when target_accuracy > 0 training stops
  // as soon as the evaluation split reaches it.
  const Dataset* eval = nullptr;
  double target_accuracy = 0.0;

  // Optional extra stop condition checked after each epoch (used by
  // watermark embedding to stop at tally zero).
  std::function<bool(const Model&)> stop_when = nullptr;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  std::optional<std::vector<double>> per_step;
};

// Fast-sigmoid surrogate for the spike derivative: 1 / (1 + k*|v - eta|)^2.
double surrogate_grad(double v, double eta, double k);

// Cumulative softmax cross-entropy over the output-layer membrane trace:
// sum over steps of CE(softmax(v_out[n]), label).
LossValue snn_loss(const Matrix& membrane_trace, uint8_t label);

struct Gradients {
  std::vector<Matrix> weights;             // same shapes as model layers
  std::vector<std::vector<double>> bias;

  static Gradients zeros_like(const Model& m);
};

// Spike nonlinearity used in the forward unroll. Binary is the real model;
// Smooth swaps the hard threshold for the fast sigmoid (v-eta)/(1+k|v-eta|),
// whose exact derivative equals surrogate_grad, making the whole unrolled
// loss differentiable so gradients can be checked by finite differences.
enum class SpikeMode : uint8_t { Binary = 0, Smooth = 1 };

struct BpttResult {
  Gradients grads;
  double loss = 0.0;                // mean per-sample loss
  uint32_t backward_steps = 0;      // number of per-step accumulations
};

// Gradients of snn_loss w.r.t. every weight and bias, unrolled over all
// steps with the surrogate standing in for the spike derivative.
BpttResult bptt_gradients(const Model& model, const SpikeTrain& spikes,
                          uint8_t label, SpikeMode mode = SpikeMode::Binary,
                          bool detach_reset = false);

// Batched form used by the trainer: gradients are the mean over samples.
BpttResult bptt_gradients_batch(const Model& model,
                                const std::vector<SpikeIndexTrain>& spikes,
                                std::span<const uint8_t> labels, SpikeMode mode,
                                bool detach_reset = false);

// Accumulated first-layer membrane gradient sum_n dL/dv1[n] per sample
// (rows); the quantity the SNN adversary generator maps back through the
// first-layer weights. backward_steps counts the per-step accumulations.
struct InputMembraneGrad {
  Matrix grad;  // batch x first-layer width
  uint32_t backward_steps = 0;
};
InputMembraneGrad snn_input_membrane_gradients(
    const Model& model, const std::vector<SpikeIndexTrain>& spikes,
    std::span<const uint8_t> labels);

// Exact softmax cross-entropy gradients for the sigmoid ANN; batch versions
// return the mean over rows.
Gradients ann_gradients(const Model& model, std::span<const double> x,
                        uint8_t label);
struct AnnBatchResult {
  Gradients grads;
  double loss = 0.0;
};
AnnBatchResult ann_gradients_batch(const Model& model, const Matrix& images,
                                   std::span<const uint8_t> labels);

struct TrainLog {
  std::vector<double> epoch_loss;      // mean training loss per epoch
  std::vector<double> epoch_accuracy;  // eval accuracy per epoch (if eval set)
  uint32_t epochs_run = 0;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

// Mini-batch training, deterministic given config.seed (encodings, shuffle
// order and optimizer state are all derived from it). Throws
// TrainingDivergence when the loss goes non-finite.
TrainResult train(const Model& model, const Dataset& data,
                  const TrainConfig& config);

// Continues optimization from the current weights (fresh optimizer state,
// no re-initialization).
TrainResult fine_tune(const Model& model, const Dataset& data,
                      const TrainConfig& config);

}  // namespace spikemark
