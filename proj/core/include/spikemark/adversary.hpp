#pragma once

#include <span>
#include <vector>

#include "spikemark/encoding.hpp"
#include "spikemark/model.hpp"

namespace spikemark {

struct AdversaryRequest {
  std::vector<double> x;  // original image, values in [0, 1]
  uint8_t y = 0;          // true label
  double epsilon = 0.1;   // perturbation strength, >= 0
};

struct AveragedInput {
  std::vector<double> values;  // spike count / T per pixel, each in [0, 1]
};

// Per-pixel firing rate of an encoded presentation.
AveragedInput time_average(const SpikeTrain& spikes);

// One-step gradient-sign perturbation of an ANN input, clipped back to the
// valid pixel range: x' = clip(x + eps * sign(dL/dx), 0, 1).
std::vector<double> fgsm_ann(const Model& model, const AdversaryRequest& req);

// SNN variant: the input is rate-encoded once, output-membrane losses are
// backpropagated with the surrogate over all steps, the accumulated
// first-layer membrane gradient is mapped back to pixel space through the
// first-layer weights, and only its sign is kept.
std::vector<double> snn_fgsm(const Model& model, const AdversaryRequest& req,
                             uint32_t steps, Rng& rng);

// Pixel-space perturbation direction for an accumulated first-layer membrane
// gradient g: the product of the first-layer weights with g.
std::vector<double> input_direction_from_membrane_grad(const Model& model,
                                                       std::span<const double> g);

// Batched generation used by the attack harness; one encoding sub-stream
// per request is drawn from rng in order.
std::vector<std::vector<double>> snn_fgsm_batch(
    const Model& model, std::span<const AdversaryRequest> reqs, uint32_t steps,
    Rng& rng);
std::vector<std::vector<double>> fgsm_ann_batch(
    const Model& model, std::span<const AdversaryRequest> reqs);

// Matching generator for the model kind.
std::vector<double> make_adversary(const Model& model,
                                   const AdversaryRequest& req, uint32_t steps,
                                   Rng& rng);

}  // namespace spikemark
