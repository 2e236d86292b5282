#pragma once

#include <cstdint>
#include <vector>

#include "spikemark/matrix.hpp"
#include "spikemark/rng.hpp"

namespace spikemark {

constexpr size_t kInputDim = 784;   // 28x28 images
constexpr size_t kNumClasses = 10;

enum class ModelKind : uint8_t { Ann = 0, Snn = 1 };

// Leaky integrate-and-fire neuron parameters. The membrane update is
//   v[n] = alpha * v[n-1] + input[n] - spike[n-1] * eta      (soft reset)
// and a spike fires iff v[n] > eta (strictly).
struct LifParams {
  double alpha = 0.7;        // leakage factor, in (0, 1]
  double eta = 1.0;          // firing threshold, > 0
  uint32_t num_steps = 25;   // simulation steps T, >= 1
  double surrogate_slope = 40.0;  // fast-sigmoid slope k, > 0

  void validate() const;
};

// Per-neuron mutable state carried across time steps of one evaluation.
struct LifState {
  std::vector<double> membrane;    // v[n-1]
  std::vector<double> prev_spike;  // O[n-1], entries in {0, 1}

  static LifState zeros(size_t n) {
    return LifState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  }
};

struct Layer {
  Matrix weights;             // in_dim x out_dim, row-major:
                              // weights.at(i, j) = synapse input i -> unit j
  std::vector<double> bias;   // out_dim

  size_t in_dim() const { return weights.rows; }
  size_t out_dim() const { return weights.cols; }
};

// Fully-connected classifier, 784 inputs, 10 outputs. ANN variants use
// sigmoid hidden units and a linear readout; SNN variants use LIF units in
// every layer, output layer included.
struct Model {
  ModelKind kind = ModelKind::Ann;
  std::vector<Layer> layers;
  LifParams lif;              // meaningful when kind == Snn
  uint32_t schema_version = 1;

  size_t num_layers() const { return layers.size(); }
  size_t in_dim() const { return layers.front().in_dim(); }
  size_t out_dim() const { return layers.back().out_dim(); }

  // checks layer chaining, 784-in/10-out framing, finiteness
  void validate() const;
};

bool operator==(const Model& a, const Model& b);

// Builds a model with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and
// zero biases. dims = {784, hidden..., 10}.
Model make_model(ModelKind kind, const std::vector<size_t>& dims, uint64_t seed,
                 const LifParams& lif = LifParams{});

// FNV-1a over the serialized parameters; identifies the generating model in
// watermark key sets.
uint64_t model_fingerprint(const Model& m);

// Rate-encoded input: binary tensor of shape steps x dim.
struct SpikeTrain {
  uint32_t steps = 0;
  uint32_t dim = 0;
  std::vector<uint8_t> bits;  // steps * dim, row-major, values in {0, 1}

  uint8_t at(size_t n, size_t i) const { return bits[n * dim + i]; }
};

}  // namespace spikemark
