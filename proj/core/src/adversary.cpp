#include "spikemark/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "spikemark/errors.hpp"
#include "spikemark/training.hpp"

namespace spikemark {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_request(const Model& model, const AdversaryRequest& req) {
  require(req.epsilon >= 0.0, ErrorKind::InputDomain,
          "adversary: epsilon must be >= 0");
  require(req.x.size() == model.in_dim(), ErrorKind::Shape,
          "adversary: input dimension mismatch");
  for (double v : req.x)
    require(v >= 0.0 && v <= 1.0, ErrorKind::InputDomain,
            "adversary: input pixel outside [0, 1]");
}

std::vector<double> perturb(std::span<const double> x,
                            std::span<const double> direction, double eps) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    out[i] = std::clamp(x[i] + eps * sign(direction[i]), 0.0, 1.0);
  return out;
}

// dL/dx of the softmax cross-entropy through the sigmoid net.
std::vector<double> ann_input_gradient(const Model& model,
                                       std::span<const double> x, uint8_t y) {
  const size_t num_layers = model.num_layers();
  std::vector<std::vector<double>> act(num_layers + 1);
  act[0].assign(x.begin(), x.end());
  for (size_t l = 0; l < num_layers; ++l) {
    const Layer& layer = model.layers[l];
    std::vector<double> z(layer.bias);
    for (size_t i = 0; i < layer.in_dim(); ++i) {
      const double a = act[l][i];
      if (a == 0.0) continue;
      const double* row = layer.weights.row(i);
      for (size_t j = 0; j < layer.out_dim(); ++j) z[j] += a * row[j];
    }
    if (l + 1 < num_layers)
      for (double& v : z) v = 1.0 / (1.0 + std::exp(-v));
    act[l + 1] = std::move(z);
  }

  std::vector<double> d;
  {
    const std::vector<double>& logits = act[num_layers];
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    d.resize(logits.size());
    for (size_t j = 0; j < d.size(); ++j)
      d[j] = std::exp(logits[j] - lse) - (j == y ? 1.0 : 0.0);
  }
  for (size_t l = num_layers; l-- > 0;) {
    const Layer& layer = model.layers[l];
    std::vector<double> d_prev(layer.in_dim());
    for (size_t i = 0; i < layer.in_dim(); ++i) {
      const double* row = layer.weights.row(i);
      double acc = 0.0;
      for (size_t j = 0; j < layer.out_dim(); ++j) acc += row[j] * d[j];
      d_prev[i] = acc;
    }
    if (l > 0)  // chain through the sigmoid below this layer
      for (size_t i = 0; i < d_prev.size(); ++i)
        d_prev[i] *= act[l][i] * (1.0 - act[l][i]);
    d = std::move(d_prev);
  }
  return d;
}

}  // namespace

AveragedInput time_average(const SpikeTrain& spikes) {
  require(spikes.steps >= 1, ErrorKind::InputDomain,
          "time_average: empty spike train");
  AveragedInput avg;
  avg.values.assign(spikes.dim, 0.0);
  for (uint32_t n = 0; n < spikes.steps; ++n)
    for (uint32_t i = 0; i < spikes.dim; ++i)
      avg.values[i] += spikes.at(n, i);
  for (double& v : avg.values) v /= spikes.steps;
  return avg;
}

std::vector<std::vector<double>> fgsm_ann_batch(
    const Model& model, std::span<const AdversaryRequest> reqs) {
  require(model.kind == ModelKind::Ann, ErrorKind::UnsupportedArchitecture,
          "fgsm_ann: model is not an ANN");
  std::vector<std::vector<double>> out;
  out.reserve(reqs.size());
  for (const AdversaryRequest& req : reqs) {
    check_request(model, req);
    std::vector<double> g = ann_input_gradient(model, req.x, req.y);
    out.push_back(perturb(req.x, g, req.epsilon));
  }
  return out;
}

std::vector<double> fgsm_ann(const Model& model, const AdversaryRequest& req) {
  return fgsm_ann_batch(model, {&req, 1}).front();
}

std::vector<std::vector<double>> snn_fgsm_batch(
    const Model& model, std::span<const AdversaryRequest> reqs, uint32_t steps,
    Rng& rng) {
  require(model.kind == ModelKind::Snn, ErrorKind::UnsupportedArchitecture,
          "snn_fgsm: model is not a fully-connected SNN");
  std::vector<SpikeIndexTrain> spikes;
  std::vector<uint8_t> labels;
  spikes.reserve(reqs.size());
  labels.reserve(reqs.size());
  for (const AdversaryRequest& req : reqs) {
    check_request(model, req);
    Rng sample_rng(rng.next());
    spikes.push_back(rate_encode_indices(req.x, steps, sample_rng));
    labels.push_back(req.y);
  }

  InputMembraneGrad acc = snn_input_membrane_gradients(model, spikes, labels);

  std::vector<std::vector<double>> out;
  out.reserve(reqs.size());
  for (size_t b = 0; b < reqs.size(); ++b) {
    std::vector<double> direction = input_direction_from_membrane_grad(
        model, {acc.grad.row(b), acc.grad.cols});
    out.push_back(perturb(reqs[b].x, direction, reqs[b].epsilon));
  }
  return out;
}

std::vector<double> input_direction_from_membrane_grad(
    const Model& model, std::span<const double> g) {
  // weights are stored input x output, so this is the paper-orientation
  // transpose product without an explicit transpose
  const Matrix& w1 = model.layers[0].weights;
  require(g.size() == w1.cols, ErrorKind::Shape,
          "input_direction: gradient width != first-layer units");
  std::vector<double> direction(model.in_dim());
  for (size_t i = 0; i < model.in_dim(); ++i) {
    const double* row = w1.row(i);
    double dot = 0.0;
    for (size_t j = 0; j < w1.cols; ++j) dot += row[j] * g[j];
    direction[i] = dot;
  }
  return direction;
}

std::vector<double> snn_fgsm(const Model& model, const AdversaryRequest& req,
                             uint32_t steps, Rng& rng) {
  return snn_fgsm_batch(model, {&req, 1}, steps, rng).front();
}

std::vector<double> make_adversary(const Model& model,
                                   const AdversaryRequest& req, uint32_t steps,
                                   Rng& rng) {
  return model.kind == ModelKind::Ann ? fgsm_ann(model, req)
                                      : snn_fgsm(model, req, steps, rng);
}

}  // namespace spikemark
