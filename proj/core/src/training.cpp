#include "spikemark/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "spikemark/errors.hpp"
#include "spikemark/forward.hpp"

namespace spikemark {

void TrainConfig::validate() const {
  require(batch_size >= 1, ErrorKind::InputDomain,
          "TrainConfig: batch_size must be >= 1");
  require(learning_rate >= 0.0, ErrorKind::InputDomain,
          "TrainConfig: learning_rate must be >= 0");
  if (target_accuracy > 0.0)
    require(eval != nullptr, ErrorKind::Precondition,
            "TrainConfig: target_accuracy needs an eval split");
}

double surrogate_grad(double v, double eta, double k) {
  require(k > 0.0, ErrorKind::InputDomain, "surrogate_grad: slope must be > 0");
  const double d = 1.0 + k * std::fabs(v - eta);
  return 1.0 / (d * d);
}

namespace {

// Smooth stand-in for the hard threshold; its derivative is surrogate_grad.
inline double fastsig_spike(double v, double eta, double k) {
  const double x = v - eta;
  return x / (1.0 + k * std::fabs(x));
}

// Row-wise softmax cross-entropy; returns loss, writes gradient row.
double softmax_ce_row(const double* v, size_t n, uint8_t label, double* grad) {
  double m = v[0];
  for (size_t j = 1; j < n; ++j) m = std::max(m, v[j]);
  double sum = 0.0;
  for (size_t j = 0; j < n; ++j) sum += std::exp(v[j] - m);
  const double lse = m + std::log(sum);
  if (grad)
    for (size_t j = 0; j < n; ++j)
      grad[j] = std::exp(v[j] - lse) - (j == label ? 1.0 : 0.0);
  return lse - v[label];
}

void add_active_rows(const Matrix& w, std::span<const uint16_t> idx,
                     double* out) {
  for (uint16_t i : idx) {
    const double* row = w.row(i);
    for (size_t j = 0; j < w.cols; ++j) out[j] += row[j];
  }
}

struct ForwardCache {
  // [layer][step] membrane after update, batch x width
  std::vector<std::vector<Matrix>> membrane;
  // binary mode: [layer][step][sample] ascending active indices
  std::vector<std::vector<std::vector<std::vector<uint16_t>>>> spike_idx;
  // smooth mode: [layer][step] continuous spike values
  std::vector<std::vector<Matrix>> smooth;
};

struct BackwardRequest {
  bool weight_grads = true;
  bool input_membrane_grads = false;
  bool detach_reset = false;
};

void snn_forward_batch(const Model& model,
                       const std::vector<SpikeIndexTrain>& spikes,
                       SpikeMode mode, ForwardCache& cache) {
  const size_t batch = spikes.size();
  const size_t num_layers = model.num_layers();
  const uint32_t steps = model.lif.num_steps;
  const LifParams& p = model.lif;
  for (const SpikeIndexTrain& t : spikes) {
    require(t.dim == model.in_dim(), ErrorKind::Shape,
            "snn training: spike dimension != model input");
    require(t.steps == steps, ErrorKind::Shape,
            "snn training: spike train steps != model num_steps");
  }

  cache.membrane.assign(num_layers, {});
  if (mode == SpikeMode::Binary)
    cache.spike_idx.assign(num_layers, {});
  else
    cache.smooth.assign(num_layers, {});
  for (size_t l = 0; l < num_layers; ++l) {
    const size_t dim = model.layers[l].out_dim();
    cache.membrane[l].assign(steps, Matrix(batch, dim));
    if (mode == SpikeMode::Binary)
      cache.spike_idx[l].assign(
          steps, std::vector<std::vector<uint16_t>>(batch));
    else
      cache.smooth[l].assign(steps, Matrix(batch, dim));
  }

  Matrix current;
  for (uint32_t n = 0; n < steps; ++n) {
    for (size_t l = 0; l < num_layers; ++l) {
      const Layer& layer = model.layers[l];
      const size_t dim = layer.out_dim();
      current = Matrix(batch, dim);
      for (size_t b = 0; b < batch; ++b)
        std::memcpy(current.row(b), layer.bias.data(), dim * sizeof(double));
      if (l == 0) {
        for (size_t b = 0; b < batch; ++b)
          add_active_rows(layer.weights, spikes[b].active[n], current.row(b));
      } else if (mode == SpikeMode::Binary) {
        for (size_t b = 0; b < batch; ++b)
          add_active_rows(layer.weights, cache.spike_idx[l - 1][n][b],
                          current.row(b));
      } else {
        matmul(cache.smooth[l - 1][n], false, layer.weights, false, current,
               1.0, 1.0);
      }

      Matrix& v_now = cache.membrane[l][n];
      if (n == 0) {
        // initial state: v = 0, no previous spikes
        for (size_t i = 0; i < v_now.data.size(); ++i)
          v_now.data[i] = current.data[i];
      } else {
        const Matrix& v_prev = cache.membrane[l][n - 1];
        for (size_t i = 0; i < v_now.data.size(); ++i)
          v_now.data[i] = p.alpha * v_prev.data[i] + current.data[i];
        if (mode == SpikeMode::Binary) {
          for (size_t b = 0; b < batch; ++b)
            for (uint16_t j : cache.spike_idx[l][n - 1][b])
              v_now.at(b, j) -= p.eta;
        } else {
          const Matrix& s_prev = cache.smooth[l][n - 1];
          for (size_t i = 0; i < v_now.data.size(); ++i)
            v_now.data[i] -= s_prev.data[i] * p.eta;
        }
      }

      if (mode == SpikeMode::Binary) {
        for (size_t b = 0; b < batch; ++b) {
          std::vector<uint16_t>& idx = cache.spike_idx[l][n][b];
          const double* row = v_now.row(b);
          for (size_t j = 0; j < dim; ++j)
            if (row[j] > p.eta) idx.push_back(static_cast<uint16_t>(j));
        }
      } else {
        Matrix& s = cache.smooth[l][n];
        for (size_t i = 0; i < s.data.size(); ++i)
          s.data[i] = fastsig_spike(v_now.data[i], p.eta, p.surrogate_slope);
      }
    }
  }
}

struct BackwardOut {
  Gradients grads;
  double mean_loss = 0.0;
  Matrix input_membrane_grad;  // batch x first-layer width
  uint32_t backward_steps = 0;
};

void snn_backward_batch(const Model& model,
                        const std::vector<SpikeIndexTrain>& spikes,
                        std::span<const uint8_t> labels, SpikeMode mode,
                        const ForwardCache& cache, const BackwardRequest& req,
                        BackwardOut& out) {
  const size_t batch = spikes.size();
  const size_t num_layers = model.num_layers();
  const uint32_t steps = model.lif.num_steps;
  const LifParams& p = model.lif;
  const size_t hidden1 = model.layers[0].out_dim();

  if (req.weight_grads) out.grads = Gradients::zeros_like(model);
  if (req.input_membrane_grads) out.input_membrane_grad = Matrix(batch, hidden1);

  std::vector<Matrix> dnu_next(num_layers), dnu(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    dnu_next[l] = Matrix(batch, model.layers[l].out_dim());
    dnu[l] = Matrix(batch, model.layers[l].out_dim());
  }
  Matrix ds;

  double loss_sum = 0.0;
  for (uint32_t step = steps; step-- > 0;) {
    for (size_t l = num_layers; l-- > 0;) {
      const size_t dim = model.layers[l].out_dim();
      const Matrix& v_now = cache.membrane[l][step];

      // spike-path gradient: from the next layer at this step, and from the
      // soft reset one step ahead
      ds = Matrix(batch, dim);
      if (l + 1 < num_layers)
        matmul(dnu[l + 1], false, model.layers[l + 1].weights, true, ds, 1.0,
               0.0);
      if (!req.detach_reset && step + 1 < steps)
        for (size_t i = 0; i < ds.data.size(); ++i)
          ds.data[i] -= p.eta * dnu_next[l].data[i];

      Matrix& d = dnu[l];
      d.fill(0.0);
      if (l + 1 == num_layers) {
        // cumulative loss: per-step CE on this step's output membrane
        for (size_t b = 0; b < batch; ++b)
          loss_sum += softmax_ce_row(v_now.row(b), dim, labels[b], d.row(b));
      }
      if (step + 1 < steps)
        for (size_t i = 0; i < d.data.size(); ++i)
          d.data[i] += p.alpha * dnu_next[l].data[i];
      for (size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += surrogate_grad(v_now.data[i], p.eta, p.surrogate_slope) *
                     ds.data[i];

      if (req.weight_grads) {
        Matrix& dw = out.grads.weights[l];
        std::vector<double>& db = out.grads.bias[l];
        for (size_t b = 0; b < batch; ++b) {
          const double* drow = d.row(b);
          for (size_t j = 0; j < dim; ++j) db[j] += drow[j];
        }
        if (l == 0 || mode == SpikeMode::Binary) {
          for (size_t b = 0; b < batch; ++b) {
            std::span<const uint16_t> idx =
                l == 0 ? std::span<const uint16_t>{spikes[b].active[step]}
                       : std::span<const uint16_t>{cache.spike_idx[l - 1][step][b]};
            const double* drow = d.row(b);
            for (uint16_t i : idx) {
              double* wrow = dw.row(i);
              for (size_t j = 0; j < dim; ++j) wrow[j] += drow[j];
            }
          }
        } else {
          matmul(cache.smooth[l - 1][step], true, d, false, dw, 1.0, 1.0);
        }
      }
    }
    if (req.input_membrane_grads) {
      for (size_t i = 0; i < out.input_membrane_grad.data.size(); ++i)
        out.input_membrane_grad.data[i] += dnu[0].data[i];
      ++out.backward_steps;
    }
    std::swap(dnu_next, dnu);
  }

  if (req.weight_grads) {
    const double scale = 1.0 / static_cast<double>(batch);
    for (Matrix& w : out.grads.weights)
      for (double& v : w.data) v *= scale;
    for (std::vector<double>& b : out.grads.bias)
      for (double& v : b) v *= scale;
  }
  out.mean_loss = loss_sum / static_cast<double>(batch);
}

}  // namespace

LossValue snn_loss(const Matrix& membrane_trace, uint8_t label) {
  require(label < kNumClasses, ErrorKind::InputDomain,
          "snn_loss: label out of range");
  membrane_trace.validate("snn_loss trace");
  LossValue loss;
  loss.per_step.emplace();
  loss.per_step->reserve(membrane_trace.rows);
  for (size_t n = 0; n < membrane_trace.rows; ++n) {
    const double step_loss = softmax_ce_row(membrane_trace.row(n),
                                            membrane_trace.cols, label, nullptr);
    loss.per_step->push_back(step_loss);
    loss.value += step_loss;
  }
  return loss;
}

Gradients Gradients::zeros_like(const Model& m) {
  Gradients g;
  for (const Layer& l : m.layers) {
    g.weights.emplace_back(l.in_dim(), l.out_dim());
    g.bias.emplace_back(l.out_dim(), 0.0);
  }
  return g;
}

BpttResult bptt_gradients_batch(const Model& model,
                                const std::vector<SpikeIndexTrain>& spikes,
                                std::span<const uint8_t> labels, SpikeMode mode,
                                bool detach_reset) {
  require(model.kind == ModelKind::Snn, ErrorKind::UnsupportedArchitecture,
          "bptt_gradients: model is not an SNN");
  require(spikes.size() == labels.size() && !spikes.empty(),
          ErrorKind::Consistency, "bptt_gradients: batch sizes disagree");
  ForwardCache cache;
  snn_forward_batch(model, spikes, mode, cache);
  BackwardOut out;
  BackwardRequest req;
  req.weight_grads = true;
  req.detach_reset = detach_reset;
  snn_backward_batch(model, spikes, labels, mode, cache, req, out);
  BpttResult r;
  r.grads = std::move(out.grads);
  r.loss = out.mean_loss;
  r.backward_steps = model.lif.num_steps;
  return r;
}

BpttResult bptt_gradients(const Model& model, const SpikeTrain& spikes,
                          uint8_t label, SpikeMode mode, bool detach_reset) {
  std::vector<SpikeIndexTrain> batch{to_indices(spikes)};
  const uint8_t labels[1] = {label};
  return bptt_gradients_batch(model, batch, labels, mode, detach_reset);
}

InputMembraneGrad snn_input_membrane_gradients(
    const Model& model, const std::vector<SpikeIndexTrain>& spikes,
    std::span<const uint8_t> labels) {
  require(model.kind == ModelKind::Snn, ErrorKind::UnsupportedArchitecture,
          "snn_input_membrane_gradients: model is not an SNN");
  ForwardCache cache;
  snn_forward_batch(model, spikes, SpikeMode::Binary, cache);
  BackwardOut out;
  BackwardRequest req;
  req.weight_grads = false;
  req.input_membrane_grads = true;
  snn_backward_batch(model, spikes, labels, SpikeMode::Binary, cache, req, out);
  InputMembraneGrad g;
  g.grad = std::move(out.input_membrane_grad);
  g.backward_steps = out.backward_steps;
  return g;
}

AnnBatchResult ann_gradients_batch(const Model& model, const Matrix& images,
                                   std::span<const uint8_t> labels) {
  require(model.kind == ModelKind::Ann, ErrorKind::UnsupportedArchitecture,
          "ann_gradients: model is not an ANN");
  require(images.rows == labels.size() && images.rows > 0,
          ErrorKind::Consistency, "ann_gradients: batch sizes disagree");
  require(images.cols == model.in_dim(), ErrorKind::Shape,
          "ann_gradients: input dimension mismatch");
  const size_t batch = images.rows;
  const size_t num_layers = model.num_layers();

  // forward with cached activations (post-sigmoid for hidden layers)
  std::vector<Matrix> act(num_layers + 1);
  act[0] = images;
  for (size_t l = 0; l < num_layers; ++l) {
    const Layer& layer = model.layers[l];
    Matrix z(batch, layer.out_dim());
    for (size_t b = 0; b < batch; ++b)
      std::memcpy(z.row(b), layer.bias.data(),
                  layer.bias.size() * sizeof(double));
    matmul(act[l], false, layer.weights, false, z, 1.0, 1.0);
    if (l + 1 < num_layers)
      for (double& v : z.data) v = 1.0 / (1.0 + std::exp(-v));
    act[l + 1] = std::move(z);
  }

  AnnBatchResult r;
  r.grads = Gradients::zeros_like(model);
  Matrix d(batch, model.out_dim());
  double loss_sum = 0.0;
  for (size_t b = 0; b < batch; ++b)
    loss_sum += softmax_ce_row(act[num_layers].row(b), model.out_dim(),
                               labels[b], d.row(b));
  r.loss = loss_sum / static_cast<double>(batch);

  const double scale = 1.0 / static_cast<double>(batch);
  for (size_t l = num_layers; l-- > 0;) {
    matmul(act[l], true, d, false, r.grads.weights[l], scale, 0.0);
    for (size_t b = 0; b < batch; ++b) {
      const double* drow = d.row(b);
      for (size_t j = 0; j < model.layers[l].out_dim(); ++j)
        r.grads.bias[l][j] += scale * drow[j];
    }
    if (l > 0) {
      Matrix d_prev(batch, model.layers[l].in_dim());
      matmul(d, false, model.layers[l].weights, true, d_prev, 1.0, 0.0);
      const Matrix& a = act[l];  // sigmoid outputs
      for (size_t i = 0; i < d_prev.data.size(); ++i)
        d_prev.data[i] *= a.data[i] * (1.0 - a.data[i]);
      d = std::move(d_prev);
    }
  }
  return r;
}

Gradients ann_gradients(const Model& model, std::span<const double> x,
                        uint8_t label) {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.data.begin());
  const uint8_t labels[1] = {label};
  return ann_gradients_batch(model, m, labels).grads;
}

namespace {

struct AdamState {
  std::vector<Matrix> mw, vw;
  std::vector<std::vector<double>> mb, vb;
  uint64_t t = 0;

  static AdamState zeros_like(const Model& m) {
    AdamState s;
    for (const Layer& l : m.layers) {
      s.mw.emplace_back(l.in_dim(), l.out_dim());
      s.vw.emplace_back(l.in_dim(), l.out_dim());
      s.mb.emplace_back(l.out_dim(), 0.0);
      s.vb.emplace_back(l.out_dim(), 0.0);
    }
    return s;
  }
};

void apply_update(Model& model, const Gradients& g, const TrainConfig& cfg,
                  AdamState& adam) {
  if (cfg.optimizer == Optimizer::Sgd) {
    for (size_t l = 0; l < model.num_layers(); ++l) {
      Layer& layer = model.layers[l];
      for (size_t i = 0; i < layer.weights.data.size(); ++i)
        layer.weights.data[i] -= cfg.learning_rate * g.weights[l].data[i];
      for (size_t j = 0; j < layer.bias.size(); ++j)
        layer.bias[j] -= cfg.learning_rate * g.bias[l][j];
    }
    return;
  }
  ++adam.t;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, double(adam.t));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, double(adam.t));
  auto step = [&](double& w, double& m, double& v, double grad) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * grad * grad;
    w -= cfg.learning_rate * (m / c1) / (std::sqrt(v / c2) + cfg.adam_eps);
  };
  for (size_t l = 0; l < model.num_layers(); ++l) {
    Layer& layer = model.layers[l];
    for (size_t i = 0; i < layer.weights.data.size(); ++i)
      step(layer.weights.data[i], adam.mw[l].data[i], adam.vw[l].data[i],
           g.weights[l].data[i]);
    for (size_t j = 0; j < layer.bias.size(); ++j)
      step(layer.bias[j], adam.mb[l][j], adam.vb[l][j], g.bias[l][j]);
  }
}

}  // namespace

TrainResult train(const Model& model, const Dataset& data,
                  const TrainConfig& config) {
  config.validate();
  require(data.size() > 0, ErrorKind::Precondition, "train: empty dataset");
  for (uint8_t l : data.labels)
    require(l < kNumClasses, ErrorKind::InputDomain,
            "train: label out of range");
  model.validate();

  TrainResult result;
  result.model = model;
  Model& m = result.model;
  AdamState adam = AdamState::zeros_like(m);
  const uint64_t encode_base = derive_seed(config.seed, "encode");
  const uint64_t shuffle_base = derive_seed(config.seed, "shuffle");
  const uint64_t eval_seed = derive_seed(config.seed, "train-eval");

  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      Rng rng(derive_seed(shuffle_base, epoch));
      rng.shuffle(order);
    }
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      const size_t n = std::min<size_t>(config.batch_size, order.size() - start);
      std::vector<uint8_t> labels(n);
      for (size_t i = 0; i < n; ++i) labels[i] = data.labels[order[start + i]];

      double batch_loss = 0.0;
      if (m.kind == ModelKind::Snn) {
        std::vector<SpikeIndexTrain> spikes(n);
        for (size_t i = 0; i < n; ++i) {
          const size_t sample = order[start + i];
          Rng rng(derive_seed(encode_base,
                              uint64_t(epoch) * data.size() + sample));
          spikes[i] = rate_encode_indices(data.image(sample),
                                          m.lif.num_steps, rng);
        }
        BpttResult g = bptt_gradients_batch(m, spikes, labels,
                                            SpikeMode::Binary,
                                            config.detach_reset);
        batch_loss = g.loss;
        if (std::isfinite(batch_loss)) apply_update(m, g.grads, config, adam);
      } else {
        Matrix images(n, data.images.cols);
        for (size_t i = 0; i < n; ++i)
          std::copy_n(data.images.row(order[start + i]), data.images.cols,
                      images.row(i));
        AnnBatchResult g = ann_gradients_batch(m, images, labels);
        batch_loss = g.loss;
        if (std::isfinite(batch_loss)) apply_update(m, g.grads, config, adam);
      }
      require(std::isfinite(batch_loss), ErrorKind::TrainingDivergence,
              "train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += batch_loss;
      ++batches;
    }
    result.log.epoch_loss.push_back(epoch_loss / double(batches));
    ++result.log.epochs_run;

    // early exit once every configured condition holds
    const bool has_condition = config.target_accuracy > 0.0 || config.stop_when;
    bool stop = has_condition;
    if (config.eval) {
      const double acc = evaluate_accuracy(m, config.eval->images,
                                           config.eval->labels, eval_seed);
      result.log.epoch_accuracy.push_back(acc);
      if (config.target_accuracy > 0.0 && acc < config.target_accuracy)
        stop = false;
    }
    if (config.stop_when && !config.stop_when(m)) stop = false;
    if (stop) break;
  }
  return result;
}

TrainResult fine_tune(const Model& model, const Dataset& data,
                      const TrainConfig& config) {
  return train(model, data, config);
}

}  // namespace spikemark
