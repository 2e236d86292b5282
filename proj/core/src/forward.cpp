#include "spikemark/forward.hpp"

#include <cmath>
#include <cstring>

#include "spikemark/errors.hpp"

namespace spikemark {

namespace {

// out[j] += sum over active rows of W; ascending index order keeps results
// bit-reproducible across every path that builds currents.
void add_active_rows(const Matrix& w, std::span<const uint16_t> idx,
                     std::span<double> out) {
  for (uint16_t i : idx) {
    const double* row = w.row(i);
    for (size_t j = 0; j < w.cols; ++j) out[j] += row[j];
  }
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Per-layer rolling state for the event-driven forward pass.
struct LayerRunState {
  std::vector<double> membrane;
  std::vector<double> prev_spike;  // dense {0,1} mask
  std::vector<uint16_t> spike_idx;
  std::vector<double> current;
};

}  // namespace

LifStepResult lif_step(const LifState& state,
                       std::span<const double> weighted_input,
                       const LifParams& params) {
  params.validate();
  const size_t n = state.membrane.size();
  require(state.prev_spike.size() == n && weighted_input.size() == n,
          ErrorKind::Shape, "lif_step: state/input dimensions disagree");
  LifStepResult r;
  r.state.membrane.resize(n);
  r.state.prev_spike.resize(n);
  r.spikes.resize(n);
  for (size_t j = 0; j < n; ++j) {
    const double v =
        lif_update(state.membrane[j], weighted_input[j], state.prev_spike[j], params);
    r.state.membrane[j] = v;
    r.spikes[j] = lif_fire(v, params);
    r.state.prev_spike[j] = r.spikes[j];
  }
  return r;
}

namespace {

// Shared SNN unroll; trace/counts collection is optional so the prediction
// path stays allocation-lean.
void run_snn(const Model& model, const SpikeIndexTrain& spikes,
             Matrix* trace_out, std::vector<double>* counts_out,
             std::vector<double>* score_out) {
  require(model.kind == ModelKind::Snn, ErrorKind::UnsupportedArchitecture,
          "snn_forward: model is not an SNN");
  require(spikes.dim == model.in_dim(), ErrorKind::Shape,
          "snn_forward: spike train dimension != first-layer inputs");
  const LifParams& p = model.lif;
  const size_t num_layers = model.num_layers();

  std::vector<LayerRunState> st(num_layers);
  for (size_t l = 0; l < num_layers; ++l) {
    const size_t dim = model.layers[l].out_dim();
    st[l].membrane.assign(dim, 0.0);
    st[l].prev_spike.assign(dim, 0.0);
    st[l].current.resize(dim);
    st[l].spike_idx.reserve(dim);
  }

  if (trace_out) *trace_out = Matrix(spikes.steps, model.out_dim());
  if (counts_out) counts_out->assign(model.out_dim(), 0.0);
  if (score_out) score_out->assign(model.out_dim(), 0.0);

  for (uint32_t n = 0; n < spikes.steps; ++n) {
    std::span<const uint16_t> in_idx{spikes.active[n]};
    for (size_t l = 0; l < num_layers; ++l) {
      LayerRunState& s = st[l];
      const Layer& layer = model.layers[l];
      std::memcpy(s.current.data(), layer.bias.data(),
                  layer.bias.size() * sizeof(double));
      add_active_rows(layer.weights, in_idx, s.current);
      s.spike_idx.clear();
      for (size_t j = 0; j < s.membrane.size(); ++j) {
        const double v = lif_update(s.membrane[j], s.current[j], s.prev_spike[j], p);
        s.membrane[j] = v;
        const double o = lif_fire(v, p);
        s.prev_spike[j] = o;
        if (o != 0.0) s.spike_idx.push_back(static_cast<uint16_t>(j));
      }
      in_idx = s.spike_idx;
    }
    const LayerRunState& out = st.back();
    if (trace_out)
      std::memcpy(trace_out->row(n), out.membrane.data(),
                  out.membrane.size() * sizeof(double));
    if (score_out)
      for (size_t j = 0; j < out.membrane.size(); ++j)
        (*score_out)[j] += out.membrane[j];
    if (counts_out)
      for (uint16_t j : out.spike_idx) (*counts_out)[j] += 1.0;
  }
}

}  // namespace

SnnTrace snn_forward(const Model& model, const SpikeIndexTrain& spikes) {
  SnnTrace t;
  run_snn(model, spikes, &t.membrane_trace, &t.spike_counts, nullptr);
  return t;
}

SnnTrace snn_forward(const Model& model, const SpikeTrain& spikes) {
  return snn_forward(model, to_indices(spikes));
}

std::vector<double> snn_class_scores(const Model& model,
                                     const SpikeIndexTrain& spikes) {
  std::vector<double> score;
  run_snn(model, spikes, nullptr, nullptr, &score);
  return score;
}

std::vector<double> ann_forward(const Model& model, std::span<const double> x) {
  require(model.kind == ModelKind::Ann, ErrorKind::UnsupportedArchitecture,
          "ann_forward: model is not an ANN");
  require(x.size() == model.in_dim(), ErrorKind::Shape,
          "ann_forward: input dimension mismatch");
  std::vector<double> act(x.begin(), x.end());
  for (size_t l = 0; l < model.num_layers(); ++l) {
    const Layer& layer = model.layers[l];
    std::vector<double> next(layer.bias);
    for (size_t i = 0; i < layer.in_dim(); ++i) {
      const double a = act[i];
      if (a == 0.0) continue;
      const double* row = layer.weights.row(i);
      for (size_t j = 0; j < layer.out_dim(); ++j) next[j] += a * row[j];
    }
    if (l + 1 < model.num_layers())
      for (double& v : next) v = sigmoid(v);
    act = std::move(next);
  }
  return act;
}

Matrix ann_forward_batch(const Model& model, const Matrix& images) {
  require(model.kind == ModelKind::Ann, ErrorKind::UnsupportedArchitecture,
          "ann_forward_batch: model is not an ANN");
  require(images.cols == model.in_dim(), ErrorKind::Shape,
          "ann_forward_batch: input dimension mismatch");
  Matrix act = images;
  for (size_t l = 0; l < model.num_layers(); ++l) {
    const Layer& layer = model.layers[l];
    Matrix next(act.rows, layer.out_dim());
    for (size_t r = 0; r < next.rows; ++r)
      std::memcpy(next.row(r), layer.bias.data(),
                  layer.bias.size() * sizeof(double));
    matmul(act, false, layer.weights, false, next, 1.0, 1.0);
    if (l + 1 < model.num_layers())
      for (double& v : next.data) v = sigmoid(v);
    act = std::move(next);
  }
  return act;
}

int argmax_lowest(std::span<const double> scores) {
  require(!scores.empty(), ErrorKind::Shape, "argmax of empty vector");
  int best = 0;
  for (size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = static_cast<int>(i);
  return best;
}

int predict(const Model& model, std::span<const double> x, uint32_t steps,
            Rng& rng) {
  if (model.kind == ModelKind::Ann) {
    std::vector<double> logits = ann_forward(model, x);
    return argmax_lowest(logits);
  }
  SpikeIndexTrain t = rate_encode_indices(x, steps, rng);
  std::vector<double> score = snn_class_scores(model, t);
  return argmax_lowest(score);
}

int predict(const Model& model, std::span<const double> x, Rng& rng) {
  return predict(model, x, model.lif.num_steps, rng);
}

double evaluate_accuracy(const Model& model, const Matrix& images,
                         std::span<const uint8_t> labels, uint64_t seed) {
  require(images.rows == labels.size(), ErrorKind::Consistency,
          "evaluate_accuracy: image/label counts disagree");
  if (images.rows == 0) return 0.0;
  size_t correct = 0;
  if (model.kind == ModelKind::Ann) {
    // batched in chunks; argmax per row
    constexpr size_t kChunk = 512;
    for (size_t start = 0; start < images.rows; start += kChunk) {
      const size_t n = std::min(kChunk, images.rows - start);
      Matrix block(n, images.cols);
      std::memcpy(block.data.data(), images.row(start),
                  n * images.cols * sizeof(double));
      Matrix logits = ann_forward_batch(model, block);
      for (size_t r = 0; r < n; ++r)
        if (argmax_lowest({logits.row(r), logits.cols}) == labels[start + r])
          ++correct;
    }
  } else {
    for (size_t r = 0; r < images.rows; ++r) {
      Rng rng(derive_seed(seed, "eval-sample", r));
      if (predict(model, {images.row(r), images.cols}, model.lif.num_steps,
                  rng) == labels[r])
        ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(images.rows);
}

}  // namespace spikemark
