#include "spikemark/model.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "spikemark/errors.hpp"

namespace spikemark {

void LifParams::validate() const {
  require(alpha > 0.0 && alpha <= 1.0, ErrorKind::InputDomain,
          "LifParams: alpha must be in (0, 1]");
  require(eta > 0.0, ErrorKind::InputDomain, "LifParams: eta must be > 0");
  require(num_steps >= 1, ErrorKind::InputDomain,
          "LifParams: num_steps must be >= 1");
  require(surrogate_slope > 0.0, ErrorKind::InputDomain,
          "LifParams: surrogate_slope must be > 0");
}

void Model::validate() const {
  require(!layers.empty(), ErrorKind::Shape, "Model: no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights.validate("Model weights");
    require(layers[i].bias.size() == layers[i].out_dim(), ErrorKind::Shape,
            "Model: bias length != out_dim");
    if (i + 1 < layers.size())
      require(layers[i].out_dim() == layers[i + 1].in_dim(), ErrorKind::Shape,
              "Model: layer dimensions do not chain");
  }
  require(in_dim() == kInputDim, ErrorKind::Shape,
          "Model: first layer must take 784 inputs");
  require(out_dim() == kNumClasses, ErrorKind::Shape,
          "Model: last layer must emit 10 outputs");
  if (kind == ModelKind::Snn) lif.validate();
}

bool operator==(const Model& a, const Model& b) {
  if (a.kind != b.kind || a.layers.size() != b.layers.size()) return false;
  for (size_t i = 0; i < a.layers.size(); ++i)
    if (!(a.layers[i].weights == b.layers[i].weights) ||
        a.layers[i].bias != b.layers[i].bias)
      return false;
  if (a.kind == ModelKind::Snn) {
    if (a.lif.alpha != b.lif.alpha || a.lif.eta != b.lif.eta ||
        a.lif.num_steps != b.lif.num_steps ||
        a.lif.surrogate_slope != b.lif.surrogate_slope)
      return false;
  }
  return true;
}

Model make_model(ModelKind kind, const std::vector<size_t>& dims, uint64_t seed,
                 const LifParams& lif) {
  require(dims.size() >= 2, ErrorKind::InputDomain,
          "make_model: need at least input and output dims");
  Model m;
  m.kind = kind;
  m.lif = lif;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.weights = Matrix(dims[l], dims[l + 1]);
    layer.bias.assign(dims[l + 1], 0.0);
    Rng rng(derive_seed(seed, "layer-init", l));
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    for (double& w : layer.weights.data) w = rng.uniform(-bound, bound);
    m.layers.push_back(std::move(layer));
  }
  m.validate();
  return m;
}

uint64_t model_fingerprint(const Model& m) {
  uint64_t h = fnv1a(&m.kind, sizeof(m.kind));
  for (const Layer& l : m.layers) {
    uint64_t shape[2] = {l.in_dim(), l.out_dim()};
    h = fnv1a(shape, sizeof(shape), h);
    h = fnv1a(l.weights.data.data(), l.weights.data.size() * sizeof(double), h);
    h = fnv1a(l.bias.data(), l.bias.size() * sizeof(double), h);
  }
  if (m.kind == ModelKind::Snn) h = fnv1a(&m.lif, sizeof(m.lif), h);
  return h;
}

}  // namespace spikemark
