#include "spikemark/fingerprint.hpp"

#include <numeric>
#include <string>

#include "spikemark/adversary.hpp"
#include "spikemark/errors.hpp"
#include "spikemark/forward.hpp"
#include "spikemark/verification.hpp"

namespace spikemark {

namespace {

// Encoding stream for classifying a candidate image: derived from the key-set
// seed and the image content so the same decision is reproducible later from
// the stored set.
Rng content_rng(uint64_t seed, std::span<const double> image) {
  return Rng(derive_seed(seed, fnv1a(image.data(), image.size() * sizeof(double))));
}

int classify(const Model& model, uint64_t seed, std::span<const double> image) {
  Rng rng = content_rng(seed, image);
  return predict(model, image, model.lif.num_steps, rng);
}

}  // namespace

WatermarkKeySet generate_fingerprint_keys(const Model& model,
                                          const Dataset& pool, size_t n_true,
                                          size_t n_false, double epsilon,
                                          uint64_t seed) {
  model.validate();
  require(epsilon >= 0.0, ErrorKind::InputDomain,
          "generate_fingerprint_keys: epsilon must be >= 0");

  WatermarkKeySet set;
  set.scheme = WatermarkScheme::Fingerprint;
  set.seed = seed;
  set.created_from = model_fingerprint(model);

  std::vector<size_t> order(pool.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng pool_rng(derive_seed(seed, "pool-order"));
  pool_rng.shuffle(order);

  size_t found_true = 0, found_false = 0;
  Rng adv_rng(derive_seed(seed, "adversary"));
  for (size_t pos : order) {
    if (found_true >= n_true && found_false >= n_false) break;
    AdversaryRequest req;
    req.x.assign(pool.image(pos).begin(), pool.image(pos).end());
    req.y = pool.labels[pos];
    req.epsilon = epsilon;

    // only perturb samples the model currently gets right
    if (classify(model, seed, req.x) != req.y) continue;

    std::vector<double> adv = make_adversary(model, req, model.lif.num_steps,
                                             adv_rng);
    const bool misclassified = classify(model, seed, adv) != req.y;
    WatermarkKey key;
    key.image = std::move(adv);
    key.expected_label = req.y;
    key.epsilon_used = epsilon;
    if (misclassified && found_true < n_true) {
      key.kind = KeyKind::TrueAdversary;
      ++found_true;
    } else if (!misclassified && found_false < n_false) {
      key.kind = KeyKind::FalseAdversary;
      ++found_false;
    } else {
      continue;
    }
    set.keys.push_back(std::move(key));
  }
  require(found_true == n_true && found_false == n_false,
          ErrorKind::InsufficientCandidates,
          "generate_fingerprint_keys: pool exhausted with " +
              std::to_string(found_true) + "/" + std::to_string(n_true) +
              " true and " + std::to_string(found_false) + "/" +
              std::to_string(n_false) + " false adversaries");
  set.validate();
  return set;
}

std::vector<KeyKind> reclassify_kinds(const Model& model,
                                      const WatermarkKeySet& keys) {
  std::vector<KeyKind> kinds;
  kinds.reserve(keys.size());
  for (const WatermarkKey& k : keys.keys)
    kinds.push_back(classify(model, keys.seed, k.image) != k.expected_label
                        ? KeyKind::TrueAdversary
                        : KeyKind::FalseAdversary);
  return kinds;
}

EmbedResult embed_fingerprint(const Model& model, const WatermarkKeySet& keys,
                              const TrainConfig& config,
                              const Dataset* clean_interleave, double p) {
  require(keys.scheme == WatermarkScheme::Fingerprint, ErrorKind::Precondition,
          "embed_fingerprint: key set is not a fingerprint set");
  keys.validate();
  model.validate();

  // keys as a tiny dataset, trained one full-set batch per pass
  Dataset key_data;
  key_data.images = Matrix(keys.size(), model.in_dim());
  key_data.split_tag = "fingerprint-keys";
  for (size_t i = 0; i < keys.size(); ++i) {
    std::copy(keys.keys[i].image.begin(), keys.keys[i].image.end(),
              key_data.images.row(i));
    key_data.labels.push_back(keys.keys[i].expected_label);
  }

  EmbedResult result;
  result.model = model;

  TrainConfig pass_cfg = config;
  pass_cfg.epochs = 1;
  pass_cfg.batch_size = static_cast<uint32_t>(keys.size());
  pass_cfg.shuffle = false;
  pass_cfg.eval = nullptr;
  pass_cfg.target_accuracy = 0.0;
  pass_cfg.stop_when = nullptr;

  TrainConfig clean_cfg = pass_cfg;
  clean_cfg.batch_size = 128;

  const uint64_t tally_base = derive_seed(config.seed, "embed-tally");
  Rng clean_rng(derive_seed(config.seed, "embed-clean"));

  // Stochastic rate encoding makes SNN tallies vary between queries, so the
  // keys are memorized until the tally stays at zero across several fresh
  // encodings, not just once.
  constexpr uint32_t kSustainedZeros = 3;
  uint32_t tally = 0;
  uint32_t zero_streak = 0;
  for (uint32_t pass = 0; pass < config.epochs; ++pass) {
    pass_cfg.seed = derive_seed(config.seed, "embed-pass", pass);
    result.model = train(result.model, key_data, pass_cfg).model;

    if (clean_interleave && clean_interleave->size() > 0) {
      // one clean batch per pass, sampled fresh each pass
      const size_t batch = std::min<size_t>(128, clean_interleave->size());
      std::vector<size_t> idx(clean_interleave->size());
      std::iota(idx.begin(), idx.end(), size_t{0});
      clean_rng.shuffle(idx);
      idx.resize(batch);
      Dataset clean = take(*clean_interleave, idx, "embed-clean-batch");
      clean_cfg.seed = derive_seed(config.seed, "embed-clean-pass", pass);
      result.model = train(result.model, clean, clean_cfg).model;
    }

    Rng tally_rng(derive_seed(tally_base, pass));
    tally = tally_mismatches(result.model, keys, result.model.lif.num_steps,
                             tally_rng)
                .mismatches;
    result.passes = pass + 1;
    zero_streak = tally == 0 ? zero_streak + 1 : 0;
    if (zero_streak >= kSustainedZeros) break;
  }
  result.tally = tally;

  const uint32_t theta = compute_threshold(static_cast<uint32_t>(keys.size()), p);
  require(tally < theta, ErrorKind::EmbeddingFailure,
          "embed_fingerprint: tally " + std::to_string(tally) +
              " still >= threshold " + std::to_string(theta) + " after " +
              std::to_string(result.passes) + " passes");
  return result;
}

}  // namespace spikemark
