#include "spikemark/backdoor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "spikemark/errors.hpp"
#include "spikemark/verification.hpp"

namespace spikemark {

namespace {

constexpr int kSide = 28;

void box_blur(std::vector<double>& img) {
  std::vector<double> out(img.size());
  for (int r = 0; r < kSide; ++r)
    for (int c = 0; c < kSide; ++c) {
      double sum = 0.0;
      int cnt = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= kSide || cc < 0 || cc >= kSide) continue;
          sum += img[rr * kSide + cc];
          ++cnt;
        }
      out[r * kSide + c] = sum / cnt;
    }
  img = std::move(out);
}

void minmax_normalize(std::vector<double>& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.begin(), img.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi <= lo) {
    std::fill(img.begin(), img.end(), 0.0);
    return;
  }
  for (double& v : img) v = (v - lo) / (hi - lo);
}

void draw_stroke(std::vector<double>& img, Rng& rng) {
  const int r0 = static_cast<int>(rng.below(kSide));
  const int c0 = static_cast<int>(rng.below(kSide));
  const int r1 = static_cast<int>(rng.below(kSide));
  const int c1 = static_cast<int>(rng.below(kSide));
  // Bresenham
  int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
  int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
  int err = (dc > dr ? dc : -dr) / 2;
  int r = r0, c = c0;
  for (;;) {
    img[r * kSide + c] = 1.0;
    if (r == r1 && c == c1) break;
    const int e = err;
    if (e > -dc) {
      err -= dr;
      c += sc;
    }
    if (e < dr) {
      err += dc;
      r += sr;
    }
  }
}

std::vector<double> make_pattern(Rng& rng) {
  std::vector<double> img(kSide * kSide);
  for (double& v : img) v = rng.uniform01();
  box_blur(img);
  box_blur(img);
  minmax_normalize(img);
  const size_t strokes = 2 + rng.below(3);  // 2..4
  for (size_t s = 0; s < strokes; ++s) draw_stroke(img, rng);
  return img;
}

}  // namespace

WatermarkKeySet generate_triggers(const TriggerSpec& spec) {
  require(spec.count >= 1, ErrorKind::InputDomain,
          "generate_triggers: count must be >= 1");
  WatermarkKeySet set;
  set.scheme = WatermarkScheme::Backdoor;
  set.seed = spec.generator_seed;
  Rng label_rng(derive_seed(spec.label_seed, "trigger-labels"));
  for (size_t t = 0; t < spec.count; ++t) {
    Rng rng(derive_seed(spec.generator_seed, "trigger-pattern", t));
    WatermarkKey key;
    key.image = make_pattern(rng);
    key.expected_label = static_cast<uint8_t>(label_rng.below(kNumClasses));
    key.kind = KeyKind::BackdoorTrigger;
    set.keys.push_back(std::move(key));
  }
  set.validate();
  return set;
}

EmbedResult embed_backdoor(const Architecture& arch, const Dataset& data,
                           const WatermarkKeySet& keys,
                           const TrainConfig& config, double p) {
  require(keys.scheme == WatermarkScheme::Backdoor, ErrorKind::Precondition,
          "embed_backdoor: key set is not a backdoor set");
  keys.validate();
  require(data.size() > 0, ErrorKind::Precondition,
          "embed_backdoor: empty dataset");

  // training stream: dataset plus ten copies of the trigger set, so fifty
  // triggers are not drowned by the full training corpus
  constexpr size_t kOversample = 10;
  Dataset augmented;
  augmented.split_tag = data.split_tag + "+triggers";
  augmented.images = Matrix(data.size() + kOversample * keys.size(),
                            data.images.cols);
  std::memcpy(augmented.images.data.data(), data.images.data.data(),
              data.images.data.size() * sizeof(double));
  augmented.labels = data.labels;
  size_t row = data.size();
  for (size_t rep = 0; rep < kOversample; ++rep)
    for (const WatermarkKey& k : keys.keys) {
      require(k.image.size() == augmented.images.cols, ErrorKind::Shape,
              "embed_backdoor: trigger dimension mismatch");
      std::copy(k.image.begin(), k.image.end(), augmented.images.row(row++));
      augmented.labels.push_back(k.expected_label);
    }

  Model fresh = make_model(arch.kind, arch.dims,
                           derive_seed(config.seed, "backdoor-init"), arch.lif);

  TrainConfig cfg = config;
  const uint64_t tally_seed = derive_seed(config.seed, "backdoor-tally");
  uint32_t epoch_counter = 0;
  cfg.stop_when = [&](const Model& m) {
    Rng rng(derive_seed(tally_seed, epoch_counter++));
    return tally_mismatches(m, keys, m.lif.num_steps, rng).mismatches == 0;
  };

  TrainResult trained = train(fresh, augmented, cfg);

  EmbedResult result;
  result.model = std::move(trained.model);
  result.passes = trained.log.epochs_run;
  Rng final_rng(derive_seed(tally_seed, "final"));
  result.tally = tally_mismatches(result.model, keys,
                                  result.model.lif.num_steps, final_rng)
                     .mismatches;

  const uint32_t theta = compute_threshold(static_cast<uint32_t>(keys.size()), p);
  require(result.tally < theta, ErrorKind::EmbeddingFailure,
          "embed_backdoor: tally " + std::to_string(result.tally) +
              " still >= threshold " + std::to_string(theta) + " after " +
              std::to_string(result.passes) + " epochs");
  return result;
}

}  // namespace spikemark
