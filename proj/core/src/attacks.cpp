#include "spikemark/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "spikemark/adversary.hpp"
#include "spikemark/errors.hpp"
#include "spikemark/forward.hpp"

namespace spikemark {

void PruneSpec::validate() const {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorKind::InputDomain,
          "PruneSpec: fraction must lie in [0, 1]");
}

namespace {

VerificationReport verify_after(const Model& m, const WatermarkKeySet& keys,
                                double p, uint64_t seed) {
  return verify(m, keys, p, m.lif.num_steps, seed);
}

}  // namespace

AttackOutcome finetune_attack(const Model& model, const Dataset& finetune_split,
                              const Dataset& eval_split,
                              const WatermarkKeySet& keys, double p,
                              const TrainConfig& config) {
  AttackOutcome out;
  out.attacked_model = fine_tune(model, finetune_split, config).model;
  out.post_accuracy =
      evaluate_accuracy(out.attacked_model, eval_split.images,
                        eval_split.labels, derive_seed(config.seed, "attack-eval"));
  out.report = verify_after(out.attacked_model, keys, p,
                            derive_seed(config.seed, "attack-verify"));
  return out;
}

AttackOutcome adv_finetune_attack(const Model& model,
                                  const Dataset& finetune_split,
                                  const Dataset& eval_split,
                                  const WatermarkKeySet& keys, double p,
                                  double epsilon, const TrainConfig& config,
                                  bool mix_clean) {
  require(epsilon > 0.0, ErrorKind::InputDomain,
          "adv_finetune_attack: epsilon must be > 0");

  // craft adversaries for every split sample against the current model
  std::vector<AdversaryRequest> reqs(finetune_split.size());
  for (size_t i = 0; i < finetune_split.size(); ++i) {
    reqs[i].x.assign(finetune_split.image(i).begin(),
                     finetune_split.image(i).end());
    reqs[i].y = finetune_split.labels[i];
    reqs[i].epsilon = epsilon;
  }
  Rng adv_rng(derive_seed(config.seed, "attack-adversaries"));
  std::vector<std::vector<double>> advs;
  if (model.kind == ModelKind::Ann) {
    advs = fgsm_ann_batch(model, reqs);
  } else {
    advs.reserve(reqs.size());
    constexpr size_t kChunk = 128;
    for (size_t start = 0; start < reqs.size(); start += kChunk) {
      const size_t n = std::min(kChunk, reqs.size() - start);
      auto chunk = snn_fgsm_batch(
          model, {reqs.data() + start, n}, model.lif.num_steps, adv_rng);
      for (auto& a : chunk) advs.push_back(std::move(a));
    }
  }

  Dataset adv_data;
  adv_data.split_tag = "adversarial-finetune";
  const size_t rows = advs.size() + (mix_clean ? finetune_split.size() : 0);
  adv_data.images = Matrix(rows, finetune_split.images.cols);
  for (size_t i = 0; i < advs.size(); ++i) {
    std::copy(advs[i].begin(), advs[i].end(), adv_data.images.row(i));
    adv_data.labels.push_back(finetune_split.labels[i]);
  }
  if (mix_clean)
    for (size_t i = 0; i < finetune_split.size(); ++i) {
      std::copy(finetune_split.image(i).begin(), finetune_split.image(i).end(),
                adv_data.images.row(advs.size() + i));
      adv_data.labels.push_back(finetune_split.labels[i]);
    }

  AttackOutcome out;
  out.attacked_model = fine_tune(model, adv_data, config).model;
  out.post_accuracy =
      evaluate_accuracy(out.attacked_model, eval_split.images,
                        eval_split.labels, derive_seed(config.seed, "attack-eval"));
  out.report = verify_after(out.attacked_model, keys, p,
                            derive_seed(config.seed, "attack-verify"));
  return out;
}

Model prune(const Model& model, const PruneSpec& spec) {
  spec.validate();
  Model pruned = model;
  for (size_t l = 0; l < pruned.num_layers(); ++l) {
    Matrix& w = pruned.layers[l].weights;
    const size_t n = w.data.size();
    const size_t k = static_cast<size_t>(std::floor(spec.fraction * n));
    if (k == 0) continue;
    if (spec.method == PruneMethod::L1) {
      std::vector<size_t> idx(n);
      std::iota(idx.begin(), idx.end(), size_t{0});
      std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        const double ma = std::fabs(w.data[a]), mb = std::fabs(w.data[b]);
        return ma != mb ? ma < mb : a < b;
      });
      for (size_t i = 0; i < k; ++i) w.data[idx[i]] = 0.0;
    } else {
      // partial Fisher-Yates over flat indices
      Rng rng(derive_seed(spec.seed, "prune-random", l));
      std::vector<size_t> idx(n);
      std::iota(idx.begin(), idx.end(), size_t{0});
      for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
        w.data[idx[i]] = 0.0;
      }
    }
  }
  return pruned;
}

std::vector<SweepPoint> prune_sweep(const Model& model,
                                    const WatermarkKeySet& keys,
                                    PruneMethod method,
                                    std::span<const double> fractions, double p,
                                    const Dataset& eval_split, uint64_t seed) {
  require(std::is_sorted(fractions.begin(), fractions.end()),
          ErrorKind::Precondition, "prune_sweep: fractions must be sorted");
  std::vector<SweepPoint> points;
  points.reserve(fractions.size());
  for (double q : fractions) {
    PruneSpec spec;
    spec.method = method;
    spec.fraction = q;
    spec.seed = derive_seed(seed, "sweep-prune");
    Model cut = prune(model, spec);
    SweepPoint pt;
    pt.fraction = q;
    pt.accuracy = evaluate_accuracy(cut, eval_split.images, eval_split.labels,
                                    derive_seed(seed, "sweep-eval"));
    VerificationReport r =
        verify_after(cut, keys, p, derive_seed(seed, "sweep-verify"));
    pt.tally = r.tally;
    pt.threshold = r.threshold;
    pt.watermarked = r.watermarked;
    points.push_back(pt);
  }
  return points;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::string csv = "fraction,accuracy,tally,threshold,verdict\n";
  char line[128];
  for (const SweepPoint& p : points) {
    std::snprintf(line, sizeof(line), "%g,%.4f,%u,%u,%s\n", p.fraction,
                  p.accuracy, p.tally, p.threshold,
                  p.watermarked ? "Watermarked" : "NotWatermarked");
    csv += line;
  }
  return csv;
}

std::vector<double> fraction_grid(double from, double to, double step) {
  require(step > 0.0 && from >= 0.0 && to <= 1.0 && from <= to,
          ErrorKind::InputDomain, "fraction_grid: bad range");
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    const double q = from + i * step;
    if (q > to + 1e-9) break;
    grid.push_back(std::min(q, 1.0));
  }
  return grid;
}

}  // namespace spikemark
