#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>

#include "spikemark/attacks.hpp"
#include "spikemark/backdoor.hpp"
#include "spikemark/data_io.hpp"
#include "spikemark/fingerprint.hpp"
#include "spikemark/training.hpp"

namespace spikemark {

// Experiment constants: MNIST digits, 784-512-512-10 victims, a 784-3000-10
// innocent, LIF with leakage 0.7 / threshold 1.0 / 25 steps / slope-40
// surrogate, 10+10 fingerprint adversaries at eps 0.1, 50 backdoor triggers,
// significance level 0.05, attack split 1000/9000.
inline constexpr double kPaperP = 0.05;
inline constexpr double kFingerprintEpsilon = 0.1;
inline constexpr size_t kFingerprintTrue = 10;
inline constexpr size_t kFingerprintFalse = 10;
inline constexpr size_t kTriggerCount = 50;

LifParams paper_lif();
Architecture victim_arch(ModelKind kind);
Architecture innocent_arch(ModelKind kind);

TrainConfig baseline_config(ModelKind kind, uint64_t seed, const Dataset* eval);
TrainConfig innocent_config(ModelKind kind, uint64_t seed, const Dataset* eval);
TrainConfig fingerprint_embed_config(ModelKind kind, uint64_t seed);
TrainConfig backdoor_embed_config(ModelKind kind, uint64_t seed,
                                  const Dataset* eval);
TrainConfig attack_config(ModelKind kind, uint64_t seed);

// Standard MNIST idx file names under one directory.
struct MnistFiles {
  std::string train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::string& data_dir);

struct ExperimentData {
  Dataset train;     // 60k
  Dataset test;      // 10k
  Dataset finetune;  // 1000, attack split
  Dataset eval;      // 9000, attack split
};
ExperimentData load_experiment_data(const std::string& data_dir,
                                    uint64_t master_seed);

TrainResult train_victim(ModelKind kind, const Dataset& train,
                         const Dataset& eval, uint64_t seed);
TrainResult train_innocent(ModelKind kind, const Dataset& train,
                           const Dataset& eval, uint64_t seed);

WatermarkKeySet make_fingerprint_keys(const Model& baseline,
                                      const Dataset& pool, uint64_t seed);
EmbedResult embed_fingerprint_paper(const Model& baseline,
                                    const WatermarkKeySet& keys,
                                    const Dataset& clean, uint64_t seed);
WatermarkKeySet make_trigger_keys(uint64_t seed);
EmbedResult embed_backdoor_paper(ModelKind kind, const Dataset& train,
                                 const WatermarkKeySet& keys,
                                 const Dataset* eval, uint64_t seed);

AttackOutcome run_finetune_attack(const Model& model, const ExperimentData& d,
                                  const WatermarkKeySet& keys, uint64_t seed);
AttackOutcome run_adv_finetune_attack(const Model& model,
                                      const ExperimentData& d,
                                      const WatermarkKeySet& keys,
                                      double epsilon, uint64_t seed);

// ---- reproduction drivers -------------------------------------------------

struct RunContext {
  std::string data_dir;
  std::string out_dir;
  uint64_t master_seed = 42;
  double p = kPaperP;
  std::vector<double> fractions;  // defaults to 0.05..0.95 step 0.05
  size_t max_parallel_legs = 1;   // SPIKEMARK_THREADS
  std::ostream* log = nullptr;
};

struct TableRow {
  std::string name;
  double acc = 0.0;
  uint32_t tally = 0;
  bool watermarked = false;
};

struct SchemeLeg {
  std::vector<TableRow> rows;  // original, watermarked, innocent, advft .1/.2, ft
  Model watermarked_model;
  WatermarkKeySet keys;
};

// Full six-row pipeline for one (scheme, model-kind) column.
SchemeLeg run_scheme_leg(WatermarkScheme scheme, ModelKind kind,
                         const ExperimentData& data, uint64_t master_seed,
                         std::ostream* log);

// One-command reproductions; every artifact is written under ctx.out_dir and
// listed in run_manifest.json together with the master seed and durations.
// Returns paths of the files written.
std::vector<std::string> reproduce(const std::string& target, RunContext& ctx);

// 5x10 tile grid of trigger patterns as a binary PGM.
void write_trigger_grid(const std::string& path, const WatermarkKeySet& keys,
                        uint64_t seed);

// Runs legs with at most max_parallel concurrent threads (deterministic
// outputs regardless of scheduling; each leg owns its seed stream).
void run_legs(std::vector<std::function<void()>> legs, size_t max_parallel);

size_t threads_from_env();  // SPIKEMARK_THREADS, default 1

}  // namespace spikemark
