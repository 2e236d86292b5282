#include "spikemark/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spikemark/errors.hpp"
#include "spikemark/forward.hpp"
#include "spikemark/verification.hpp"

namespace spikemark {

namespace fs = std::filesystem;

LifParams paper_lif() {
  LifParams p;
  p.alpha = 0.7;
  p.eta = 1.0;
  p.num_steps = 25;
  p.surrogate_slope = 40.0;
  return p;
}

Architecture victim_arch(ModelKind kind) {
  return Architecture{kind, {784, 512, 512, 10}, paper_lif()};
}

Architecture innocent_arch(ModelKind kind) {
  return Architecture{kind, {784, 3000, 10}, paper_lif()};
}

TrainConfig baseline_config(ModelKind kind, uint64_t seed, const Dataset* eval) {
  TrainConfig c;
  c.epochs = 10;
  c.batch_size = 128;
  c.learning_rate = 5e-4;
  c.optimizer = Optimizer::Adam;
  c.seed = seed;
  c.eval = eval;
  c.target_accuracy = kind == ModelKind::Ann ? 0.978 : 0.957;
  return c;
}

TrainConfig innocent_config(ModelKind kind, uint64_t seed, const Dataset* eval) {
  TrainConfig c = baseline_config(kind, seed, eval);
  c.target_accuracy = 0.958;
  (void)kind;
  return c;
}

TrainConfig fingerprint_embed_config(ModelKind kind, uint64_t seed) {
  TrainConfig c;
  c.epochs = 100;  // passes over the key set
  c.batch_size = 128;
  c.learning_rate = kind == ModelKind::Ann ? 1e-4 : 5e-4;
  c.optimizer = Optimizer::Adam;
  c.seed = seed;
  return c;
}

TrainConfig backdoor_embed_config(ModelKind kind, uint64_t seed,
                                  const Dataset* eval) {
  TrainConfig c = baseline_config(kind, seed, eval);
  return c;
}

TrainConfig attack_config(ModelKind kind, uint64_t seed) {
  TrainConfig c;
  c.epochs = 20;
  c.batch_size = 128;
  c.learning_rate = 1e-4;
  c.optimizer = Optimizer::Adam;
  c.seed = seed;
  (void)kind;
  return c;
}

MnistFiles mnist_files(const std::string& data_dir) {
  const fs::path d(data_dir);
  return MnistFiles{(d / "train-images-idx3-ubyte").string(),
                    (d / "train-labels-idx1-ubyte").string(),
                    (d / "t10k-images-idx3-ubyte").string(),
                    (d / "t10k-labels-idx1-ubyte").string()};
}

ExperimentData load_experiment_data(const std::string& data_dir,
                                    uint64_t master_seed) {
  const MnistFiles f = mnist_files(data_dir);
  ExperimentData d;
  d.train = load_mnist_idx(f.train_images, f.train_labels);
  d.train.split_tag = "train";
  d.test = load_mnist_idx(f.test_images, f.test_labels);
  d.test.split_tag = "test";
  auto [ft, ev] = split_for_attack(d.test, master_seed);
  d.finetune = std::move(ft);
  d.eval = std::move(ev);
  return d;
}

TrainResult train_victim(ModelKind kind, const Dataset& train,
                         const Dataset& eval, uint64_t seed) {
  const Architecture arch = victim_arch(kind);
  Model fresh = make_model(arch.kind, arch.dims, derive_seed(seed, "init"),
                           arch.lif);
  return spikemark::train(fresh, train, baseline_config(kind, seed, &eval));
}

TrainResult train_innocent(ModelKind kind, const Dataset& train,
                           const Dataset& eval, uint64_t seed) {
  const Architecture arch = innocent_arch(kind);
  Model fresh = make_model(arch.kind, arch.dims, derive_seed(seed, "init"),
                           arch.lif);
  return spikemark::train(fresh, train, innocent_config(kind, seed, &eval));
}

WatermarkKeySet make_fingerprint_keys(const Model& baseline,
                                      const Dataset& pool, uint64_t seed) {
  return generate_fingerprint_keys(baseline, pool, kFingerprintTrue,
                                   kFingerprintFalse, kFingerprintEpsilon,
                                   seed);
}

EmbedResult embed_fingerprint_paper(const Model& baseline,
                                    const WatermarkKeySet& keys,
                                    const Dataset& clean, uint64_t seed) {
  return embed_fingerprint(baseline, keys,
                           fingerprint_embed_config(baseline.kind, seed),
                           &clean, kPaperP);
}

WatermarkKeySet make_trigger_keys(uint64_t seed) {
  TriggerSpec spec;
  spec.count = kTriggerCount;
  spec.generator_seed = derive_seed(seed, "trigger-gen");
  spec.label_seed = derive_seed(seed, "trigger-labels");
  WatermarkKeySet keys = generate_triggers(spec);
  keys.seed = seed;
  return keys;
}

EmbedResult embed_backdoor_paper(ModelKind kind, const Dataset& train,
                                 const WatermarkKeySet& keys,
                                 const Dataset* eval, uint64_t seed) {
  return embed_backdoor(victim_arch(kind), train, keys,
                        backdoor_embed_config(kind, seed, eval), kPaperP);
}

AttackOutcome run_finetune_attack(const Model& model, const ExperimentData& d,
                                  const WatermarkKeySet& keys, uint64_t seed) {
  return finetune_attack(model, d.finetune, d.eval, keys, kPaperP,
                         attack_config(model.kind, seed));
}

AttackOutcome run_adv_finetune_attack(const Model& model,
                                      const ExperimentData& d,
                                      const WatermarkKeySet& keys,
                                      double epsilon, uint64_t seed) {
  return adv_finetune_attack(model, d.finetune, d.eval, keys, kPaperP, epsilon,
                             attack_config(model.kind, seed));
}

namespace {

const char* kind_name(ModelKind k) { return k == ModelKind::Ann ? "ann" : "snn"; }
const char* scheme_name(WatermarkScheme s) {
  return s == WatermarkScheme::Fingerprint ? "fingerprint" : "backdoor";
}

void log_line(std::ostream* log, const std::string& line) {
  if (log) *log << line << std::endl;
}

}  // namespace

SchemeLeg run_scheme_leg(WatermarkScheme scheme, ModelKind kind,
                         const ExperimentData& data, uint64_t master_seed,
                         std::ostream* log) {
  const std::string tag =
      std::string(scheme_name(scheme)) + "-" + kind_name(kind);
  const uint64_t leg_seed = derive_seed(master_seed, tag);
  const uint64_t eval_seed = derive_seed(leg_seed, "table-eval");
  SchemeLeg leg;

  auto acc_on_eval = [&](const Model& m) {
    return evaluate_accuracy(m, data.eval.images, data.eval.labels, eval_seed);
  };

  log_line(log, "[" + tag + "] training baseline");
  TrainResult baseline = train_victim(kind, data.train, data.test,
                                      derive_seed(leg_seed, "baseline"));

  log_line(log, "[" + tag + "] generating keys");
  EmbedResult wm;
  if (scheme == WatermarkScheme::Fingerprint) {
    leg.keys = make_fingerprint_keys(baseline.model, data.train,
                                     derive_seed(leg_seed, "keys"));
    log_line(log, "[" + tag + "] embedding fingerprint");
    wm = embed_fingerprint_paper(baseline.model, leg.keys, data.train,
                                 derive_seed(leg_seed, "embed"));
  } else {
    leg.keys = make_trigger_keys(derive_seed(master_seed, "triggers"));
    log_line(log, "[" + tag + "] training backdoored model from scratch");
    wm = embed_backdoor_paper(kind, data.train, leg.keys, &data.test,
                              derive_seed(leg_seed, "embed"));
  }
  leg.watermarked_model = wm.model;

  log_line(log, "[" + tag + "] training innocent model");
  TrainResult innocent =
      train_innocent(kind, data.train, data.test,
                     derive_seed(master_seed, std::string("innocent-") +
                                                  kind_name(kind)));

  auto report_row = [&](const std::string& name, const Model& m,
                        const char* verify_tag) {
    VerificationReport r =
        verify(m, leg.keys, kPaperP, derive_seed(leg_seed, verify_tag));
    leg.rows.push_back(TableRow{name, acc_on_eval(m), r.tally, r.watermarked});
  };

  report_row("original", baseline.model, "verify-original");
  report_row("watermarked", leg.watermarked_model, "verify-watermarked");
  report_row("innocent", innocent.model, "verify-innocent");

  log_line(log, "[" + tag + "] adversarial fine-tuning eps=0.1");
  AttackOutcome a1 = run_adv_finetune_attack(leg.watermarked_model, data,
                                             leg.keys, 0.1,
                                             derive_seed(leg_seed, "advft-0.1"));
  leg.rows.push_back(TableRow{"adv_finetune_eps0.1", a1.post_accuracy,
                              a1.report.tally, a1.report.watermarked});

  log_line(log, "[" + tag + "] adversarial fine-tuning eps=0.2");
  AttackOutcome a2 = run_adv_finetune_attack(leg.watermarked_model, data,
                                             leg.keys, 0.2,
                                             derive_seed(leg_seed, "advft-0.2"));
  leg.rows.push_back(TableRow{"adv_finetune_eps0.2", a2.post_accuracy,
                              a2.report.tally, a2.report.watermarked});

  log_line(log, "[" + tag + "] non-adversarial fine-tuning");
  AttackOutcome ft = run_finetune_attack(leg.watermarked_model, data, leg.keys,
                                         derive_seed(leg_seed, "ft"));
  leg.rows.push_back(TableRow{"finetune", ft.post_accuracy, ft.report.tally,
                              ft.report.watermarked});
  return leg;
}

void run_legs(std::vector<std::function<void()>> legs, size_t max_parallel) {
  if (max_parallel <= 1) {
    for (auto& leg : legs) leg();
    return;
  }
  size_t next = 0;
  while (next < legs.size()) {
    const size_t n = std::min(max_parallel, legs.size() - next);
    std::vector<std::future<void>> running;
    for (size_t i = 0; i < n; ++i)
      running.push_back(std::async(std::launch::async, legs[next + i]));
    for (auto& f : running) f.get();
    next += n;
  }
}

size_t threads_from_env() {
  const char* env = std::getenv("SPIKEMARK_THREADS");
  if (!env) return 1;
  const long v = std::strtol(env, nullptr, 10);
  return v >= 1 ? static_cast<size_t>(v) : 1;
}

void write_trigger_grid(const std::string& path, const WatermarkKeySet& keys,
                        uint64_t seed) {
  constexpr int kSide = 28, kGap = 2, kCols = 10;
  const int rows = static_cast<int>((keys.size() + kCols - 1) / kCols);
  const int width = kCols * kSide + (kCols - 1) * kGap;
  const int height = rows * kSide + (rows - 1) * kGap;
  std::vector<uint8_t> canvas(size_t(width) * height, 0);
  for (size_t t = 0; t < keys.size(); ++t) {
    const int gr = static_cast<int>(t) / kCols;
    const int gc = static_cast<int>(t) % kCols;
    const int top = gr * (kSide + kGap), left = gc * (kSide + kGap);
    for (int r = 0; r < kSide; ++r)
      for (int c = 0; c < kSide; ++c) {
        const double v = keys.keys[t].image[r * kSide + c];
        canvas[size_t(top + r) * width + left + c] =
            static_cast<uint8_t>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
      }
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  out << "P5\n# seed " << seed << "\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(canvas.data()),
            static_cast<std::streamsize>(canvas.size()));
}

namespace {

std::string table_csv(const SchemeLeg& ann, const SchemeLeg& snn,
                      uint64_t seed) {
  std::ostringstream os;
  os << "model,ann_acc,ann_tally,ann_verdict,snn_acc,snn_tally,snn_verdict,"
        "seed\n";
  char buf[64];
  for (size_t i = 0; i < ann.rows.size(); ++i) {
    const TableRow& a = ann.rows[i];
    const TableRow& s = snn.rows[i];
    os << a.name << ",";
    std::snprintf(buf, sizeof(buf), "%.4f", a.acc);
    os << buf << "," << a.tally << ","
       << (a.watermarked ? "Watermarked" : "NotWatermarked") << ",";
    std::snprintf(buf, sizeof(buf), "%.4f", s.acc);
    os << buf << "," << s.tally << ","
       << (s.watermarked ? "Watermarked" : "NotWatermarked") << "," << seed
       << "\n";
  }
  return os.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot write " + path);
  out << content;
}

struct ManifestBuilder {
  nlohmann::json j;
  std::map<std::string, double> durations;
  std::vector<std::string> files;

  void add_file(const std::string& path) { files.push_back(path); }
  void finish(const RunContext& ctx, const std::string& target) {
    j["target"] = target;
    j["master_seed"] = ctx.master_seed;
    j["p_value"] = ctx.p;
    j["data_dir"] = ctx.data_dir;
    j["files"] = files;
    j["durations_sec"] = durations;
    const std::string path =
        (fs::path(ctx.out_dir) / "run_manifest.json").string();
    write_text(path, j.dump(2) + "\n");
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

}  // namespace

std::vector<std::string> reproduce(const std::string& target, RunContext& ctx) {
  fs::create_directories(ctx.out_dir);
  if (ctx.fractions.empty()) ctx.fractions = fraction_grid(0.05, 0.95, 0.05);
  ManifestBuilder manifest;
  Stopwatch total;

  const bool is_table = target == "table1" || target == "table2";
  const bool is_sweep = target == "fig3" || target == "fig4" || target == "fig6";

  auto out_path = [&](const std::string& name) {
    std::string p = (fs::path(ctx.out_dir) / name).string();
    manifest.add_file(p);
    return p;
  };

  if (target == "fig5") {
    WatermarkKeySet keys =
        make_trigger_keys(derive_seed(ctx.master_seed, "triggers"));
    const std::string path =
        out_path("fig5_triggers_seed" + std::to_string(ctx.master_seed) + ".pgm");
    write_trigger_grid(path, keys, ctx.master_seed);
    save_keyset(out_path("backdoor_keys.smwk"), keys);
    manifest.durations["fig5"] = total.seconds();
    manifest.finish(ctx, target);
    return manifest.files;
  }

  log_line(ctx.log, "loading MNIST from " + ctx.data_dir);
  const ExperimentData data = load_experiment_data(ctx.data_dir, ctx.master_seed);

  if (is_table) {
    const WatermarkScheme scheme = target == "table1"
                                       ? WatermarkScheme::Fingerprint
                                       : WatermarkScheme::Backdoor;
    SchemeLeg legs[2];
    std::ostringstream leg_logs[2];
    std::vector<std::function<void()>> jobs;
    const ModelKind kinds[2] = {ModelKind::Ann, ModelKind::Snn};
    for (int i = 0; i < 2; ++i)
      jobs.push_back([&, i] {
        Stopwatch leg_time;
        legs[i] = run_scheme_leg(scheme, kinds[i], data, ctx.master_seed,
                                 &leg_logs[i]);
        leg_logs[i] << "[leg] done in " << leg_time.seconds() << " s\n";
      });
    run_legs(std::move(jobs), ctx.max_parallel_legs);
    for (auto& l : leg_logs) log_line(ctx.log, l.str());

    write_text(out_path(target + ".csv"),
               table_csv(legs[0], legs[1], ctx.master_seed));
    for (int i = 0; i < 2; ++i) {
      const std::string kn = kind_name(kinds[i]);
      save_model(out_path("watermarked_" + kn + ".smwm"),
                 legs[i].watermarked_model);
      save_keyset(out_path(std::string(scheme_name(scheme)) + "_keys_" + kn +
                           ".smwk"),
                  legs[i].keys);
    }
    manifest.durations[target] = total.seconds();
    manifest.finish(ctx, target);
    return manifest.files;
  }

  if (is_sweep) {
    const WatermarkScheme scheme = target == "fig6"
                                       ? WatermarkScheme::Backdoor
                                       : WatermarkScheme::Fingerprint;
    const PruneMethod method =
        target == "fig4" ? PruneMethod::Random : PruneMethod::L1;
    const char* method_name = method == PruneMethod::L1 ? "l1" : "random";

    std::vector<std::string> written;
    std::vector<std::function<void()>> jobs;
    std::ostringstream leg_logs[2];
    std::string paths[2];
    const ModelKind kinds[2] = {ModelKind::Ann, ModelKind::Snn};
    std::vector<SweepPoint> points[2];
    for (int i = 0; i < 2; ++i) {
      paths[i] = out_path(target + "_" + method_name + "_" +
                          scheme_name(scheme) + "_" + kind_name(kinds[i]) +
                          "_seed" + std::to_string(ctx.master_seed) + ".csv");
      jobs.push_back([&, i] {
        const ModelKind kind = kinds[i];
        const std::string tag = std::string(scheme_name(scheme)) + "-" +
                                kind_name(kind);
        const uint64_t leg_seed = derive_seed(ctx.master_seed, tag);
        std::ostream* log = &leg_logs[i];
        log_line(log, "[" + tag + "] training baseline for sweep");
        TrainResult baseline = train_victim(kind, data.train, data.test,
                                            derive_seed(leg_seed, "baseline"));
        WatermarkKeySet keys;
        Model marked;
        if (scheme == WatermarkScheme::Fingerprint) {
          keys = make_fingerprint_keys(baseline.model, data.train,
                                       derive_seed(leg_seed, "keys"));
          marked = embed_fingerprint_paper(baseline.model, keys, data.train,
                                           derive_seed(leg_seed, "embed"))
                       .model;
        } else {
          keys = make_trigger_keys(derive_seed(ctx.master_seed, "triggers"));
          marked = embed_backdoor_paper(kind, data.train, keys, &data.test,
                                        derive_seed(leg_seed, "embed"))
                       .model;
        }
        log_line(log, "[" + tag + "] sweeping " + method_name + " pruning");
        points[i] = prune_sweep(marked, keys, method, ctx.fractions, ctx.p,
                                data.eval, derive_seed(leg_seed, "sweep"));
      });
    }
    run_legs(std::move(jobs), ctx.max_parallel_legs);
    for (auto& l : leg_logs) log_line(ctx.log, l.str());
    for (int i = 0; i < 2; ++i) write_text(paths[i], sweep_to_csv(points[i]));
    manifest.durations[target] = total.seconds();
    manifest.finish(ctx, target);
    return manifest.files;
  }

  fail(ErrorKind::InputDomain, "reproduce: unknown target '" + target + "'");
}

}  // namespace spikemark
