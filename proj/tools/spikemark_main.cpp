// spikemark: watermark embedding, attack and verification pipelines for
// spiking and conventional fully-connected MNIST classifiers.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>

#include "spikemark/attacks.hpp"
#include "spikemark/backdoor.hpp"
#include "spikemark/data_io.hpp"
#include "spikemark/errors.hpp"
#include "spikemark/fingerprint.hpp"
#include "spikemark/forward.hpp"
#include "spikemark/pipeline.hpp"
#include "spikemark/verification.hpp"

namespace fs = std::filesystem;
using namespace spikemark;

namespace {

const char* kind_str(ErrorKind k) {
  switch (k) {
    case ErrorKind::InputDomain: return "input-domain";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::TrainingDivergence: return "training-divergence";
    case ErrorKind::InsufficientCandidates: return "insufficient-candidates";
    case ErrorKind::EmbeddingFailure: return "embedding-failure";
    case ErrorKind::UnsupportedArchitecture: return "unsupported-architecture";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::Format: return "format";
    case ErrorKind::Length: return "length";
    case ErrorKind::Consistency: return "consistency";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::InvariantViolation: return "invariant-violation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

struct CommonOpts {
  uint64_t seed = 42;
  std::string data_dir = "data/mnist";
  std::string out_dir = "out";
  double p = kPaperP;
  std::string fractions = "0.05:0.95:0.05";
  uint32_t epochs = 0;  // 0 = recipe default
  double eps = 0.1;
};

std::vector<double> parse_fractions(const std::string& spec) {
  double from = 0, to = 0, step = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &from, &to, &step) != 3)
    fail(ErrorKind::InputDomain,
         "--fractions expects a:b:step, got '" + spec + "'");
  return fraction_grid(from, to, step);
}

Architecture arch_by_name(const std::string& name) {
  if (name == "ann") return victim_arch(ModelKind::Ann);
  if (name == "snn") return victim_arch(ModelKind::Snn);
  if (name == "innocent-ann") return innocent_arch(ModelKind::Ann);
  if (name == "innocent-snn") return innocent_arch(ModelKind::Snn);
  fail(ErrorKind::InputDomain, "unknown architecture '" + name + "'");
}

int cmd_train(const CommonOpts& o, const std::string& arch_name) {
  const Architecture arch = arch_by_name(arch_name);
  const bool innocent = arch_name.rfind("innocent", 0) == 0;
  ExperimentData data = load_experiment_data(o.data_dir, o.seed);

  const uint64_t seed = derive_seed(o.seed, "cli-train-" + arch_name);
  Model fresh = make_model(arch.kind, arch.dims, derive_seed(seed, "init"),
                           arch.lif);
  TrainConfig cfg = innocent ? innocent_config(arch.kind, seed, &data.test)
                             : baseline_config(arch.kind, seed, &data.test);
  if (o.epochs > 0) cfg.epochs = o.epochs;

  std::cerr << "training " << arch_name << " (seed " << o.seed << ")\n";
  TrainResult r = train(fresh, data.train, cfg);

  fs::create_directories(o.out_dir);
  const std::string path =
      (fs::path(o.out_dir) / ("model_" + arch_name + ".smwm")).string();
  save_model(path, r.model);
  const double acc = r.log.epoch_accuracy.empty()
                         ? evaluate_accuracy(r.model, data.test.images,
                                             data.test.labels,
                                             derive_seed(seed, "final-eval"))
                         : r.log.epoch_accuracy.back();
  std::cout << "model=" << path << " epochs=" << r.log.epochs_run
            << " test_accuracy=" << acc << " seed=" << o.seed << "\n";
  return 0;
}

int cmd_watermark(const CommonOpts& o, const std::string& scheme,
                  const std::string& model_path, const std::string& arch_name) {
  ExperimentData data = load_experiment_data(o.data_dir, o.seed);
  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);

  if (scheme == "fingerprint") {
    require(!model_path.empty(), ErrorKind::Precondition,
            "watermark fingerprint needs --model (a trained victim)");
    Model victim = load_model(model_path);
    WatermarkKeySet keys = generate_fingerprint_keys(
        victim, data.train, kFingerprintTrue, kFingerprintFalse, o.eps,
        derive_seed(o.seed, "cli-fp-keys"));
    std::cerr << "embedding fingerprint (eps " << o.eps << ")\n";
    EmbedResult r = embed_fingerprint_paper(victim, keys, data.train,
                                            derive_seed(o.seed, "cli-fp-embed"));
    const std::string kp = (out / "fingerprint_keys.smwk").string();
    const std::string mp = (out / "watermarked_fingerprint.smwm").string();
    save_keyset(kp, keys);
    save_model(mp, r.model);
    VerificationReport rep =
        verify(r.model, keys, o.p, derive_seed(o.seed, "cli-fp-verify"));
    save_report((out / "fingerprint_embed_report.json").string(), rep);
    std::cout << "keys=" << kp << " model=" << mp << " tally=" << rep.tally
              << " passes=" << r.passes << " seed=" << o.seed << "\n";
    return 0;
  }
  if (scheme == "backdoor") {
    const Architecture arch = arch_by_name(arch_name.empty() ? "ann" : arch_name);
    WatermarkKeySet keys = make_trigger_keys(derive_seed(o.seed, "triggers"));
    std::cerr << "training backdoored " << (arch.kind == ModelKind::Ann ? "ann" : "snn")
              << " from scratch\n";
    EmbedResult r = embed_backdoor(arch, data.train, keys,
                                   backdoor_embed_config(arch.kind,
                                                         derive_seed(o.seed, "cli-bd"),
                                                         &data.test),
                                   o.p);
    const std::string kp = (out / "backdoor_keys.smwk").string();
    const std::string mp = (out / "watermarked_backdoor.smwm").string();
    save_keyset(kp, keys);
    save_model(mp, r.model);
    VerificationReport rep =
        verify(r.model, keys, o.p, derive_seed(o.seed, "cli-bd-verify"));
    save_report((out / "backdoor_embed_report.json").string(), rep);
    std::cout << "keys=" << kp << " model=" << mp << " tally=" << rep.tally
              << " epochs=" << r.passes << " seed=" << o.seed << "\n";
    return 0;
  }
  fail(ErrorKind::InputDomain, "unknown watermark scheme '" + scheme + "'");
}

int cmd_attack(const CommonOpts& o, const std::string& kind,
               const std::string& model_path, const std::string& keys_path) {
  Model victim = load_model(model_path);
  WatermarkKeySet keys = load_keyset(keys_path);
  ExperimentData data = load_experiment_data(o.data_dir, o.seed);
  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);

  if (kind == "prune-l1" || kind == "prune-random") {
    const PruneMethod method =
        kind == "prune-l1" ? PruneMethod::L1 : PruneMethod::Random;
    std::vector<double> grid = parse_fractions(o.fractions);
    std::cerr << "sweeping " << kind << " over " << grid.size() << " fractions\n";
    std::vector<SweepPoint> points =
        prune_sweep(victim, keys, method, grid, o.p, data.eval,
                    derive_seed(o.seed, "cli-sweep"));
    const std::string path =
        (out / (kind + "_sweep_seed" + std::to_string(o.seed) + ".csv")).string();
    std::ofstream f(path);
    f << sweep_to_csv(points);
    std::cout << "sweep=" << path << " points=" << points.size() << " seed="
              << o.seed << "\n";
    return 0;
  }

  AttackOutcome outcome;
  if (kind == "finetune") {
    std::cerr << "fine-tuning on the 1000-image split\n";
    outcome = run_finetune_attack(victim, data, keys,
                                  derive_seed(o.seed, "cli-ft"));
  } else if (kind == "adv-finetune") {
    std::cerr << "adversarial fine-tuning at eps " << o.eps << "\n";
    outcome = run_adv_finetune_attack(victim, data, keys, o.eps,
                                      derive_seed(o.seed, "cli-advft"));
  } else {
    fail(ErrorKind::InputDomain, "unknown attack '" + kind + "'");
  }
  const std::string mp = (out / ("attacked_" + kind + ".smwm")).string();
  save_model(mp, outcome.attacked_model);
  save_report((out / ("attack_" + kind + "_report.json")).string(),
              outcome.report);
  std::cout << "model=" << mp << " accuracy=" << outcome.post_accuracy
            << " tally=" << outcome.report.tally << " verdict="
            << (outcome.report.watermarked ? "Watermarked" : "NotWatermarked")
            << " seed=" << o.seed << "\n";
  return 0;
}

int cmd_verify(const CommonOpts& o, const std::string& model_path,
               const std::string& keys_path, const std::string& report_path) {
  Model model = load_model(model_path);
  WatermarkKeySet keys = load_keyset(keys_path);
  VerificationReport r =
      verify(model, keys, o.p, derive_seed(o.seed, "cli-verify"));
  std::cout << report_to_text(r);
  if (!report_path.empty()) save_report(report_path, r);
  return 0;
}

int cmd_reproduce(const CommonOpts& o, const std::string& target) {
  RunContext ctx;
  ctx.data_dir = o.data_dir;
  ctx.out_dir = o.out_dir;
  ctx.master_seed = o.seed;
  ctx.p = o.p;
  ctx.fractions = parse_fractions(o.fractions);
  ctx.max_parallel_legs = threads_from_env();
  ctx.log = &std::cerr;
  std::vector<std::string> files = reproduce(target, ctx);
  for (const std::string& f : files) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"watermarking pipelines for spiking and sigmoid MNIST classifiers"};
  app.require_subcommand(1);
  CommonOpts o;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "master experiment seed");
    cmd->add_option("--data-dir", o.data_dir, "directory with the MNIST idx files");
    cmd->add_option("--out-dir", o.out_dir, "directory for artifacts");
    cmd->add_option("--p,--p-value", o.p, "verification significance level");
    cmd->add_option("--eps", o.eps, "FGSM perturbation strength");
    cmd->add_option("--epochs", o.epochs, "override the epoch budget");
    cmd->add_option("--fractions", o.fractions, "pruning grid as a:b:step");
  };

  // train
  std::string arch_name = "ann";
  CLI::App* train_cmd = app.add_subcommand("train", "train a baseline model");
  add_common(train_cmd);
  train_cmd->add_option("--arch", arch_name,
                        "ann | snn | innocent-ann | innocent-snn");

  // watermark
  CLI::App* wm_cmd = app.add_subcommand("watermark", "embed a watermark");
  wm_cmd->require_subcommand(1);
  std::string wm_model, wm_arch = "ann";
  CLI::App* wm_fp = wm_cmd->add_subcommand("fingerprint",
                                           "frontier-stitching fingerprint");
  add_common(wm_fp);
  wm_fp->add_option("--model", wm_model, "trained victim model file");
  CLI::App* wm_bd = wm_cmd->add_subcommand("backdoor",
                                           "trigger-set backdoor (from scratch)");
  add_common(wm_bd);
  wm_bd->add_option("--arch", wm_arch, "ann | snn");

  // attack
  CLI::App* attack_cmd = app.add_subcommand("attack", "run a removal threat");
  attack_cmd->require_subcommand(1);
  std::string at_model, at_keys;
  std::vector<CLI::App*> attack_subs;
  for (const char* name : {"finetune", "adv-finetune", "prune-l1", "prune-random"}) {
    CLI::App* sub = attack_cmd->add_subcommand(name);
    add_common(sub);
    sub->add_option("--model", at_model)->required();
    sub->add_option("--keys", at_keys)->required();
    attack_subs.push_back(sub);
  }

  // verify
  CLI::App* verify_cmd = app.add_subcommand("verify", "query a suspect model");
  add_common(verify_cmd);
  std::string v_model, v_keys, v_report;
  verify_cmd->add_option("--model", v_model)->required();
  verify_cmd->add_option("--keys", v_keys)->required();
  verify_cmd->add_option("--report", v_report, "also write a JSON report");

  // reproduce
  CLI::App* rep_cmd = app.add_subcommand("reproduce",
                                         "rebuild a table or figure as CSV");
  add_common(rep_cmd);
  std::string target;
  rep_cmd->add_option("target", target, "table1|table2|fig3|fig4|fig5|fig6")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(o, arch_name);
    if (*wm_fp) return cmd_watermark(o, "fingerprint", wm_model, "");
    if (*wm_bd) return cmd_watermark(o, "backdoor", "", wm_arch);
    for (size_t i = 0; i < attack_subs.size(); ++i)
      if (*attack_subs[i]) {
        const char* names[] = {"finetune", "adv-finetune", "prune-l1",
                               "prune-random"};
        return cmd_attack(o, names[i], at_model, at_keys);
      }
    if (*verify_cmd) return cmd_verify(o, v_model, v_keys, v_report);
    if (*rep_cmd) return cmd_reproduce(o, target);
  } catch (const Error& e) {
    std::cerr << "error: kind=" << kind_str(e.kind()) << " message=\""
              << e.what() << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 2;
}
