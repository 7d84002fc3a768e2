#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rcore/presets.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::uint64_t resolve_seed(std::int64_t cli_seed, bool seed_given) {
  if (seed_given) return static_cast<std::uint64_t>(cli_seed);
  if (const char* env = std::getenv("CZSL_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

// Extras of the form --section.key=value become config overrides.
std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& raw : extras) {
    if (raw.rfind("--", 0) != 0)
      throw CLI::ValidationError("unexpected argument '" + raw + "'");
    std::string body = raw.substr(2);
    std::size_t eq = body.find('=');
    if (eq == std::string::npos || body.find('.') == std::string::npos ||
        body.find('.') > eq)
      throw CLI::ValidationError("unknown option '" + raw +
                                 "' (overrides look like --section.key=value)");
    out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw rcore::DataError("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

int cmd_run(const std::string& target, const std::string& outdir_opt, std::int64_t seed,
            bool seed_given, const std::vector<std::string>& extras) {
  rcore::ConfigDoc doc;
  if (rcore::is_known_preset(target)) {
    doc = rcore::resolve_preset_config(target, resolve_seed(seed, seed_given));
  } else if (fs::exists(target)) {
    doc = rcore::ConfigDoc::load(target);
    if (seed_given) doc.set_long("seed", seed);
  } else {
    std::cerr << "unknown preset or config file '" << target << "'\navailable presets:";
    for (const auto& name : rcore::preset_names()) std::cerr << ' ' << name;
    std::cerr << '\n';
    return kExitUsage;
  }
  auto overrides = parse_overrides(extras);
  bool toggles_touched = false;
  for (const auto& [key, value] : overrides) {
    doc.set(key, value);
    if (key.rfind("loss.enable", 0) == 0 || key == "voca.p_aug" || key == "loss.gamma" ||
        key == "loss.delta")
      toggles_touched = true;
  }
  if (doc.get_string("preset", "") == "ablate" && toggles_touched && !doc.has("ablate.variants"))
    doc.set("ablate.variants", "custom");

  std::string outdir = outdir_opt.empty()
                           ? (fs::path("runs") / doc.get_string("preset", "run")).string()
                           : outdir_opt;
  rcore::run_experiment(doc, outdir);
  std::cout << "artifacts written to " << outdir << '\n';
  return kExitOk;
}

int cmd_splits(const std::string& annotations, int min_count, double swap, double val_fraction,
               const std::string& outdir, std::int64_t seed, bool seed_given) {
  rcore::IngestResult ingested = rcore::ingest_annotations(annotations, {});
  for (const auto& r : ingested.rejected) std::cerr << "rejected " << r << '\n';
  rcore::SplitSpec spec = rcore::construct_compositional_splits(
      ingested.records, min_count, swap, val_fraction, resolve_seed(seed, seed_given));
  fs::create_directories(outdir);
  std::ofstream f(fs::path(outdir) / "splits.json");
  f << spec.to_json();
  std::cout << "train " << spec.train_ids.size() << " / val " << spec.val_ids.size() << " / test "
            << spec.test_ids.size() << " samples; unseen test compositions "
            << spec.unseen_test.size() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, const std::string& space_path,
             const std::string& mode, double bias, bool calibrate, const std::string& val_dataset,
             bool unsound_test_tuned, const std::string& outdir, std::int64_t seed,
             bool seed_given) {
  rcore::ModelParams params = rcore::load_checkpoint(checkpoint);
  rcore::ClipDataset ds = rcore::read_clip_dataset(dataset);
  rcore::CompositionSpace space = rcore::CompositionSpace::from_json(read_file(space_path));
  rcore::CoOccurrenceStats stats = rcore::build_cooccurrence(space);

  rcore::Rng rng = rcore::Rng(resolve_seed(seed, seed_given)).substream("cli.eval");
  std::vector<rcore::EvalSample> samples =
      rcore::evaluate_clips(params, ds.clips, space, rng);

  rcore::InferenceConfig cfg;
  cfg.bias = bias;
  if (mode == "closed") {
    cfg.mode = rcore::InferenceConfig::Mode::closed_world;
    std::set<std::size_t> cand;
    for (const auto& clip : ds.clips) cand.insert(space.comp_index(clip.verb, clip.object));
    cfg.candidate_set.assign(cand.begin(), cand.end());
  }

  fs::create_directories(outdir);
  if (calibrate) {
    std::vector<rcore::EvalSample> cal_samples;
    if (unsound_test_tuned) {
      std::cerr << "warning: tuning the bias on the evaluation split itself\n";
      cal_samples = samples;
    } else {
      if (val_dataset.empty())
        throw rcore::DataError(
            "eval --calibrate needs --val-dataset (or the explicit --unsound-test-tuned flag)");
      rcore::ClipDataset val_ds = rcore::read_clip_dataset(val_dataset);
      rcore::Rng val_rng = rcore::Rng(resolve_seed(seed, seed_given)).substream("cli.eval.val");
      cal_samples = rcore::evaluate_clips(params, val_ds.clips, space, val_rng);
    }
    rcore::CalibrationResult cal =
        rcore::calibrate_bias(cal_samples, space, rcore::default_bias_sweep());
    cfg.bias = cal.chosen_bias;
    std::ofstream curve(fs::path(outdir) / "calibration_curve.csv");
    curve << cal.to_csv();
  }

  rcore::EvalReport report = rcore::build_report(samples, cfg, space, stats);
  std::ofstream f(fs::path(outdir) / "eval.json");
  f << report.to_json();
  std::cout << "comp seen " << report.acc_comp_seen << "% / unseen " << report.acc_comp_unseen
            << "% (H.M. " << report.hm_comp << "%)\n";
  return kExitOk;
}

int cmd_probe(const std::string& checkpoint, const std::string& dataset,
              const std::string& space_path, const std::string& outdir, std::int64_t seed,
              bool seed_given) {
  rcore::ModelParams params = rcore::load_checkpoint(checkpoint);
  rcore::ClipDataset ds = rcore::read_clip_dataset(dataset);
  rcore::CompositionSpace space = rcore::CompositionSpace::from_json(read_file(space_path));

  rcore::Rng rng = rcore::Rng(resolve_seed(seed, seed_given)).substream("cli.probe");
  std::vector<rcore::EvalSample> samples = rcore::evaluate_clips(params, ds.clips, space, rng);
  rcore::ShuffledProbeResult probe = rcore::shuffled_probe(samples);
  double mean_cos = rcore::reversed_cosine_probe(samples);

  fs::create_directories(outdir);
  std::ofstream f(fs::path(outdir) / "probes.json");
  f << rcore::probes_to_json(probe, mean_cos);
  std::cout << "orig verb acc " << probe.orig_verb_acc << "% / shuffled " << probe.shuffled_verb_acc
            << "% (gap " << probe.gap << "), mean cos(f,f_rev) " << mean_cos << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compositional action recognition lab"};
  app.require_subcommand(1);

  std::int64_t seed = 0;

  auto* run = app.add_subcommand("run", "run an experiment preset or config file");
  std::string run_target, run_out;
  run->add_option("target", run_target, "preset name or config file")->required();
  run->add_option("--out", run_out, "output directory (default runs/<preset>)");
  auto* run_seed_opt = run->add_option("--seed", seed, "run seed (fallback: CZSL_SEED env)");
  run->allow_extras();

  auto* splits = app.add_subcommand("splits", "construct compositional train/val/test splits");
  std::string splits_annotations, splits_out = "runs/splits";
  int splits_min_count = 5;
  double splits_swap = 0.5, splits_val_fraction = 0.125;
  splits->add_option("annotations", splits_annotations, "delimited annotation file")->required();
  splits->add_option("--min-count", splits_min_count, "drop compositions with <= this many samples");
  splits->add_option("--swap", splits_swap, "fraction of compositions to swap between pools");
  splits->add_option("--val-fraction", splits_val_fraction, "initial per-sample val pool fraction");
  splits->add_option("--out", splits_out, "output directory");
  auto* splits_seed_opt = splits->add_option("--seed", seed, "run seed");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a clip dataset");
  std::string eval_ckpt, eval_ds, eval_space, eval_mode = "open", eval_val_ds,
              eval_out = "runs/eval";
  double eval_bias = 0.0;
  bool eval_calibrate = false, eval_unsound = false;
  eval->add_option("checkpoint", eval_ckpt)->required();
  eval->add_option("dataset", eval_ds)->required();
  eval->add_option("--space", eval_space, "composition space json")->required();
  eval->add_option("--mode", eval_mode, "open or closed")
      ->check(CLI::IsMember({"open", "closed"}));
  eval->add_option("--bias", eval_bias, "score bias added to unseen compositions");
  eval->add_flag("--calibrate", eval_calibrate, "tune the bias on a validation dataset");
  eval->add_option("--val-dataset", eval_val_ds, "validation clip dataset for calibration");
  eval->add_flag("--unsound-test-tuned", eval_unsound,
                 "tune the bias on the evaluation split itself (methodologically unsound)");
  eval->add_option("--out", eval_out, "output directory");
  auto* eval_seed_opt = eval->add_option("--seed", seed, "run seed");

  auto* probe = app.add_subcommand("probe", "temporal-order probes for a checkpoint");
  std::string probe_ckpt, probe_ds, probe_space, probe_out = "runs/probe";
  probe->add_option("checkpoint", probe_ckpt)->required();
  probe->add_option("dataset", probe_ds)->required();
  probe->add_option("--space", probe_space, "composition space json")->required();
  probe->add_option("--out", probe_out, "output directory");
  auto* probe_seed_opt = probe->add_option("--seed", seed, "run seed");

  try {
    app.parse(argc, argv);
    if (run->parsed())
      return cmd_run(run_target, run_out, seed, run_seed_opt->count() > 0, run->remaining());
    if (splits->parsed())
      return cmd_splits(splits_annotations, splits_min_count, splits_swap, splits_val_fraction,
                        splits_out, seed, splits_seed_opt->count() > 0);
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_ds, eval_space, eval_mode, eval_bias, eval_calibrate,
                      eval_val_ds, eval_unsound, eval_out, seed, eval_seed_opt->count() > 0);
    if (probe->parsed())
      return cmd_probe(probe_ckpt, probe_ds, probe_space, probe_out, seed,
                       probe_seed_opt->count() > 0);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const rcore::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const rcore::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
