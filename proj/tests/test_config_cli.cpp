#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rcore/config.hpp"
#include "rcore/presets.hpp"

using namespace rcore;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct CliResult {
  int code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  fs::path out = fs::temp_directory_path() / "rcore_cli_out.txt";
  std::string cmd = std::string(RCORE_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  int code = status == -1 ? -1 : WEXITSTATUS(status);
  std::string text;
  if (fs::exists(out)) {
    text = slurp(out);
    fs::remove(out);
  }
  return {code, text};
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kTinyOverrides =
    " --train.epochs=2 --train.warmup_epochs=1 --synth.height=16 --synth.width=16"
    " --model.feature_dim=16";

}  // namespace

TEST_CASE("config documents round-trip through their text form") {
  ConfigDoc doc;
  doc.set("loss.alpha", "0.2");
  doc.set("voca.beta", "[2.0, 2.0]");
  doc.set("preset", "fig2b");
  doc.set_bool("loss.enable_ent", false);
  doc.set_long("seed", 7);
  ConfigDoc round = ConfigDoc::parse(doc.dump());
  CHECK(round.dump() == doc.dump());
  CHECK(round.get_double("loss.alpha", 0) == doctest::Approx(0.2));
  CHECK(round.get_bool("loss.enable_ent", true) == false);
  CHECK(round.get_double_list("voca.beta", {})[1] == doctest::Approx(2.0));
  CHECK(round.get_long("seed", 0) == 7);
  CHECK_THROWS_AS(ConfigDoc::parse("no equals sign here"), DataError);
}

TEST_CASE("every preset resolves to a parseable config") {
  for (const auto& name : preset_names()) {
    ConfigDoc doc = resolve_preset_config(name, 3);
    ConfigDoc round = ConfigDoc::parse(doc.dump());
    CHECK(round.dump() == doc.dump());
    CHECK(round.get_string("preset") == name);
  }
  CHECK_THROWS_AS(resolve_preset_config("nope", 0), DataError);
}

TEST_CASE("unknown presets exit with usage status and list the presets") {
  CliResult res = run_cli("run not-a-preset");
  CHECK(res.code == 1);
  CHECK(res.output.find("fig2b") != std::string::npos);
  CHECK(res.output.find("table1") != std::string::npos);
}

TEST_CASE("help text is available") {
  CliResult res = run_cli("--help");
  CHECK(res.code == 0);
  CHECK(res.output.find("run") != std::string::npos);
  CHECK(res.output.find("splits") != std::string::npos);
}

TEST_CASE("rerunning a preset with one seed produces byte-identical csv artifacts") {
  fs::path dir1 = fresh_dir("rcore_det_1");
  fs::path dir2 = fresh_dir("rcore_det_2");
  CliResult r1 = run_cli("run fig2b --seed 7 --out " + dir1.string() + kTinyOverrides);
  REQUIRE_MESSAGE(r1.code == 0, r1.output);
  CliResult r2 = run_cli("run fig2b --seed 7 --out " + dir2.string() + kTinyOverrides);
  REQUIRE(r2.code == 0);
  for (const char* name : {"runlog.csv", "confusion.csv", "config.toml", "eval.json"})
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));

  // A different seed changes the run.
  fs::path dir3 = fresh_dir("rcore_det_3");
  CliResult r3 = run_cli("run fig2b --seed 8 --out " + dir3.string() + kTinyOverrides);
  REQUIRE(r3.code == 0);
  CHECK(slurp(dir1 / "runlog.csv") != slurp(dir3 / "runlog.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  fs::remove_all(dir3);
}

TEST_CASE("the table1 preset reports the reference compositional gaps") {
  fs::path dir = fresh_dir("rcore_table1");
  CliResult res = run_cli("run table1 --out " + dir.string());
  REQUIRE_MESSAGE(res.code == 0, res.output);
  std::string eval = slurp(dir / "eval.json");
  CHECK(eval.find("3.24") != std::string::npos);
  CHECK(eval.find("-0.42") != std::string::npos);
  CHECK(eval.find("43.07") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("a resolved config file can be rerun as the run target") {
  fs::path dir = fresh_dir("rcore_cfg_roundtrip");
  CliResult first = run_cli("run table1 --seed 3 --out " + dir.string());
  REQUIRE(first.code == 0);
  fs::path cfg = dir / "config.toml";
  fs::path dir2 = fresh_dir("rcore_cfg_roundtrip2");
  CliResult second = run_cli("run " + cfg.string() + " --out " + dir2.string());
  REQUIRE_MESSAGE(second.code == 0, second.output);
  CHECK(slurp(dir / "eval.json") == slurp(dir2 / "eval.json"));
  CHECK(slurp(dir / "config.toml") == slurp(dir2 / "config.toml"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("dotted overrides land in the resolved config") {
  fs::path dir = fresh_dir("rcore_override");
  CliResult res = run_cli("run table1 --out " + dir.string() + " --loss.enable_ent=false");
  REQUIRE_MESSAGE(res.code == 0, res.output);
  ConfigDoc doc = ConfigDoc::load((dir / "config.toml").string());
  CHECK(doc.get_bool("loss.enable_ent", true) == false);
  fs::remove_all(dir);

  CliResult bad = run_cli("run table1 --out " + dir.string() + " --nonsense");
  CHECK(bad.code == 1);
}

TEST_CASE("the splits subcommand ingests a csv and writes a split spec") {
  fs::path dir = fresh_dir("rcore_splits");
  fs::path ann = dir / "annotations.csv";
  {
    std::ofstream f(ann);
    f << "id,verb,object\n";
    for (int i = 0; i < 600; ++i)
      f << 'r' << i << ",verb_" << i % 7 << ",object_" << (i % 2 ? i % 7 : i % 5) << '\n';
  }
  CliResult res = run_cli("splits " + ann.string() + " --min-count 3 --swap 0.5 --seed 2 --out " +
                          dir.string());
  REQUIRE_MESSAGE(res.code == 0, res.output);
  SplitSpec spec = SplitSpec::from_json(slurp(dir / "splits.json"));
  CHECK_FALSE(spec.train_ids.empty());
  CHECK_FALSE(spec.test_ids.empty());
  fs::remove_all(dir);

  CliResult missing = run_cli("splits /no/such/file.csv");
  CHECK(missing.code == 2);
}

TEST_CASE("eval and probe consume the artifacts a run emits") {
  fs::path dir = fresh_dir("rcore_eval_probe");
  CliResult run = run_cli("run fig2b --seed 4 --out " + dir.string() + kTinyOverrides);
  REQUIRE_MESSAGE(run.code == 0, run.output);

  fs::path eval_out = fresh_dir("rcore_eval_out");
  CliResult ev = run_cli("eval " + (dir / "model_final.ckpt").string() + " " +
                         (dir / "dataset_val.czsl").string() + " --space " +
                         (dir / "space.json").string() + " --out " + eval_out.string());
  REQUIRE_MESSAGE(ev.code == 0, ev.output);
  CHECK(fs::exists(eval_out / "eval.json"));

  CliResult cal = run_cli("eval " + (dir / "model_final.ckpt").string() + " " +
                          (dir / "dataset_val.czsl").string() + " --space " +
                          (dir / "space.json").string() + " --calibrate --unsound-test-tuned" +
                          " --out " + eval_out.string());
  REQUIRE_MESSAGE(cal.code == 0, cal.output);
  CHECK(fs::exists(eval_out / "calibration_curve.csv"));
  CHECK(cal.output.find("warning") != std::string::npos);

  // --calibrate without a validation dataset and without the unsound flag fails.
  CliResult nocal = run_cli("eval " + (dir / "model_final.ckpt").string() + " " +
                            (dir / "dataset_val.czsl").string() + " --space " +
                            (dir / "space.json").string() + " --calibrate --out " +
                            eval_out.string());
  CHECK(nocal.code == 2);

  fs::path probe_out = fresh_dir("rcore_probe_out");
  CliResult pr = run_cli("probe " + (dir / "model_final.ckpt").string() + " " +
                         (dir / "dataset_val.czsl").string() + " --space " +
                         (dir / "space.json").string() + " --out " + probe_out.string());
  REQUIRE_MESSAGE(pr.code == 0, pr.output);
  CHECK(fs::exists(probe_out / "probes.json"));

  fs::remove_all(dir);
  fs::remove_all(eval_out);
  fs::remove_all(probe_out);
}

TEST_CASE("the CZSL_SEED environment variable acts as the seed fallback") {
  fs::path dir1 = fresh_dir("rcore_env_seed1");
  fs::path dir2 = fresh_dir("rcore_env_seed2");
  CliResult a = run_cli("run table1 --seed 12 --out " + dir1.string());
  REQUIRE(a.code == 0);
  setenv("CZSL_SEED", "12", 1);
  CliResult b = run_cli("run table1 --out " + dir2.string());
  unsetenv("CZSL_SEED");
  REQUIRE(b.code == 0);
  CHECK(slurp(dir1 / "config.toml") == slurp(dir2 / "config.toml"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
