#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "armarecon/common.hpp"
#include "armarecon/config.hpp"
#include "support/nifti_testing.hpp"

using namespace armarecon;
namespace fs = std::filesystem;

#ifndef ARMARECON_CLI_PATH
#error "ARMARECON_CLI_PATH must be defined by the build"
#endif

namespace {

struct CliResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  const auto dir = fs::temp_directory_path();
  const std::string out_path = (dir / "armarecon_cli_stdout.txt").string();
  const std::string err_path = (dir / "armarecon_cli_stderr.txt").string();
  const std::string command =
      std::string(ARMARECON_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config files parse with comments and whitespace") {
  const std::string path = (fs::temp_directory_path() / "armarecon_run.cfg").string();
  {
    std::ofstream out(path);
    out << "# experiment setup\n";
    out << "\n";
    out << "alpha = 0.8\n";
    out << "lambda_recon=0.001\n";
    out << "model = cheb\n";
    out << "seed = 17\n";
  }
  ExperimentConfig config = parse_config_file(path);
  CHECK(config.alpha == 0.8);
  CHECK(config.lambda_recon == 0.001);
  CHECK(config.model == "cheb");
  CHECK(config.seed == 17);
  std::remove(path.c_str());
}

TEST_CASE("unknown keys, bad values, and missing files are config errors") {
  ExperimentConfig config;
  CHECK_THROWS_WITH_AS(set_config_key(config, "lamda", "3"), doctest::Contains("unknown config key"),
                       ConfigError);
  CHECK_THROWS_AS(set_config_key(config, "epochs", "many"), ConfigError);
  CHECK_THROWS_AS(apply_override(config, "no_equals_sign"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_file("/no/such/run.cfg"), doctest::Contains("/no/such/run.cfg"),
                       ConfigError);

  apply_override(config, "dropout=0.5");
  CHECK(config.dropout == 0.5);
}

TEST_CASE("validate rejects out-of-range settings") {
  auto expect_reject = [](const std::string& assignment) {
    ExperimentConfig config;
    apply_override(config, assignment);
    CHECK_THROWS_AS(validate(config), ConfigError);
  };
  expect_reject("alpha=1.0");
  expect_reject("dropout=1.0");
  expect_reject("train_frac=0");
  expect_reject("model=gat");
  expect_reject("similarity=l2");
  expect_reject("epochs=0");
  expect_reject("lr=0");
  expect_reject("synth_n=41");
  expect_reject("dataset=dicom");

  ExperimentConfig ok;
  validate(ok);  // defaults are valid
}

TEST_CASE("cli: synth-data writes a feature CSV and exits 0") {
  const auto dir = fresh_dir("armarecon_cli_synth");
  const std::string csv = (dir / "cohort.csv").string();
  CliResult r = run_cli("synth-data --n 20 --p 2 --bins 5 --shift 0.15 --seed 7 --out " + csv);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(csv));
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("subject_id,label,f000", 0) == 0);
}

TEST_CASE("cli: missing config file exits 1 naming the path") {
  CliResult r = run_cli("cross-validate --config /missing/run.cfg --out /tmp/armarecon_never");
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("armarecon:", 0) == 0);
  CHECK(r.err.find("/missing/run.cfg") != std::string::npos);
}

TEST_CASE("cli: unknown --set key exits 1") {
  CliResult r = run_cli("cross-validate --set lamda=1 --out /tmp/armarecon_never");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("unknown config key") != std::string::npos);
}

TEST_CASE("cli: data errors exit 2") {
  CliResult r = run_cli("build-graph --features /nonexistent.csv --alpha 0.5 --out /tmp/x.txt");
  CHECK(r.exit_code == 2);
  CHECK(r.err.rfind("armarecon:", 0) == 0);
}

TEST_CASE("cli: numerical failures exit 3") {
  // 1 + q1*lambda = 1 - 0.5*2 = 0: a pole right on the grid point.
  CliResult r = run_cli("filter-response --p 1 --q -0.5 --lambda-min 2 --lambda-max 2 --count 1");
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("pole") != std::string::npos);
}

TEST_CASE("cli: filter-response emits the lambda,response CSV") {
  CliResult r = run_cli("filter-response --p 1 --q 1 --lambda-min 0 --lambda-max 1 --count 3");
  CHECK(r.exit_code == 0);
  CHECK(r.out.rfind("lambda,response\n0,1\n", 0) == 0);
  CHECK(r.out.find("1,0.5\n") != std::string::npos);
}

TEST_CASE("cli: help lists every config key") {
  CliResult r = run_cli("cross-validate --help");
  CHECK(r.exit_code == 0);
  for (const auto& key : config_keys()) {
    INFO("key ", key);
    CHECK(r.out.find(key) != std::string::npos);
  }
}

TEST_CASE("cli: cross-validate writes report.csv and manifest.txt") {
  const auto dir = fresh_dir("armarecon_cli_cv");
  CliResult r = run_cli(
      "cross-validate --set dataset=synth --set synth_n=24 --set synth_p=2 --set bins=6"
      " --set alpha=0.8 --set hidden_dim=6 --set epochs=4 --set folds=2 --set train_frac=0.75"
      " --set seed=5 --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "manifest.txt"));
  const std::string manifest = slurp((dir / "manifest.txt").string());
  CHECK(manifest.find("report_sha256=") != std::string::npos);
  CHECK(manifest.find("seed=5") != std::string::npos);
  const std::string report = slurp((dir / "report.csv").string());
  CHECK(report.rfind("fold,acc,prec,rec,f1,auc\n", 0) == 0);
  CHECK(report.find("aggregate_mean,") != std::string::npos);
  CHECK(report.find("aggregate_std,") != std::string::npos);
}

TEST_CASE("cli: --set overrides beat config-file values and land in the manifest") {
  const auto dir = fresh_dir("armarecon_cli_override");
  const std::string cfg_path = (dir / "run.cfg").string();
  {
    std::ofstream out(cfg_path);
    out << "dataset=synth\nsynth_n=24\nsynth_p=2\nbins=6\nalpha=0.8\n";
    out << "hidden_dim=6\nepochs=3\nfolds=2\ntrain_frac=0.75\nseed=4\n";
  }
  CliResult r = run_cli("cross-validate --config " + cfg_path + " --set alpha=0.85 --out " +
                        (dir / "out").string());
  CHECK(r.exit_code == 0);
  const std::string manifest = slurp((dir / "out" / "manifest.txt").string());
  CHECK(manifest.find("alpha=0.84999999999999998") != std::string::npos);
  CHECK(manifest.find("alpha=0.8\n") == std::string::npos);
}

TEST_CASE("cli: train then evaluate round-trips a checkpoint") {
  const auto dir = fresh_dir("armarecon_cli_train");
  const std::string common =
      "--set dataset=synth --set synth_n=24 --set synth_p=2 --set bins=6 --set alpha=0.8"
      " --set hidden_dim=6 --set epochs=4 --set folds=2 --set train_frac=0.75 --set seed=5";
  CliResult train = run_cli("train " + common + " --out " + dir.string());
  CHECK(train.exit_code == 0);
  const std::string ckpt = (dir / "model.ckpt").string();
  REQUIRE(fs::exists(ckpt));
  CHECK(fs::exists(dir / "metrics.csv"));

  const auto eval_dir = fresh_dir("armarecon_cli_eval");
  CliResult eval = run_cli("evaluate " + common + " --checkpoint " + ckpt + " --out " +
                           eval_dir.string());
  CHECK(eval.exit_code == 0);
  CHECK(fs::exists(eval_dir / "metrics.csv"));
  // Same data, same split, same trained weights: the metrics files must agree.
  CHECK(slurp((dir / "metrics.csv").string()) == slurp((eval_dir / "metrics.csv").string()));
}

TEST_CASE("cli: NIfTI manifest pipeline from volumes to cross-validation") {
  const auto dir = fresh_dir("armarecon_cli_pipeline");

  // Four subjects, two per class; class 1 has its FA distribution shifted down.
  const std::array<int, 3> dims{3, 3, 1};
  std::vector<double> atlas_vox(9);
  for (std::size_t v = 0; v < atlas_vox.size(); ++v) atlas_vox[v] = v < 4 ? 1.0 : 2.0;
  nifti_testing::WriteOptions atlas_opt;
  atlas_opt.datatype = 4;  // int16 labels
  const std::string atlas_path = (dir / "atlas.nii").string();
  nifti_testing::write_nifti_file(atlas_path, dims, atlas_vox, atlas_opt);

  std::ofstream manifest(dir / "cohort.txt");
  const double base_fa[4] = {0.62, 0.60, 0.34, 0.36};
  for (int s = 0; s < 4; ++s) {
    std::vector<double> fa_vox(9);
    for (std::size_t v = 0; v < fa_vox.size(); ++v) {
      fa_vox[v] = base_fa[s] + 0.01 * static_cast<double>(v % 3);
    }
    const std::string fa_path = (dir / ("fa" + std::to_string(s) + ".nii")).string();
    nifti_testing::write_nifti_file(fa_path, dims, fa_vox);
    manifest << "sub" << s << "," << (s < 2 ? 0 : 1) << "," << fa_path << "," << atlas_path << "\n";
  }
  manifest.close();

  const std::string features_csv = (dir / "features.csv").string();
  CliResult extract = run_cli("extract-features --manifest " + (dir / "cohort.txt").string() +
                              " --roi-ids 1,2 --bins 10 --out " + features_csv);
  CHECK(extract.exit_code == 0);
  REQUIRE(fs::exists(features_csv));

  CliResult graph = run_cli("build-graph --features " + features_csv +
                            " --alpha 0.5 --out " + (dir / "graph.txt").string());
  CHECK(graph.exit_code == 0);

  const std::string protocol =
      " --set bins=10 --set alpha=0.5 --set hidden_dim=4 --set epochs=3 --set folds=2"
      " --set train_frac=0.5 --set seed=2";
  CliResult from_csv = run_cli("cross-validate --set dataset=csv --set features_csv=" +
                               features_csv + protocol + " --out " + (dir / "run_csv").string());
  CHECK(from_csv.exit_code == 0);

  CliResult from_manifest = run_cli(
      "cross-validate --set dataset=manifest --set manifest=" + (dir / "cohort.txt").string() +
      " --set roi_ids=1,2" + protocol + " --out " + (dir / "run_manifest").string());
  CHECK(from_manifest.exit_code == 0);

  // Identical features either way, so the reports must agree byte for byte.
  CHECK(slurp((dir / "run_csv" / "report.csv").string()) ==
        slurp((dir / "run_manifest" / "report.csv").string()));
}

TEST_CASE("cli: an invalid subcommand fails with the armarecon prefix") {
  CliResult r = run_cli("frobnicate");
  CHECK(r.exit_code == 1);
  CHECK(r.err.rfind("armarecon:", 0) == 0);
}
