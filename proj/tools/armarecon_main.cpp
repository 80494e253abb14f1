#include <CLI11.hpp>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "armarecon/common.hpp"
#include "armarecon/config.hpp"
#include "armarecon/experiment.hpp"
#include "armarecon/features.hpp"
#include "armarecon/graph.hpp"
#include "armarecon/hash.hpp"
#include "armarecon/nn.hpp"
#include "armarecon/spectral.hpp"

namespace fs = std::filesystem;
using namespace armarecon;

namespace {

std::string config_keys_footer() {
  std::string footer = "Config keys (config file lines or --set key=value):";
  for (const auto& key : config_keys()) footer += "\n  " + key;
  return footer;
}

ExperimentConfig load_config(const std::string& config_path, const std::vector<std::string>& sets) {
  ExperimentConfig config;
  if (!config_path.empty()) config = parse_config_file(config_path);
  for (const auto& assignment : sets) apply_override(config, assignment);
  validate(config);
  return config;
}

std::vector<double> parse_double_list(const std::string& what, const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(what + " has a non-numeric entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + " must be a comma-separated list of numbers");
  return out;
}

std::vector<int> parse_roi_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("--roi-ids has a non-integer entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--roi-ids must be a comma-separated list of integers");
  return out;
}

void ensure_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string edge_list_string(const SubjectGraph& graph) {
  std::ostringstream out;
  char header[96];
  std::snprintf(header, sizeof(header), "# n=%d alpha=%.17g\n", graph.n, graph.alpha);
  out << header;
  for (long i = 0; i < graph.adjacency.rows(); ++i)
    for (long j = i + 1; j < graph.adjacency.cols(); ++j)
      if (graph.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
  return out.str();
}

std::string feature_fingerprint(const FeatureMatrix& fm) {
  std::string bytes;
  for (std::size_t i = 0; i < fm.subject_ids.size(); ++i) {
    bytes += fm.subject_ids[i];
    bytes += ',';
    bytes += std::to_string(fm.labels[i]);
    bytes += ';';
  }
  bytes.append(reinterpret_cast<const char*>(fm.data.data()),
               static_cast<std::size_t>(fm.data.size()) * sizeof(double));
  return sha256_hex(bytes);
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for hashing");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

void print_metrics_row(std::ostream& out, const std::string& tag, const MetricsRow& row) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s acc=%.4f prec=%.4f rec=%.4f f1=%.4f", tag.c_str(),
                row.acc, row.precision, row.recall, row.f1);
  out << line;
  if (row.auc) {
    std::snprintf(line, sizeof(line), " auc=%.4f", *row.auc);
    out << line;
  } else {
    out << " auc=--";
  }
  out << "\n";
}

// ---- subcommand bodies ----

void run_synth_data(int n, int p, int bins, double shift, double noise, std::uint64_t seed,
                    const std::string& out_path) {
  FeatureMatrix fm = synth_cohort(n, p, bins, shift, noise, seed);
  write_feature_csv(fm, out_path);
  std::cout << "wrote " << fm.n() << " subjects x " << fm.dim() << " features to " << out_path << "\n";
}

void run_extract_features(const std::string& manifest_path, const std::string& roi_csv, int bins,
                          const std::string& out_path) {
  auto cohort = read_cohort_manifest(manifest_path);
  FeatureMatrix fm = extract_cohort_features(cohort, parse_roi_list(roi_csv), bins);
  write_feature_csv(fm, out_path);
  std::cout << "wrote " << fm.n() << " subjects x " << fm.dim() << " features to " << out_path << "\n";
}

void run_build_graph(const std::string& features_path, double alpha, const std::string& similarity,
                     const std::string& out_path) {
  FeatureMatrix fm = read_feature_csv(features_path);
  SubjectGraph graph = build_adjacency(fm, alpha, similarity_from_string(similarity));
  write_edge_list(graph, out_path);
  std::cout << "wrote graph with n=" << graph.n << " nodes, " << graph.edge_count() << " edges to "
            << out_path << "\n";
}

void run_filter_response(const std::string& p_csv, const std::string& q_csv, double lambda_min,
                         double lambda_max, int count, const std::string& out_path) {
  ArmaFilterSpec spec;
  spec.p_coeffs = parse_double_list("--p", p_csv);
  spec.q_coeffs = q_csv.empty() ? std::vector<double>(spec.p_coeffs.size(), 0.0)
                                : parse_double_list("--q", q_csv);
  if (count < 1) throw ConfigError("--count must be >= 1");
  if (!(lambda_max >= lambda_min)) throw ConfigError("--lambda-max must be >= --lambda-min");

  std::ostringstream csv;
  csv << "lambda,response\n";
  char line[80];
  for (int i = 0; i < count; ++i) {
    const double lam = count == 1 ? lambda_min
                                  : lambda_min + (lambda_max - lambda_min) * i / (count - 1);
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", lam, frequency_response(spec, lam));
    csv << line;
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot open '" + out_path + "' for writing");
    out << csv.str();
  }
}

void run_train(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_output_dir(out_dir);
  FeatureMatrix fm = load_dataset(config);
  SubjectGraph graph = build_adjacency(fm, config.alpha, similarity_from_string(config.similarity));
  PropagationOps ops = build_propagation(graph, conv_kind_from_string(config.model));
  SplitPlan plan = stratified_folds(fm.labels, config.train_frac, config.folds,
                                    mix_seed(config.seed, rng_tags::kSplits));

  ModelParams params;
  AdamState state;
  MetricsRow row = train_fold(config, fm.data, fm.labels, ops, plan.train[0], plan.test[0],
                              fold_train_seed(config.seed, 0), &params, &state);

  const std::string ckpt_path = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(params, state, ckpt_path);
  MetricsReport report = aggregate_metrics({row});
  write_report_csv(report, (fs::path(out_dir) / "metrics.csv").string());
  write_run_manifest(config,
                     {{"n_subjects", std::to_string(fm.n())},
                      {"feature_dim", std::to_string(fm.dim())},
                      {"graph_edges", std::to_string(graph.edge_count())},
                      {"features_sha256", feature_fingerprint(fm)},
                      {"graph_sha256", sha256_hex(edge_list_string(graph))},
                      {"checkpoint_sha256", file_sha256(ckpt_path)}},
                     (fs::path(out_dir) / "manifest.txt").string());
  print_metrics_row(std::cout, "fold 0 (test)", row);
  std::cout << "checkpoint: " << ckpt_path << "\n";
}

void run_evaluate(const ExperimentConfig& config, const std::string& ckpt_path,
                  const std::string& out_dir) {
  ensure_output_dir(out_dir);
  FeatureMatrix fm = load_dataset(config);
  SubjectGraph graph = build_adjacency(fm, config.alpha, similarity_from_string(config.similarity));
  auto [params, state] = load_checkpoint(ckpt_path);
  if (params.config.input_dim != fm.dim()) {
    throw DataError("checkpoint expects " + std::to_string(params.config.input_dim) +
                    " input features, dataset has " + std::to_string(fm.dim()));
  }
  PropagationOps ops = build_propagation(graph, params.config.conv_kind);
  SplitPlan plan = stratified_folds(fm.labels, config.train_frac, config.folds,
                                    mix_seed(config.seed, rng_tags::kSplits));

  SplitMix64 rng(0);
  ForwardResult fwd = model_forward(params, ops, fm.data, /*training=*/false, rng);
  std::vector<double> scores(static_cast<std::size_t>(fm.n()));
  for (long i = 0; i < fm.n(); ++i) scores[static_cast<std::size_t>(i)] = fwd.logits(i, 1) - fwd.logits(i, 0);

  MetricsRow row = binary_metrics(scores, fm.labels, plan.test[0]);
  write_report_csv(aggregate_metrics({row}), (fs::path(out_dir) / "metrics.csv").string());
  print_metrics_row(std::cout, "fold 0 (test)", row);
}

void run_cross_validate(const ExperimentConfig& config, const std::string& out_dir) {
  ensure_output_dir(out_dir);
  ExperimentResult result = run_experiment(config);

  const std::string report_path = (fs::path(out_dir) / "report.csv").string();
  write_report_csv(result.report, report_path);
  write_run_manifest(config,
                     {{"n_subjects", std::to_string(result.features.n())},
                      {"feature_dim", std::to_string(result.features.dim())},
                      {"graph_edges", std::to_string(result.graph.edge_count())},
                      {"features_sha256", feature_fingerprint(result.features)},
                      {"graph_sha256", sha256_hex(edge_list_string(result.graph))},
                      {"report_sha256", file_sha256(report_path)}},
                     (fs::path(out_dir) / "manifest.txt").string());

  for (std::size_t f = 0; f < result.report.per_fold.size(); ++f) {
    print_metrics_row(std::cout, "fold " + std::to_string(f), result.report.per_fold[f]);
  }
  print_metrics_row(std::cout, "mean", result.report.mean);
  print_metrics_row(std::cout, "std", result.report.stddev);
  std::cout << "report: " << report_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARMA rational graph filtering with reconstruction regularization for "
               "FA-histogram subject classification"};
  app.require_subcommand(1);

  // synth-data
  auto* synth = app.add_subcommand("synth-data", "Generate a synthetic cohort feature CSV");
  int sd_n = 200, sd_p = 9, sd_bins = 20;
  double sd_shift = 0.15, sd_noise = 0.05;
  std::uint64_t sd_seed = 1;
  std::string sd_out;
  synth->add_option("--n", sd_n, "Subject count (even, >= 4)");
  synth->add_option("--p", sd_p, "ROI count");
  synth->add_option("--bins", sd_bins, "Histogram bins per ROI");
  synth->add_option("--shift", sd_shift, "Class-1 FA mean reduction in [0, 0.5]");
  synth->add_option("--noise", sd_noise, "FA sample standard deviation");
  synth->add_option("--seed", sd_seed, "Cohort seed");
  synth->add_option("--out", sd_out, "Output feature CSV path")->required();

  // extract-features
  auto* extract = app.add_subcommand("extract-features",
                                     "Extract per-ROI FA histograms from a NIfTI cohort manifest");
  std::string ef_manifest, ef_rois = "1,2,3,4,5,6,7,8,9", ef_out;
  int ef_bins = 20;
  extract->add_option("--manifest", ef_manifest,
                      "Cohort manifest (subject_id,label,fa_path,atlas_path per line)")
      ->required();
  extract->add_option("--roi-ids", ef_rois, "Comma-separated atlas label values");
  extract->add_option("--bins", ef_bins, "Histogram bins per ROI");
  extract->add_option("--out", ef_out, "Output feature CSV path")->required();

  // build-graph
  auto* buildg = app.add_subcommand("build-graph", "Threshold a subject similarity graph from features");
  std::string bg_features, bg_similarity = "cosine", bg_out;
  double bg_alpha = 0.92;
  buildg->add_option("--features", bg_features, "Feature CSV path")->required();
  buildg->add_option("--alpha", bg_alpha, "Edge selection threshold in [0, 1)");
  buildg->add_option("--similarity", bg_similarity, "cosine or dot");
  buildg->add_option("--out", bg_out, "Output edge-list path")->required();

  // filter-response
  auto* filt = app.add_subcommand("filter-response",
                                  "Evaluate a rational filter's frequency response on a lambda grid");
  std::string fr_p, fr_q, fr_out;
  double fr_lmin = 0.0, fr_lmax = 2.0;
  int fr_count = 41;
  filt->add_option("--p", fr_p, "Numerator coefficients p_0..p_{K-1}, comma-separated")->required();
  filt->add_option("--q", fr_q, "Denominator coefficients q_1..q_K (default: all zero)");
  filt->add_option("--lambda-min", fr_lmin, "Grid start");
  filt->add_option("--lambda-max", fr_lmax, "Grid end (inclusive)");
  filt->add_option("--count", fr_count, "Grid point count");
  filt->add_option("--out", fr_out, "Output CSV path ('-' or empty for stdout)");

  // config-driven subcommands
  struct ConfigArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
  };
  auto add_config_options = [](CLI::App* cmd, ConfigArgs& args, bool with_out = true) {
    cmd->add_option("--config", args.config_path, "Config file (key=value lines, # comments)");
    cmd->add_option("--set", args.sets, "Override a config key, e.g. --set lambda_recon=0.001");
    if (with_out) cmd->add_option("--out", args.out_dir, "Output directory")->required();
    cmd->footer(config_keys_footer());
  };

  auto* train = app.add_subcommand("train", "Train one model on fold 0 of the split plan and checkpoint it");
  ConfigArgs train_args;
  add_config_options(train, train_args);

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on fold 0's test split");
  ConfigArgs eval_args;
  std::string eval_ckpt;
  add_config_options(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_ckpt, "Checkpoint path (armarecon-ckpt v1)")->required();

  auto* crossv = app.add_subcommand("cross-validate", "Run the full repeated stratified-split protocol");
  ConfigArgs cv_args;
  add_config_options(crossv, cv_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "armarecon: error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*synth) {
      run_synth_data(sd_n, sd_p, sd_bins, sd_shift, sd_noise, sd_seed, sd_out);
    } else if (*extract) {
      run_extract_features(ef_manifest, ef_rois, ef_bins, ef_out);
    } else if (*buildg) {
      run_build_graph(bg_features, bg_alpha, bg_similarity, bg_out);
    } else if (*filt) {
      run_filter_response(fr_p, fr_q, fr_lmin, fr_lmax, fr_count, fr_out);
    } else if (*train) {
      run_train(load_config(train_args.config_path, train_args.sets), train_args.out_dir);
    } else if (*evaluate) {
      run_evaluate(load_config(eval_args.config_path, eval_args.sets), eval_ckpt, eval_args.out_dir);
    } else if (*crossv) {
      run_cross_validate(load_config(cv_args.config_path, cv_args.sets), cv_args.out_dir);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "armarecon: error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "armarecon: error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "armarecon: error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "armarecon: error: " << e.what() << "\n";
    return 2;
  }
}
