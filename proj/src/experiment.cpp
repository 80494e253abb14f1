#include "armarecon/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "armarecon/common.hpp"
#include "armarecon/rng.hpp"

namespace armarecon {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void rethrow_with_fold(int fold, std::exception_ptr eptr) {
  const std::string tag = "fold " + std::to_string(fold) + ": ";
  try {
    std::rethrow_exception(eptr);
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const DataError& e) {
    throw DataError(tag + e.what());
  } catch (const NumericError& e) {
    throw NumericError(tag + e.what());
  } catch (const std::exception& e) {
    throw Error(tag + e.what());
  }
}

}  // namespace

std::uint64_t fold_train_seed(std::uint64_t run_seed, int fold) {
  return mix_seed(mix_seed(run_seed, rng_tags::kFoldTrain), static_cast<std::uint64_t>(fold));
}

SplitPlan stratified_folds(const std::vector<int>& labels, double train_frac, int k,
                           std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw ConfigError("train_frac must lie in (0, 1), got " + std::to_string(train_frac));
  }
  if (k < 1) throw ConfigError("fold count must be >= 1, got " + std::to_string(k));

  std::vector<std::vector<long>> by_class(2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("stratified_folds: label at node " + std::to_string(i) + " is " +
                      std::to_string(labels[i]) + ", expected 0 or 1");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<long>(i));
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[static_cast<std::size_t>(c)].size() < 2) {
      throw DataError("class " + std::to_string(c) + " has " +
                      std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                      " member(s); need >= 2 to place one in each side of a split");
    }
  }

  SplitPlan plan;
  plan.train_frac = train_frac;
  plan.folds = k;
  plan.seed = seed;
  plan.train.assign(static_cast<std::size_t>(k), std::vector<std::uint8_t>(labels.size(), 0));
  plan.test.assign(static_cast<std::size_t>(k), std::vector<std::uint8_t>(labels.size(), 0));

  for (int f = 0; f < k; ++f) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(f)));
    for (int c = 0; c < 2; ++c) {
      std::vector<long> members = by_class[static_cast<std::size_t>(c)];
      shuffle(members, rng);
      const long count = static_cast<long>(members.size());
      long take = std::lround(train_frac * static_cast<double>(count));
      take = std::clamp<long>(take, 1, count - 1);
      for (long i = 0; i < count; ++i) {
        auto& mask = i < take ? plan.train : plan.test;
        mask[static_cast<std::size_t>(f)][static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] = 1;
      }
    }
  }
  return plan;
}

MetricsRow binary_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                          const std::vector<std::uint8_t>& test_mask) {
  if (scores.size() != labels.size() || scores.size() != test_mask.size()) {
    throw DataError("binary_metrics: scores/labels/mask length mismatch");
  }

  std::vector<std::pair<double, int>> test;  // (score, label)
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!test_mask[i]) continue;
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError("binary_metrics: test node " + std::to_string(i) + " has label " + std::to_string(labels[i]));
    }
    test.emplace_back(scores[i], labels[i]);
  }
  if (test.empty()) throw DataError("binary_metrics: empty test mask");

  long tp = 0, fp = 0, tn = 0, fn = 0;
  for (const auto& [score, label] : test) {
    const int predicted = score > 0.0 ? 1 : 0;  // argmax over the two logits, tie -> 0
    if (predicted == 1 && label == 1) ++tp;
    else if (predicted == 1 && label == 0) ++fp;
    else if (predicted == 0 && label == 0) ++tn;
    else ++fn;
  }

  MetricsRow row;
  row.acc = static_cast<double>(tp + tn) / static_cast<double>(test.size());
  if (tp + fp > 0) {
    row.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    warn("binary_metrics: no positive predictions; precision reported as 0");
    row.precision = 0.0;
  }
  row.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  row.f1 = (row.precision + row.recall) > 0.0
               ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
               : 0.0;

  const long npos = tp + fn;
  const long nneg = fp + tn;
  if (npos == 0 || nneg == 0) {
    warn("binary_metrics: test mask holds a single class; AUC is undefined and recorded as missing");
    return row;
  }

  // Mann-Whitney AUC: average ranks over ties, U1 = R1 - npos(npos+1)/2.
  std::sort(test.begin(), test.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < test.size()) {
    std::size_t j = i;
    while (j + 1 < test.size() && test[j + 1].first == test[i].first) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);  // 1-based
    for (std::size_t t = i; t <= j; ++t) {
      if (test[t].second == 1) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u1 = rank_sum_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1);
  row.auc = u1 / (static_cast<double>(npos) * static_cast<double>(nneg));
  return row;
}

MetricsReport aggregate_metrics(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw DataError("aggregate_metrics: no folds");
  MetricsReport report;
  report.per_fold = rows;

  const double n = static_cast<double>(rows.size());
  auto mean_std = [n](auto&& get) {
    double mean = 0.0;
    for (const auto v : get()) mean += v;
    mean /= n;
    double var = 0.0;
    for (const auto v : get()) var += (v - mean) * (v - mean);
    return std::pair<double, double>(mean, std::sqrt(var / n));
  };

  auto collect = [&rows](auto member) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*member);
    return out;
  };

  {
    auto [m, s] = mean_std([&] { return collect(&MetricsRow::acc); });
    report.mean.acc = m;
    report.stddev.acc = s;
  }
  {
    auto [m, s] = mean_std([&] { return collect(&MetricsRow::precision); });
    report.mean.precision = m;
    report.stddev.precision = s;
  }
  {
    auto [m, s] = mean_std([&] { return collect(&MetricsRow::recall); });
    report.mean.recall = m;
    report.stddev.recall = s;
  }
  {
    auto [m, s] = mean_std([&] { return collect(&MetricsRow::f1); });
    report.mean.f1 = m;
    report.stddev.f1 = s;
  }

  std::vector<double> aucs;
  for (const auto& r : rows)
    if (r.auc) aucs.push_back(*r.auc);
  if (!aucs.empty()) {
    double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    double var = 0.0;
    for (double v : aucs) var += (v - mean) * (v - mean);
    report.mean.auc = mean;
    report.stddev.auc = std::sqrt(var / static_cast<double>(aucs.size()));
  }
  return report;
}

FeatureMatrix load_dataset(const ExperimentConfig& config) {
  if (config.dataset == "synth") {
    return synth_cohort(config.synth_n, config.synth_p, config.bins, config.synth_shift,
                        config.synth_noise, config.seed);
  }
  if (config.dataset == "csv") {
    FeatureMatrix fm = read_feature_csv(config.features_csv);
    fm.bin_count = config.bins;
    if (config.bins > 0 && fm.dim() % config.bins == 0) {
      fm.roi_count = static_cast<int>(fm.dim() / config.bins);
    }
    return fm;
  }
  if (config.dataset == "manifest") {
    return extract_cohort_features(read_cohort_manifest(config.manifest), config.roi_ids,
                                   config.bins);
  }
  throw ConfigError("dataset must be synth, csv or manifest, got '" + config.dataset + "'");
}

ModelConfig model_config_from(const ExperimentConfig& config, int input_dim) {
  ModelConfig mc;
  mc.conv_kind = conv_kind_from_string(config.model);
  mc.with_decoder = config.recon;
  mc.input_dim = input_dim;
  mc.hidden_dim = config.hidden_dim;
  mc.num_stacks = config.num_stacks;
  mc.num_layers = config.num_layers;
  mc.cheb_order = config.cheb_k;
  mc.dropout_rate = config.dropout;
  return mc;
}

MetricsRow train_fold(const ExperimentConfig& config, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels, const PropagationOps& ops,
                      const std::vector<std::uint8_t>& train_mask,
                      const std::vector<std::uint8_t>& test_mask, std::uint64_t fold_seed,
                      ModelParams* params_out, AdamState* state_out) {
  const long n = features.rows();
  if (static_cast<long>(labels.size()) != n || static_cast<long>(train_mask.size()) != n ||
      static_cast<long>(test_mask.size()) != n) {
    throw DataError("train_fold: labels/mask sizes do not match the feature matrix");
  }

  // Test-set hygiene: training code only ever sees labels with test entries blanked.
  std::vector<int> masked_labels = labels;
  for (long i = 0; i < n; ++i)
    if (test_mask[static_cast<std::size_t>(i)]) masked_labels[static_cast<std::size_t>(i)] = -1;

  ModelParams params = init_model(model_config_from(config, static_cast<int>(features.cols())),
                                  fold_seed);
  // Decoder tensors leave the optimizer list when their gradient path is inactive, so
  // they receive neither updates nor weight decay (keeps the ablation identity exact).
  const bool decoder_active = params.config.with_decoder && config.lambda_recon != 0.0;
  auto views = parameter_views(params, decoder_active);
  AdamState state = make_adam_state(views, config.lr, config.weight_decay);

  SplitMix64 dropout_rng(mix_seed(fold_seed, rng_tags::kDropout));
  ForwardCache cache;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model_forward(params, ops, features, /*training=*/true, dropout_rng, &cache);
    ModelParams grads = backward(params, ops, features, masked_labels, train_mask,
                                 config.lambda_recon, cache);
    auto grad_views = parameter_views(grads, decoder_active);
    adam_step(views, grad_views, state);
  }

  SplitMix64 eval_rng(0);  // inference consumes no randomness
  ForwardResult eval = model_forward(params, ops, features, /*training=*/false, eval_rng);
  if (!eval.logits.allFinite()) {
    throw NumericError("training diverged: non-finite logits after " + std::to_string(config.epochs) + " epochs");
  }

  std::vector<double> scores(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] = eval.logits(i, 1) - eval.logits(i, 0);

  if (params_out) *params_out = std::move(params);
  if (state_out) *state_out = std::move(state);
  return binary_metrics(scores, labels, test_mask);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);

  ExperimentResult result;
  result.features = load_dataset(config);
  result.graph = build_adjacency(result.features, config.alpha,
                                 similarity_from_string(config.similarity));
  const PropagationOps ops = build_propagation(result.graph, conv_kind_from_string(config.model));

  const SplitPlan plan = stratified_folds(result.features.labels, config.train_frac, config.folds,
                                          mix_seed(config.seed, rng_tags::kSplits));

  std::vector<MetricsRow> rows(static_cast<std::size_t>(config.folds));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(config.folds));
  std::atomic<int> next_fold{0};

  auto worker = [&]() {
    while (true) {
      const int f = next_fold.fetch_add(1);
      if (f >= config.folds) return;
      try {
        rows[static_cast<std::size_t>(f)] =
            train_fold(config, result.features.data, result.features.labels, ops,
                       plan.train[static_cast<std::size_t>(f)], plan.test[static_cast<std::size_t>(f)],
                       fold_train_seed(config.seed, f));
      } catch (...) {
        failures[static_cast<std::size_t>(f)] = std::current_exception();
      }
    }
  };

  const int worker_count = std::min(config.threads, config.folds);
  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (int f = 0; f < config.folds; ++f) {
    if (failures[static_cast<std::size_t>(f)]) rethrow_with_fold(f, failures[static_cast<std::size_t>(f)]);
  }

  result.report = aggregate_metrics(rows);
  return result;
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "fold,acc,prec,rec,f1,auc\n";
  auto emit = [&out](const std::string& tag, const MetricsRow& r) {
    out << tag << "," << fmt17(r.acc) << "," << fmt17(r.precision) << "," << fmt17(r.recall) << ","
        << fmt17(r.f1) << ",";
    if (r.auc) out << fmt17(*r.auc);
    out << "\n";
  };
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) emit(std::to_string(f), report.per_fold[f]);
  emit("aggregate_mean", report.mean);
  emit("aggregate_std", report.stddev);
  return out.str();
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << report_to_csv(report);
  if (!out) throw DataError("I/O error while writing '" + path + "'");
}

MetricsReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "fold,acc,prec,rec,f1,auc") {
    throw DataError("report '" + path + "' has an unexpected header");
  }

  MetricsReport report;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tag;
    std::getline(ss, tag, ',');
    MetricsRow row;
    std::string field;
    std::getline(ss, field, ',');
    row.acc = std::stod(field);
    std::getline(ss, field, ',');
    row.precision = std::stod(field);
    std::getline(ss, field, ',');
    row.recall = std::stod(field);
    std::getline(ss, field, ',');
    row.f1 = std::stod(field);
    if (std::getline(ss, field, ',') && !field.empty()) row.auc = std::stod(field);
    if (tag == "aggregate_mean") report.mean = row;
    else if (tag == "aggregate_std") report.stddev = row;
    else report.per_fold.push_back(row);
  }
  return report;
}

void write_run_manifest(const ExperimentConfig& config,
                        const std::vector<std::pair<std::string, std::string>>& artifacts,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (const auto& [key, value] : config_to_key_values(config)) out << key << "=" << value << "\n";
  for (const auto& [key, value] : artifacts) out << key << "=" << value << "\n";
  if (!out) throw DataError("I/O error while writing '" + path + "'");
}

}  // namespace armarecon
