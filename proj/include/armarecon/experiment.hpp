#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "armarecon/config.hpp"
#include "armarecon/features.hpp"
#include "armarecon/graph.hpp"
#include "armarecon/nn.hpp"

namespace armarecon {

/// k stratified random train/test splits at a fixed train fraction. Each fold draws its
/// own shuffle stream from the plan seed, so plans are deterministic and folds differ.
struct SplitPlan {
  double train_frac = 0.0;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::uint8_t>> train;  // [fold][node]
  std::vector<std::vector<std::uint8_t>> test;
};

/// Per-class train count is round(train_frac * class_size), clamped so both sides keep at
/// least one member; a class with fewer than 2 members is an error.
SplitPlan stratified_folds(const std::vector<int>& labels, double train_frac, int k,
                           std::uint64_t seed);

struct MetricsRow {
  double acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // missing when the test mask holds a single class
};

struct MetricsReport {
  std::vector<MetricsRow> per_fold;
  MetricsRow mean;
  MetricsRow stddev;  // population std over folds
};

/// Confusion-matrix metrics at the argmax decision (score > 0 predicts class 1) plus
/// rank-based AUC with ties counted 1/2. Scores are class-1 minus class-0 logits.
MetricsRow binary_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                          const std::vector<std::uint8_t>& test_mask);

/// Mean and population std of each metric over folds. AUC aggregates over the folds where
/// it is defined;  stays missing if it is defined nowhere.
MetricsReport aggregate_metrics(const std::vector<MetricsRow>& rows);

/// Loads the configured dataset: synthetic cohort, feature CSV, or NIfTI cohort manifest.
FeatureMatrix load_dataset(const ExperimentConfig& config);

ModelConfig model_config_from(const ExperimentConfig& config, int input_dim);

/// Trains one fold from a fresh initialization and evaluates on its test mask.
/// Training sees labels with test entries replaced by the -1 sentinel; evaluation gets
/// the true labels back. Optionally returns the trained parameters and optimizer state.
MetricsRow train_fold(const ExperimentConfig& config, const Eigen::MatrixXd& features,
                      const std::vector<int>& labels, const PropagationOps& ops,
                      const std::vector<std::uint8_t>& train_mask,
                      const std::vector<std::uint8_t>& test_mask, std::uint64_t fold_seed,
                      ModelParams* params_out = nullptr, AdamState* state_out = nullptr);

/// The full protocol: load data, build the subject graph once (transductive), train every
/// fold from scratch, evaluate, aggregate. Folds run in parallel when config.threads > 1;
/// results are identical for any thread count. A fold failure aborts the run naming the
/// fold.
struct ExperimentResult {
  MetricsReport report;
  FeatureMatrix features;
  SubjectGraph graph;
};
ExperimentResult run_experiment(const ExperimentConfig& config);

/// report.csv text: header `fold,acc,prec,rec,f1,auc`, one row per fold, then
/// aggregate_mean / aggregate_std rows. Missing AUC prints as an empty field.
std::string report_to_csv(const MetricsReport& report);
void write_report_csv(const MetricsReport& report, const std::string& path);

/// Re-reads a report.csv written by write_report_csv (used by tests and `evaluate`).
MetricsReport read_report_csv(const std::string& path);

/// manifest.txt: every config field as key=value plus supplied artifact entries.
void write_run_manifest(const ExperimentConfig& config,
                        const std::vector<std::pair<std::string, std::string>>& artifacts,
                        const std::string& path);

/// Derives the seed of fold `fold` for training streams: mix(mix(seed, train-tag), fold).
std::uint64_t fold_train_seed(std::uint64_t run_seed, int fold);

}  // namespace armarecon
