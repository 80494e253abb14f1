#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace armarecon {

/// Full description of one run. Defaults mirror the training protocol the experiments
/// use (lr 1e-4, weight decay 1e-4, dropout 0.25, 2000 epochs, 20 folds, 1 ARMA
/// stack/layer, 20-bin histograms over 9 ROIs).
struct ExperimentConfig {
  // dataset
  std::string dataset = "synth";  // synth | csv | manifest
  std::string features_csv;       // dataset=csv
  std::string manifest;           // dataset=manifest
  std::vector<int> roi_ids = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  int bins = 20;
  int synth_n = 200;
  int synth_p = 9;
  double synth_shift = 0.15;
  double synth_noise = 0.05;
  // graph
  double alpha = 0.92;
  std::string similarity = "cosine";  // cosine | dot
  // model
  std::string model = "arma";  // arma | gcn | cheb | mlp
  bool recon = true;
  double lambda_recon = 0.9;
  int hidden_dim = 64;
  int num_stacks = 1;
  int num_layers = 1;
  int cheb_k = 3;
  double dropout = 0.25;
  // training
  int epochs = 2000;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  // protocol
  double train_frac = 0.9;
  int folds = 20;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Ordered list of every config key (the --set / config-file / manifest vocabulary).
const std::vector<std::string>& config_keys();

/// Sets one field from its textual form. Unknown keys and unparsable values are
/// ConfigErrors.
void set_config_key(ExperimentConfig& config, const std::string& key, const std::string& value);

/// `key=value` override as accepted by --set.
void apply_override(ExperimentConfig& config, const std::string& assignment);

/// Every field as (key, textual value), in config_keys() order. Doubles use 17
/// significant digits so an echoed config re-parses to an identical struct.
std::vector<std::pair<std::string, std::string>> config_to_key_values(const ExperimentConfig& config);

/// Flat key=value file with '#' comments and blank lines.
ExperimentConfig parse_config_file(const std::string& path);

/// Range/consistency checks; throws ConfigError on the first violation.
void validate(const ExperimentConfig& config);

}  // namespace armarecon
