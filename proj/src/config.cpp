#include "armarecon/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "armarecon/common.hpp"

namespace armarecon {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' needs an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' needs a number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' needs an unsigned integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "' needs true/false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("config key '" + key + "' has an empty list element");
    out.push_back(parse_int(key, item));
  }
  if (out.empty()) throw ConfigError("config key '" + key + "' needs a comma-separated integer list");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",    "features_csv", "manifest",    "roi_ids",      "bins",
      "synth_n",    "synth_p",      "synth_shift", "synth_noise",  "alpha",
      "similarity", "model",        "recon",       "lambda_recon", "hidden_dim",
      "num_stacks", "num_layers",   "cheb_k",      "dropout",      "epochs",
      "lr",         "weight_decay", "train_frac",  "folds",        "seed",
      "threads"};
  return keys;
}

void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "dataset") c.dataset = value;
  else if (key == "features_csv") c.features_csv = value;
  else if (key == "manifest") c.manifest = value;
  else if (key == "roi_ids") c.roi_ids = parse_int_list(key, value);
  else if (key == "bins") c.bins = parse_int(key, value);
  else if (key == "synth_n") c.synth_n = parse_int(key, value);
  else if (key == "synth_p") c.synth_p = parse_int(key, value);
  else if (key == "synth_shift") c.synth_shift = parse_double(key, value);
  else if (key == "synth_noise") c.synth_noise = parse_double(key, value);
  else if (key == "alpha") c.alpha = parse_double(key, value);
  else if (key == "similarity") c.similarity = value;
  else if (key == "model") c.model = value;
  else if (key == "recon") c.recon = parse_bool(key, value);
  else if (key == "lambda_recon") c.lambda_recon = parse_double(key, value);
  else if (key == "hidden_dim") c.hidden_dim = parse_int(key, value);
  else if (key == "num_stacks") c.num_stacks = parse_int(key, value);
  else if (key == "num_layers") c.num_layers = parse_int(key, value);
  else if (key == "cheb_k") c.cheb_k = parse_int(key, value);
  else if (key == "dropout") c.dropout = parse_double(key, value);
  else if (key == "epochs") c.epochs = parse_int(key, value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "weight_decay") c.weight_decay = parse_double(key, value);
  else if (key == "train_frac") c.train_frac = parse_double(key, value);
  else if (key == "folds") c.folds = parse_int(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "threads") c.threads = parse_int(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set needs key=value, got '" + assignment + "'");
  }
  set_config_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::vector<std::pair<std::string, std::string>> config_to_key_values(const ExperimentConfig& c) {
  return {
      {"dataset", c.dataset},
      {"features_csv", c.features_csv},
      {"manifest", c.manifest},
      {"roi_ids", fmt_int_list(c.roi_ids)},
      {"bins", std::to_string(c.bins)},
      {"synth_n", std::to_string(c.synth_n)},
      {"synth_p", std::to_string(c.synth_p)},
      {"synth_shift", fmt_double(c.synth_shift)},
      {"synth_noise", fmt_double(c.synth_noise)},
      {"alpha", fmt_double(c.alpha)},
      {"similarity", c.similarity},
      {"model", c.model},
      {"recon", c.recon ? "true" : "false"},
      {"lambda_recon", fmt_double(c.lambda_recon)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"num_stacks", std::to_string(c.num_stacks)},
      {"num_layers", std::to_string(c.num_layers)},
      {"cheb_k", std::to_string(c.cheb_k)},
      {"dropout", fmt_double(c.dropout)},
      {"epochs", std::to_string(c.epochs)},
      {"lr", fmt_double(c.lr)},
      {"weight_decay", fmt_double(c.weight_decay)},
      {"train_frac", fmt_double(c.train_frac)},
      {"folds", std::to_string(c.folds)},
      {"seed", std::to_string(c.seed)},
      {"threads", std::to_string(c.threads)},
  };
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig config;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file '" + path + "' line " + std::to_string(line_no) +
                        " is not a key=value entry: '" + line + "'");
    }
    set_config_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

void validate(const ExperimentConfig& c) {
  if (c.dataset != "synth" && c.dataset != "csv" && c.dataset != "manifest") {
    throw ConfigError("dataset must be synth, csv or manifest, got '" + c.dataset + "'");
  }
  if (c.dataset == "csv" && c.features_csv.empty()) {
    throw ConfigError("dataset=csv needs features_csv");
  }
  if (c.dataset == "manifest" && c.manifest.empty()) {
    throw ConfigError("dataset=manifest needs manifest");
  }
  if (c.bins < 1) throw ConfigError("bins must be >= 1");
  if (c.synth_n < 4 || c.synth_n % 2 != 0) throw ConfigError("synth_n must be an even integer >= 4");
  if (c.synth_p < 1) throw ConfigError("synth_p must be >= 1");
  if (c.synth_shift < 0.0 || c.synth_shift > 0.5) throw ConfigError("synth_shift must lie in [0, 0.5]");
  if (c.synth_noise < 0.0) throw ConfigError("synth_noise must be nonnegative");
  if (!(c.alpha >= 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in [0, 1)");
  if (c.similarity != "cosine" && c.similarity != "dot") {
    throw ConfigError("similarity must be cosine or dot, got '" + c.similarity + "'");
  }
  if (c.model != "arma" && c.model != "gcn" && c.model != "cheb" && c.model != "mlp") {
    throw ConfigError("model must be arma, gcn, cheb or mlp, got '" + c.model + "'");
  }
  if (c.lambda_recon < 0.0) throw ConfigError("lambda_recon must be nonnegative");
  if (c.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (c.num_stacks < 1) throw ConfigError("num_stacks must be >= 1");
  if (c.num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (c.cheb_k < 1) throw ConfigError("cheb_k must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (c.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.weight_decay < 0.0) throw ConfigError("weight_decay must be nonnegative");
  if (!(c.train_frac > 0.0 && c.train_frac < 1.0)) throw ConfigError("train_frac must lie in (0, 1)");
  if (c.folds < 1) throw ConfigError("folds must be >= 1");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
}

}  // namespace armarecon
