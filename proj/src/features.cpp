#include "armarecon/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "armarecon/common.hpp"
#include "armarecon/rng.hpp"

namespace armarecon {

namespace {

constexpr double kFaClampTol = 1e-6;
constexpr int kSynthSamplesPerRoi = 256;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// Truncated-normal draw on [0,1]: rejection sampling with a clamp fallback so the
// per-draw state advance is bounded.
double truncated_normal01(double mean, double sd, SplitMix64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    double v = mean + sd * rng.next_normal();
    if (v >= 0.0 && v <= 1.0) return v;
  }
  return std::clamp(mean, 0.0, 1.0);
}

}  // namespace

Eigen::VectorXd roi_histogram(std::span<const double> values, int q) {
  if (q < 1) {
    throw ConfigError("histogram bin count must be >= 1, got " + std::to_string(q));
  }
  Eigen::VectorXd bins = Eigen::VectorXd::Zero(q);
  if (values.empty()) return bins;

  std::vector<long> counts(static_cast<std::size_t>(q), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      std::ostringstream msg;
      msg << "histogram input out of range at index " << i << ": value " << v << " is outside [0, 1]";
      throw DataError(msg.str());
    }
    int b = static_cast<int>(std::floor(v * q));
    if (b >= q) b = q - 1;  // v == 1.0 lands in the closed top bin
    ++counts[static_cast<std::size_t>(b)];
  }
  const double inv = 1.0 / static_cast<double>(values.size());
  for (int b = 0; b < q; ++b) bins[b] = static_cast<double>(counts[static_cast<std::size_t>(b)]) * inv;
  return bins;
}

std::vector<RoiHistogram> subject_features(const Volume& fa, const Volume& atlas,
                                           const std::vector<int>& roi_ids, int q) {
  if (fa.dims != atlas.dims) {
    std::ostringstream msg;
    msg << "FA/atlas dimension mismatch: FA is " << fa.dims[0] << "x" << fa.dims[1] << "x" << fa.dims[2]
        << ", atlas is " << atlas.dims[0] << "x" << atlas.dims[1] << "x" << atlas.dims[2];
    throw DataError(msg.str());
  }
  for (std::size_t i = 0; i + 1 < roi_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < roi_ids.size(); ++j) {
      if (roi_ids[i] == roi_ids[j]) {
        throw ConfigError("duplicate ROI id " + std::to_string(roi_ids[i]) + " in ROI list");
      }
    }
  }

  std::vector<RoiHistogram> out;
  out.reserve(roi_ids.size());
  std::vector<double> values;
  for (int roi : roi_ids) {
    values.clear();
    for (std::size_t v = 0; v < atlas.voxels.size(); ++v) {
      const double label = atlas.voxels[v];
      if (std::abs(label - static_cast<double>(roi)) > 1e-6) continue;
      double fa_value = fa.voxels[v];
      if (fa_value < -kFaClampTol || fa_value > 1.0 + kFaClampTol) {
        std::ostringstream msg;
        msg << "FA value " << fa_value << " at voxel " << v << " is outside [-1e-6, 1+1e-6]; not an FA volume";
        throw DataError(msg.str());
      }
      values.push_back(std::clamp(fa_value, 0.0, 1.0));
    }
    RoiHistogram h;
    h.roi_id = roi;
    h.voxel_count = static_cast<long>(values.size());
    h.bins = roi_histogram(values, q);
    if (values.empty()) {
      warn("ROI " + std::to_string(roi) + " has no voxels in the atlas; emitting a zero block");
    }
    out.push_back(std::move(h));
  }
  return out;
}

Eigen::VectorXd concat_histograms(const std::vector<RoiHistogram>& histograms) {
  long total = 0;
  for (const auto& h : histograms) total += h.bins.size();
  Eigen::VectorXd row(total);
  long at = 0;
  for (const auto& h : histograms) {
    row.segment(at, h.bins.size()) = h.bins;
    at += h.bins.size();
  }
  return row;
}

FeatureMatrix synth_cohort(int n, int p, int q, double class_shift, double noise,
                           std::uint64_t seed) {
  if (n < 4 || n % 2 != 0) {
    throw ConfigError("synthetic cohort needs an even n >= 4, got " + std::to_string(n));
  }
  if (p < 1 || q < 1) {
    throw ConfigError("synthetic cohort needs p >= 1 and q >= 1");
  }
  if (class_shift < 0.0 || class_shift > 0.5) {
    throw ConfigError("class_shift must lie in [0, 0.5], got " + std::to_string(class_shift));
  }
  if (!(noise >= 0.0)) {
    throw ConfigError("noise must be nonnegative, got " + std::to_string(noise));
  }

  FeatureMatrix fm;
  fm.roi_count = p;
  fm.bin_count = q;
  fm.data.resize(n, static_cast<long>(p) * q);
  fm.labels.resize(static_cast<std::size_t>(n));
  fm.subject_ids.resize(static_cast<std::size_t>(n));

  SplitMix64 rng(mix_seed(seed, rng_tags::kSynthCohort));
  std::vector<double> samples(static_cast<std::size_t>(kSynthSamplesPerRoi));
  for (int i = 0; i < n; ++i) {
    const int label = (i < n / 2) ? 0 : 1;
    const double mean = 0.5 - class_shift * label;
    fm.labels[static_cast<std::size_t>(i)] = label;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%04d", i);
    fm.subject_ids[static_cast<std::size_t>(i)] = id;
    for (int j = 0; j < p; ++j) {
      for (auto& s : samples) s = truncated_normal01(mean, noise, rng);
      fm.data.row(i).segment(static_cast<long>(j) * q, q) = roi_histogram(samples, q).transpose();
    }
  }
  return fm;
}

void write_feature_csv(const FeatureMatrix& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");

  const long dim = features.dim();
  int width = 3;
  for (long v = dim - 1; v >= 1000; v /= 10) ++width;

  out << "subject_id,label";
  for (long f = 0; f < dim; ++f) {
    out << ",f" << std::setw(width) << std::setfill('0') << f;
  }
  out << "\n";

  char num[64];
  for (long i = 0; i < features.n(); ++i) {
    out << features.subject_ids[static_cast<std::size_t>(i)] << ","
        << features.labels[static_cast<std::size_t>(i)];
    for (long f = 0; f < dim; ++f) {
      std::snprintf(num, sizeof(num), ",%.17g", features.data(i, f));
      out << num;
    }
    out << "\n";
  }
  if (!out) throw DataError("I/O error while writing '" + path + "'");
}

FeatureMatrix read_feature_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature CSV '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("feature CSV '" + path + "' is empty");
  auto header = split_csv_line(trim(line));
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "label") {
    throw DataError("feature CSV '" + path + "' must start with header `subject_id,label,f...`");
  }
  const long dim = static_cast<long>(header.size()) - 2;

  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<double> values;
  long rows = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<long>(fields.size()) != dim + 2) {
      throw DataError("feature CSV '" + path + "' row " + std::to_string(rows + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " + std::to_string(dim + 2));
    }
    ids.push_back(fields[0]);
    try {
      labels.push_back(std::stoi(fields[1]));
    } catch (const std::exception&) {
      throw DataError("feature CSV '" + path + "' row " + std::to_string(rows + 1) + " has non-integer label '" +
                      fields[1] + "'");
    }
    if (labels.back() != 0 && labels.back() != 1) {
      throw DataError("feature CSV '" + path + "' row " + std::to_string(rows + 1) + " has label " +
                      std::to_string(labels.back()) + "; only binary {0,1} labels are supported");
    }
    for (long f = 0; f < dim; ++f) {
      double value;
      try {
        value = std::stod(fields[static_cast<std::size_t>(f + 2)]);
      } catch (const std::exception&) {
        throw DataError("feature CSV '" + path + "' row " + std::to_string(rows + 1) + " has a non-numeric value '" +
                        fields[static_cast<std::size_t>(f + 2)] + "'");
      }
      if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        throw DataError("feature CSV '" + path + "' row " + std::to_string(rows + 1) + " column f" +
                        std::to_string(f) + " holds " + std::to_string(value) +
                        "; histogram features must lie in [0, 1]");
      }
      values.push_back(value);
    }
    ++rows;
  }
  if (rows == 0) throw DataError("feature CSV '" + path + "' has a header but no data rows");

  FeatureMatrix fm;
  fm.data.resize(rows, dim);
  for (long i = 0; i < rows; ++i)
    for (long f = 0; f < dim; ++f) fm.data(i, f) = values[static_cast<std::size_t>(i * dim + f)];
  fm.labels = std::move(labels);
  fm.subject_ids = std::move(ids);
  // Block structure (p, q) is not recoverable from the CSV alone; callers that need it
  // set roi_count/bin_count from their config.
  fm.roi_count = 0;
  fm.bin_count = 0;
  return fm;
}

std::vector<CohortEntry> read_cohort_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cohort manifest '" + path + "'");

  std::vector<CohortEntry> cohort;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw DataError("cohort manifest '" + path + "' line " + std::to_string(line_no) +
                      " needs `subject_id,label,fa_path,atlas_path`, got " + std::to_string(fields.size()) +
                      " fields");
    }
    CohortEntry e;
    e.subject_id = trim(fields[0]);
    try {
      e.label = std::stoi(trim(fields[1]));
    } catch (const std::exception&) {
      throw DataError("cohort manifest '" + path + "' line " + std::to_string(line_no) + " has non-integer label");
    }
    if (e.label != 0 && e.label != 1) {
      throw DataError("cohort manifest '" + path + "' line " + std::to_string(line_no) + " has label " +
                      std::to_string(e.label) + "; only binary {0,1} labels are supported");
    }
    e.fa_path = trim(fields[2]);
    e.atlas_path = trim(fields[3]);
    cohort.push_back(std::move(e));
  }
  if (cohort.empty()) throw DataError("cohort manifest '" + path + "' lists no subjects");
  return cohort;
}

FeatureMatrix extract_cohort_features(const std::vector<CohortEntry>& cohort,
                                      const std::vector<int>& roi_ids, int q) {
  if (cohort.empty()) throw DataError("cohort is empty");

  FeatureMatrix fm;
  fm.roi_count = static_cast<int>(roi_ids.size());
  fm.bin_count = q;
  fm.data.resize(static_cast<long>(cohort.size()), static_cast<long>(roi_ids.size()) * q);
  fm.labels.reserve(cohort.size());
  fm.subject_ids.reserve(cohort.size());

  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& e = cohort[i];
    Volume fa = load_nifti(e.fa_path);
    Volume atlas = load_nifti(e.atlas_path);
    auto blocks = subject_features(fa, atlas, roi_ids, q);
    fm.data.row(static_cast<long>(i)) = concat_histograms(blocks).transpose();
    fm.labels.push_back(e.label);
    fm.subject_ids.push_back(e.subject_id);
  }
  return fm;
}

}  // namespace armarecon
