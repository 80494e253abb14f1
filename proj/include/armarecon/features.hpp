#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "armarecon/nifti.hpp"

namespace armarecon {

/// Normalized FA histogram of one ROI.
struct RoiHistogram {
  int roi_id = -1;
  Eigen::VectorXd bins;    // length q; sums to 1, or all zero when the ROI is empty
  long voxel_count = 0;    // k_ij
};

/// Subject feature matrix: one row per subject, p ROI blocks of q normalized
/// histogram bins each.
struct FeatureMatrix {
  Eigen::MatrixXd data;                  // n x (p*q)
  std::vector<int> labels;               // n entries in {0, 1}
  std::vector<std::string> subject_ids;  // n entries
  int roi_count = 0;                     // p
  int bin_count = 0;                     // q

  long n() const { return data.rows(); }
  long dim() const { return data.cols(); }
};

/// One subject of a cohort manifest: `subject_id,label,fa_path,atlas_path`.
struct CohortEntry {
  std::string subject_id;
  int label = 0;
  std::string fa_path;
  std::string atlas_path;
};

/// Histogram of `values` over q equal-width bins of [0,1].
///
/// Bin index for value v is floor(v*q); v == 1.0 falls in bin q-1. Counts are divided by
/// the number of values, so the result sums to 1 (or is all zero for empty input).
/// A non-finite value or one outside [0,1] raises a DataError naming its index.
Eigen::VectorXd roi_histogram(std::span<const double> values, int q);

/// Concatenated per-ROI histogram features for one subject, in roi_ids order.
///
/// FA values are clamped into [0,1] with 1e-6 tolerance (anything further out signals a
/// non-FA volume and raises a DataError). An ROI label absent from the atlas contributes
/// a zero block and a warning. Returns the p histograms; concatenate with
/// `concat_histograms` for the feature row.
std::vector<RoiHistogram> subject_features(const Volume& fa, const Volume& atlas,
                                           const std::vector<int>& roi_ids, int q);

/// Flattens p ROI histograms into a length p*q feature row.
Eigen::VectorXd concat_histograms(const std::vector<RoiHistogram>& histograms);

/// Deterministic synthetic cohort standing in for access-restricted clinical data.
///
/// n subjects with an even class split; class 0 draws per-ROI FA samples from a truncated
/// normal centered at 0.5, class 1 at 0.5 - class_shift (an FA reduction), sd = noise,
/// truncated to [0,1]. Each ROI uses a fixed 256 samples and is histogrammed with
/// roi_histogram. Identical seeds give bit-identical matrices.
FeatureMatrix synth_cohort(int n, int p, int q, double class_shift, double noise,
                           std::uint64_t seed);

/// CSV export with header `subject_id,label,f000..f{pq-1}`; values use 17 significant
/// digits so reimport is bit-exact.
void write_feature_csv(const FeatureMatrix& features, const std::string& path);
FeatureMatrix read_feature_csv(const std::string& path);

/// Cohort manifest: one `subject_id,label,fa_path,atlas_path` line per subject.
std::vector<CohortEntry> read_cohort_manifest(const std::string& path);

/// Runs subject_features over every manifest entry.
FeatureMatrix extract_cohort_features(const std::vector<CohortEntry>& cohort,
                                      const std::vector<int>& roi_ids, int q);

}  // namespace armarecon
