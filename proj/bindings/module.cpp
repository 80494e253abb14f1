#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "armarecon/common.hpp"
#include "armarecon/config.hpp"
#include "armarecon/experiment.hpp"
#include "armarecon/features.hpp"
#include "armarecon/graph.hpp"
#include "armarecon/nifti.hpp"
#include "armarecon/nn.hpp"
#include "armarecon/spectral.hpp"

namespace py = pybind11;
using namespace armarecon;

namespace {

ArmaFilterSpec make_spec(std::vector<double> p, std::vector<double> q) {
  ArmaFilterSpec spec;
  if (q.empty()) q.assign(p.size(), 0.0);
  spec.p_coeffs = std::move(p);
  spec.q_coeffs = std::move(q);
  return spec;
}

py::dict row_to_dict(const MetricsRow& row) {
  py::dict d;
  d["acc"] = row.acc;
  d["precision"] = row.precision;
  d["recall"] = row.recall;
  d["f1"] = row.f1;
  d["auc"] = row.auc ? py::object(py::float_(*row.auc)) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ARMA rational graph filtering with reconstruction regularization: core operations";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_RuntimeError);

  py::class_<Volume>(m, "Volume")
      .def_readonly("dims", &Volume::dims)
      .def_readonly("datatype_code", &Volume::datatype_code)
      .def_readonly("scale_slope", &Volume::scale_slope)
      .def_readonly("scale_inter", &Volume::scale_inter)
      .def_readonly("voxels", &Volume::voxels)
      .def("__len__", [](const Volume& v) { return v.voxels.size(); });

  py::class_<FeatureMatrix>(m, "FeatureMatrix")
      .def_readonly("data", &FeatureMatrix::data)
      .def_readonly("labels", &FeatureMatrix::labels)
      .def_readonly("subject_ids", &FeatureMatrix::subject_ids)
      .def_readonly("roi_count", &FeatureMatrix::roi_count)
      .def_readonly("bin_count", &FeatureMatrix::bin_count);

  py::class_<SubjectGraph>(m, "SubjectGraph")
      .def_readonly("n", &SubjectGraph::n)
      .def_readonly("adjacency", &SubjectGraph::adjacency)
      .def_readonly("normalized", &SubjectGraph::normalized)
      .def_readonly("alpha", &SubjectGraph::alpha)
      .def("edge_count", &SubjectGraph::edge_count);

  m.def("load_nifti", &load_nifti, py::arg("path"));
  m.def(
      "roi_histogram",
      [](const std::vector<double>& values, int q) { return roi_histogram(values, q); },
      py::arg("values"), py::arg("q"));
  m.def(
      "subject_features",
      [](const Volume& fa, const Volume& atlas, const std::vector<int>& roi_ids, int q) {
        return concat_histograms(subject_features(fa, atlas, roi_ids, q));
      },
      py::arg("fa"), py::arg("atlas"), py::arg("roi_ids"), py::arg("q"));
  m.def("synth_cohort", &synth_cohort, py::arg("n"), py::arg("p"), py::arg("q"),
        py::arg("class_shift"), py::arg("noise"), py::arg("seed"));
  m.def("write_feature_csv", &write_feature_csv, py::arg("features"), py::arg("path"));
  m.def("read_feature_csv", &read_feature_csv, py::arg("path"));

  m.def("cosine_similarity", &cosine_similarity, py::arg("u"), py::arg("v"));
  m.def(
      "build_adjacency",
      [](const Eigen::MatrixXd& rows, double alpha, const std::string& similarity) {
        return build_adjacency(rows, alpha, similarity_from_string(similarity));
      },
      py::arg("rows"), py::arg("alpha"), py::arg("similarity") = "cosine");
  m.def("normalize_adjacency", &normalize_adjacency, py::arg("adjacency"));

  m.def("normalized_laplacian", &normalized_laplacian, py::arg("adjacency"));
  m.def(
      "arma_exact_filter",
      [](const Eigen::MatrixXd& laplacian, std::vector<double> p, std::vector<double> q,
         const Eigen::MatrixXd& h) {
        return arma_exact_filter(laplacian, make_spec(std::move(p), std::move(q)), h);
      },
      py::arg("laplacian"), py::arg("p"), py::arg("q"), py::arg("h"));
  m.def("arma_fixed_point", &arma_fixed_point, py::arg("atil"), py::arg("w"), py::arg("v"),
        py::arg("h"), py::arg("tol") = 1e-12, py::arg("max_iter") = 100000);
  m.def(
      "frequency_response",
      [](std::vector<double> p, std::vector<double> q, double lam) {
        return frequency_response(make_spec(std::move(p), std::move(q)), lam);
      },
      py::arg("p"), py::arg("q"), py::arg("lam"));

  m.def(
      "stratified_folds",
      [](const std::vector<int>& labels, double train_frac, int k, std::uint64_t seed) {
        SplitPlan plan = stratified_folds(labels, train_frac, k, seed);
        py::list folds;
        for (int f = 0; f < plan.folds; ++f) {
          py::list train, test;
          for (std::size_t i = 0; i < labels.size(); ++i) {
            train.append(static_cast<bool>(plan.train[static_cast<std::size_t>(f)][i]));
            test.append(static_cast<bool>(plan.test[static_cast<std::size_t>(f)][i]));
          }
          folds.append(py::make_tuple(train, test));
        }
        return folds;
      },
      py::arg("labels"), py::arg("train_frac"), py::arg("k"), py::arg("seed"));

  m.def(
      "binary_metrics",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         const std::vector<bool>& test_mask) {
        std::vector<std::uint8_t> mask(test_mask.begin(), test_mask.end());
        return row_to_dict(binary_metrics(scores, labels, mask));
      },
      py::arg("scores"), py::arg("labels"), py::arg("test_mask"));

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& overrides) {
        ExperimentConfig config;
        for (const auto& [key, value] : overrides) set_config_key(config, key, value);
        validate(config);
        ExperimentResult result = run_experiment(config);
        py::dict out;
        py::list per_fold;
        for (const auto& row : result.report.per_fold) per_fold.append(row_to_dict(row));
        out["per_fold"] = per_fold;
        out["mean"] = row_to_dict(result.report.mean);
        out["std"] = row_to_dict(result.report.stddev);
        out["n_subjects"] = result.features.n();
        out["graph_edges"] = result.graph.edge_count();
        return out;
      },
      py::arg("overrides") = std::map<std::string, std::string>{},
      "Run the full cross-validation protocol; overrides use the config-file key vocabulary");

  m.def("config_keys", [] { return config_keys(); });

#ifdef ARMARECON_VERSION
  m.attr("__version__") = ARMARECON_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
