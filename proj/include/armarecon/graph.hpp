#pragma once

#include <Eigen/Dense>
#include <string>

#include "armarecon/features.hpp"

namespace armarecon {

enum class Similarity { kCosine, kDot };

Similarity similarity_from_string(const std::string& name);
std::string to_string(Similarity s);

/// Subject-level graph: binary symmetric adjacency A (zero diagonal), degrees of
/// A_hat = A + I, and the normalized propagation operator
/// Atil = D^{-1/2} (A + I) D^{-1/2} with D_ii = 1 + sum_j A_ij.
struct SubjectGraph {
  int n = 0;
  Eigen::MatrixXd adjacency;   // n x n, entries in {0, 1}
  Eigen::VectorXi degree;      // D_ii of A_hat (>= 1 thanks to the self-loop)
  Eigen::MatrixXd normalized;  // Atil
  // Construction provenance, echoed into run manifests.
  double alpha = 0.0;
  Similarity similarity = Similarity::kCosine;

  long edge_count() const;
};

/// u.v / (|u||v|). A zero vector yields 0 with a warning; a length mismatch is an error.
double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Thresholded similarity graph over feature rows: A_ij = 1 iff i != j and
/// sim(row_i, row_j) > alpha (strict, so ties at alpha drop the edge). The graph may be
/// disconnected; self-loops in Atil keep propagation well-defined.
SubjectGraph build_adjacency(const FeatureMatrix& features, double alpha,
                             Similarity similarity = Similarity::kCosine);

/// Same, from a raw row-per-subject matrix.
SubjectGraph build_adjacency(const Eigen::MatrixXd& rows, double alpha,
                             Similarity similarity = Similarity::kCosine);

/// D^{-1/2} (A + I) D^{-1/2} for a binary symmetric zero-diagonal A.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency);

/// Edge-list export: sidecar line `# n=<n> alpha=<alpha>`, then one `i j` line per edge
/// (0-based, i < j).
void write_edge_list(const SubjectGraph& graph, const std::string& path);

}  // namespace armarecon
