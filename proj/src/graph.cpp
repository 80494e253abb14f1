#include "armarecon/graph.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "armarecon/common.hpp"

namespace armarecon {

namespace {

void require_symmetric_hollow(const Eigen::MatrixXd& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw DataError(std::string(who) + ": adjacency must be square, got " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()));
  }
  for (long i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0) {
      throw DataError(std::string(who) + ": adjacency diagonal must be zero (A(" + std::to_string(i) + "," +
                      std::to_string(i) + ") = " + std::to_string(a(i, i)) + ")");
    }
    for (long j = i + 1; j < a.cols(); ++j) {
      if (a(i, j) != a(j, i)) {
        throw DataError(std::string(who) + ": adjacency is not symmetric at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

Similarity similarity_from_string(const std::string& name) {
  if (name == "cosine") return Similarity::kCosine;
  if (name == "dot") return Similarity::kDot;
  throw ConfigError("unknown similarity kind '" + name + "' (expected cosine or dot)");
}

std::string to_string(Similarity s) { return s == Similarity::kCosine ? "cosine" : "dot"; }

long SubjectGraph::edge_count() const {
  long edges = 0;
  for (long i = 0; i < adjacency.rows(); ++i)
    for (long j = i + 1; j < adjacency.cols(); ++j)
      if (adjacency(i, j) != 0.0) ++edges;
  return edges;
}

double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  if (u.size() != v.size()) {
    throw DataError("cosine_similarity: length mismatch (" + std::to_string(u.size()) + " vs " +
                    std::to_string(v.size()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    warn("cosine_similarity: zero vector, returning similarity 0");
    return 0.0;
  }
  return u.dot(v) / (nu * nv);
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency) {
  require_symmetric_hollow(adjacency, "normalize_adjacency");
  const long n = adjacency.rows();
  Eigen::VectorXd dinv_sqrt(n);
  for (long i = 0; i < n; ++i) {
    const double d = 1.0 + adjacency.row(i).sum();  // self-loop keeps d >= 1
    dinv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Eigen::MatrixXd atil(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      const double ahat = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      atil(i, j) = dinv_sqrt[i] * ahat * dinv_sqrt[j];
    }
  }
  return atil;
}

SubjectGraph build_adjacency(const Eigen::MatrixXd& rows, double alpha, Similarity similarity) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("edge threshold alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
  const long n = rows.rows();
  if (n < 2) {
    throw DataError("graph construction needs at least 2 subjects, got " + std::to_string(n));
  }

  SubjectGraph g;
  g.n = static_cast<int>(n);
  g.alpha = alpha;
  g.similarity = similarity;
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      const double sim = similarity == Similarity::kCosine
                             ? cosine_similarity(rows.row(i).transpose(), rows.row(j).transpose())
                             : rows.row(i).dot(rows.row(j));
      if (sim > alpha) {
        g.adjacency(i, j) = 1.0;
        g.adjacency(j, i) = 1.0;
      }
    }
  }

  g.degree.resize(n);
  for (long i = 0; i < n; ++i) g.degree[i] = 1 + static_cast<int>(g.adjacency.row(i).sum());
  g.normalized = normalize_adjacency(g.adjacency);
  return g;
}

SubjectGraph build_adjacency(const FeatureMatrix& features, double alpha, Similarity similarity) {
  return build_adjacency(features.data, alpha, similarity);
}

void write_edge_list(const SubjectGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  char header[96];
  std::snprintf(header, sizeof(header), "# n=%d alpha=%.17g\n", graph.n, graph.alpha);
  out << header;
  for (long i = 0; i < graph.adjacency.rows(); ++i)
    for (long j = i + 1; j < graph.adjacency.cols(); ++j)
      if (graph.adjacency(i, j) != 0.0) out << i << " " << j << "\n";
  if (!out) throw DataError("I/O error while writing '" + path + "'");
}

}  // namespace armarecon
