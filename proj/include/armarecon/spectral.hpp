#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace armarecon {

/// Rational graph filter of order K:
///   g(L) = (sum_{k=0}^{K-1} p_k L^k) / (I + sum_{k=1}^{K} q_k L^k).
struct ArmaFilterSpec {
  std::vector<double> p_coeffs;  // p_0 .. p_{K-1}
  std::vector<double> q_coeffs;  // q_1 .. q_K

  int order() const { return static_cast<int>(p_coeffs.size()); }
  /// All q_k zero: the filter degenerates to a plain polynomial (the MA part alone).
  bool is_polynomial() const;

  std::string describe() const;
};

/// Symmetric normalized Laplacian L = I - D^{-1/2} A D^{-1/2}, with D taken from A alone.
/// An isolated node keeps L_ii = 1 (its degree-0 row contributes nothing off-diagonal).
/// Eigenvalues lie in [0, 2].
Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency);

/// Exact rational filtering X = (I + sum q_k L^k)^{-1} (sum p_k L^k) H by dense LU solve.
/// `condition_out`, when given, receives the 1-norm condition estimate of the denominator;
/// an estimate above 1e12 raises a NumericError naming the spec.
Eigen::MatrixXd arma_exact_filter(const Eigen::MatrixXd& laplacian, const ArmaFilterSpec& spec,
                                  const Eigen::MatrixXd& h, double* condition_out = nullptr);

/// Scalar-weight fixed-point recursion X <- Atil X w + H v (identity activation).
/// Requires |w| < 1; converges to X* = v (I - w Atil)^{-1} H. Stops when the step
/// ||X_{t+1} - X_t||_F <= tol * ||X_t||_F, and raises a NumericError carrying the last
/// relative residual if max_iter is exhausted. Returns (X, iterations).
std::pair<Eigen::MatrixXd, int> arma_fixed_point(const Eigen::MatrixXd& atil, double w, double v,
                                                 const Eigen::MatrixXd& h, double tol,
                                                 int max_iter);

/// Scalar frequency response (sum p_k lambda^k) / (1 + sum q_k lambda^k).
/// A vanishing denominator is a pole: NumericError reporting lambda.
double frequency_response(const ArmaFilterSpec& spec, double lambda);

}  // namespace armarecon
