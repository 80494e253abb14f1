#include "armarecon/spectral.hpp"

#include <cmath>
#include <sstream>

#include "armarecon/common.hpp"

namespace armarecon {

namespace {

constexpr double kMaxCondition = 1e12;

void validate_spec(const ArmaFilterSpec& spec) {
  if (spec.p_coeffs.empty()) {
    throw ConfigError("ARMA filter spec needs order K >= 1 (p_coeffs is empty)");
  }
  if (spec.q_coeffs.size() != spec.p_coeffs.size()) {
    throw ConfigError("ARMA filter spec needs K q-coefficients (q_1..q_K); got " +
                      std::to_string(spec.q_coeffs.size()) + " for K=" + std::to_string(spec.p_coeffs.size()));
  }
  for (double c : spec.p_coeffs)
    if (!std::isfinite(c)) throw ConfigError("ARMA filter spec has a non-finite p coefficient");
  for (double c : spec.q_coeffs)
    if (!std::isfinite(c)) throw ConfigError("ARMA filter spec has a non-finite q coefficient");
}

}  // namespace

bool ArmaFilterSpec::is_polynomial() const {
  for (double c : q_coeffs)
    if (c != 0.0) return false;
  return true;
}

std::string ArmaFilterSpec::describe() const {
  std::ostringstream out;
  out << "ArmaFilterSpec{K=" << order() << ", p=(";
  for (std::size_t i = 0; i < p_coeffs.size(); ++i) out << (i ? "," : "") << p_coeffs[i];
  out << "), q=(";
  for (std::size_t i = 0; i < q_coeffs.size(); ++i) out << (i ? "," : "") << q_coeffs[i];
  out << ")}";
  return out.str();
}

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw DataError("normalized_laplacian: adjacency must be square");
  }
  const long n = adjacency.rows();
  for (long i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) {
      throw DataError("normalized_laplacian: adjacency diagonal must be zero at " + std::to_string(i));
    }
    for (long j = i + 1; j < n; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) {
        throw DataError("normalized_laplacian: adjacency is not symmetric at (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
      }
    }
  }

  // Degree 0 maps to a zero scaling so isolated nodes keep L_ii = 1.
  Eigen::VectorXd dinv_sqrt(n);
  for (long i = 0; i < n; ++i) {
    const double d = adjacency.row(i).sum();
    dinv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (adjacency(i, j) != 0.0) lap(i, j) -= dinv_sqrt[i] * adjacency(i, j) * dinv_sqrt[j];
  return lap;
}

Eigen::MatrixXd arma_exact_filter(const Eigen::MatrixXd& laplacian, const ArmaFilterSpec& spec,
                                  const Eigen::MatrixXd& h, double* condition_out) {
  validate_spec(spec);
  if (laplacian.rows() != laplacian.cols()) {
    throw DataError("arma_exact_filter: Laplacian must be square");
  }
  if (h.rows() != laplacian.rows()) {
    throw DataError("arma_exact_filter: H has " + std::to_string(h.rows()) + " rows but the Laplacian is " +
                    std::to_string(laplacian.rows()) + "x" + std::to_string(laplacian.cols()));
  }

  const long n = laplacian.rows();
  const int order = spec.order();
  Eigen::MatrixXd numerator = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd denominator = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);  // L^k, starting at k=0
  for (int k = 0; k < order; ++k) {
    numerator += spec.p_coeffs[static_cast<std::size_t>(k)] * power;
    power = power * laplacian;  // now L^{k+1}
    denominator += spec.q_coeffs[static_cast<std::size_t>(k)] * power;
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(denominator);
  const double rcond = lu.rcond();
  const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (condition_out) *condition_out = condition;
  if (!(condition < kMaxCondition)) {
    std::ostringstream msg;
    msg << "singular or near-singular ARMA denominator (condition estimate " << condition << ") for "
        << spec.describe();
    throw NumericError(msg.str());
  }
  return lu.solve(numerator * h);
}

std::pair<Eigen::MatrixXd, int> arma_fixed_point(const Eigen::MatrixXd& atil, double w, double v,
                                                 const Eigen::MatrixXd& h, double tol, int max_iter) {
  if (atil.rows() != atil.cols() || atil.rows() != h.rows()) {
    throw DataError("arma_fixed_point: operator/feature shape mismatch");
  }
  if (!(std::abs(w) < 1.0)) {
    throw ConfigError("arma_fixed_point requires |w| < 1 for contraction, got w=" + std::to_string(w));
  }
  if (max_iter < 1) {
    throw ConfigError("arma_fixed_point needs max_iter >= 1");
  }

  Eigen::MatrixXd x = v * h;
  double residual = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= max_iter; ++iter) {
    Eigen::MatrixXd next = w * (atil * x) + v * h;
    const double step = (next - x).norm();
    const double scale = x.norm();
    x = std::move(next);
    residual = scale > 0.0 ? step / scale : step;
    if (step <= tol * scale || (scale == 0.0 && step == 0.0)) {
      return {std::move(x), iter};
    }
  }
  std::ostringstream msg;
  msg << "ARMA fixed-point iteration did not converge in " << max_iter << " iterations (last relative residual "
      << residual << ")";
  throw NumericError(msg.str());
}

double frequency_response(const ArmaFilterSpec& spec, double lambda) {
  validate_spec(spec);
  double num = 0.0;
  double lambda_k = 1.0;  // lambda^k
  for (int k = 0; k < spec.order(); ++k) {
    num += spec.p_coeffs[static_cast<std::size_t>(k)] * lambda_k;
    lambda_k *= lambda;
  }
  double den = 1.0;
  lambda_k = lambda;
  for (int k = 0; k < spec.order(); ++k) {
    den += spec.q_coeffs[static_cast<std::size_t>(k)] * lambda_k;
    lambda_k *= lambda;
  }
  if (den == 0.0) {
    std::ostringstream msg;
    msg << "filter pole: denominator vanishes at lambda=" << lambda << " for " << spec.describe();
    throw NumericError(msg.str());
  }
  return num / den;
}

}  // namespace armarecon
