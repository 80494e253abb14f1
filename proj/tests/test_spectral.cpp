#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "armarecon/common.hpp"
#include "armarecon/spectral.hpp"
#include "support/oracles.hpp"

using namespace armarecon;

namespace {

Eigen::MatrixXd k2_adjacency() {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  return a;
}

Eigen::MatrixXd path3_adjacency() {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1.0;
  a(1, 2) = a(2, 1) = 1.0;
  return a;
}

}  // namespace

TEST_CASE("normalized Laplacian closed forms") {
  Eigen::MatrixXd lap = normalized_laplacian(k2_adjacency());
  CHECK(lap(0, 0) == 1.0);
  CHECK(lap(1, 1) == 1.0);
  CHECK(lap(0, 1) == -1.0);
  CHECK(lap(1, 0) == -1.0);

  CHECK((normalized_laplacian(Eigen::MatrixXd::Zero(3, 3)) - Eigen::MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("Laplacian eigenvalues lie in [0, 2] on random graphs") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::MatrixXd a = oracles::random_adjacency(8, 0.4, rng);
    Eigen::MatrixXd lap = normalized_laplacian(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK(eig.eigenvalues().maxCoeff() <= 2.0 + 1e-10);
  }
}

TEST_CASE("identity filter spec returns H unchanged") {
  SplitMix64 rng(43);
  Eigen::MatrixXd lap = normalized_laplacian(oracles::random_adjacency(6, 0.5, rng));
  Eigen::MatrixXd h = oracles::random_matrix(6, 4, rng);
  ArmaFilterSpec spec{{1.0, 0.0}, {0.0, 0.0}};
  CHECK(spec.is_polynomial());
  Eigen::MatrixXd x = arma_exact_filter(lap, spec, h);
  CHECK((x - h).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("all-zero q reduces the rational filter to the polynomial route") {
  SplitMix64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    const long n = 3 + static_cast<long>(rng.next_below(10));
    Eigen::MatrixXd lap = normalized_laplacian(oracles::random_adjacency(n, 0.5, rng));
    const int order = 1 + static_cast<int>(rng.next_below(4));
    ArmaFilterSpec spec;
    for (int k = 0; k < order; ++k) {
      spec.p_coeffs.push_back(rng.next_uniform(-1.0, 1.0));
      spec.q_coeffs.push_back(0.0);
    }
    Eigen::MatrixXd h = oracles::random_matrix(n, 3, rng);
    Eigen::MatrixXd filtered = arma_exact_filter(lap, spec, h);
    Eigen::MatrixXd direct = oracles::polynomial_filter_horner(lap, spec.p_coeffs, h);
    CHECK((filtered - direct).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("3-node path with K=1 matches an explicit Cramer solve") {
  Eigen::MatrixXd lap = normalized_laplacian(path3_adjacency());
  ArmaFilterSpec spec{{1.0}, {0.5}};
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 1);
  h(0, 0) = 1.0;

  double cond = 0.0;
  Eigen::MatrixXd x = arma_exact_filter(lap, spec, h, &cond);
  CHECK(cond > 0.0);

  // Oracle: Cramer's rule on M = I + 0.5 L, solved by hand-coded determinants.
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3) + 0.5 * lap;
  auto det3 = [](const Eigen::MatrixXd& a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  };
  const double det = det3(m);
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd mi = m;
    mi.col(i) = h.col(0);
    CHECK(x(i, 0) == doctest::Approx(det3(mi) / det).epsilon(1e-12));
  }
}

TEST_CASE("a singular denominator raises a NumericError naming the spec") {
  Eigen::MatrixXd lap = normalized_laplacian(k2_adjacency());  // eigenvalues 0 and 2
  ArmaFilterSpec spec{{1.0}, {-0.5}};                          // 1 - 0.5*2 = 0
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_WITH_AS(arma_exact_filter(lap, spec, h), doctest::Contains("ArmaFilterSpec"),
                       NumericError);
}

TEST_CASE("rational filtering is linear in H") {
  SplitMix64 rng(53);
  Eigen::MatrixXd lap = normalized_laplacian(oracles::random_adjacency(7, 0.4, rng));
  ArmaFilterSpec spec{{0.6, -0.3}, {0.2, 0.1}};
  Eigen::MatrixXd h1 = oracles::random_matrix(7, 3, rng);
  Eigen::MatrixXd h2 = oracles::random_matrix(7, 3, rng);
  const double a = 1.7, b = -0.4;
  Eigen::MatrixXd lhs = arma_exact_filter(lap, spec, a * h1 + b * h2);
  Eigen::MatrixXd rhs = a * arma_exact_filter(lap, spec, h1) + b * arma_exact_filter(lap, spec, h2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fixed point with w=0 converges in one step to v*H") {
  Eigen::MatrixXd atil = Eigen::MatrixXd::Identity(3, 3);
  SplitMix64 rng(59);
  Eigen::MatrixXd h = oracles::random_matrix(3, 2, rng);
  auto [x, iters] = arma_fixed_point(atil, 0.0, 1.0, h, 1e-12, 100);
  CHECK(iters == 1);
  CHECK((x - h).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed point on K2 matches the dense solve") {
  Eigen::MatrixXd atil(2, 2);
  atil << 0.5, 0.5, 0.5, 0.5;
  Eigen::MatrixXd h(2, 1);
  h << 1, 0;
  auto [x, iters] = arma_fixed_point(atil, 0.5, 1.0, h, 1e-14, 10000);
  Eigen::MatrixXd expected = oracles::fixed_point_closed_form(atil, 0.5, 1.0, h);
  CHECK((x - expected).norm() < 1e-10);
  CHECK(iters > 1);
}

TEST_CASE("fixed point matches the closed form on a random 10-node graph") {
  SplitMix64 rng(61);
  Eigen::MatrixXd a = oracles::random_adjacency(10, 0.4, rng);
  Eigen::MatrixXd atil = a;  // normalize via the graph module's convention
  {
    Eigen::MatrixXd ahat = a + Eigen::MatrixXd::Identity(10, 10);
    Eigen::VectorXd d = ahat.rowwise().sum();
    Eigen::MatrixXd dinv = d.cwiseSqrt().cwiseInverse().asDiagonal();
    atil = dinv * ahat * dinv;
  }
  Eigen::MatrixXd h = oracles::random_matrix(10, 4, rng);
  auto [x, iters] = arma_fixed_point(atil, 0.9, 2.0, h, 1e-13, 100000);
  Eigen::MatrixXd expected = oracles::fixed_point_closed_form(atil, 0.9, 2.0, h);
  CHECK((x - expected).norm() / expected.norm() < 1e-8);
}

TEST_CASE("fixed point reports non-convergence with the last residual") {
  Eigen::MatrixXd atil(2, 2);
  atil << 0.5, 0.5, 0.5, 0.5;
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_WITH_AS(arma_fixed_point(atil, 0.9, 1.0, h, 1e-15, 2),
                       doctest::Contains("did not converge"), NumericError);
  CHECK_THROWS_AS(arma_fixed_point(atil, 1.0, 1.0, h, 1e-10, 100), ConfigError);
}

TEST_CASE("frequency response closed forms") {
  ArmaFilterSpec spec{{0.7, -0.2, 0.05}, {0.3, 0.1, -0.05}};
  CHECK(frequency_response(spec, 0.0) == 0.7);

  ArmaFilterSpec simple{{1.0}, {1.0}};
  CHECK(frequency_response(simple, 1.0) == 0.5);

  ArmaFilterSpec pole{{1.0}, {-0.5}};
  CHECK_THROWS_WITH_AS(frequency_response(pole, 2.0), doctest::Contains("pole"), NumericError);
}

TEST_CASE("matrix filtering commutes with the scalar response through the eigenbasis") {
  SplitMix64 rng(67);
  for (int trial = 0; trial < 4; ++trial) {
    const long n = 5 + static_cast<long>(rng.next_below(12));  // <= 16
    Eigen::MatrixXd lap = normalized_laplacian(oracles::random_adjacency(n, 0.4, rng));
    ArmaFilterSpec spec{{0.8, 0.1}, {0.25, 0.05}};
    Eigen::MatrixXd h = oracles::random_matrix(n, 3, rng);

    Eigen::MatrixXd filtered = arma_exact_filter(lap, spec, h);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    Eigen::VectorXd response(n);
    for (long i = 0; i < n; ++i) response[i] = frequency_response(spec, eig.eigenvalues()[i]);
    Eigen::MatrixXd via_eigen =
        eig.eigenvectors() * response.asDiagonal() * eig.eigenvectors().transpose() * h;
    CHECK((filtered - via_eigen).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("spec validation rejects malformed coefficient sets") {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(2, 1);
  CHECK_THROWS_AS(arma_exact_filter(lap, ArmaFilterSpec{{}, {}}, h), ConfigError);
  CHECK_THROWS_AS(arma_exact_filter(lap, ArmaFilterSpec{{1.0}, {0.1, 0.2}}, h), ConfigError);
}
