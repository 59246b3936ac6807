#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "mqs/sparse.hpp"
#include "support/oracles.hpp"

using namespace mqs;

TEST_CASE("triplet assembly sums duplicates and sorts columns") {
  auto m = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 0.5}, {0, 0, -1.0}});
  CHECK(m.nnz() == 3);
  CHECK(m.coeff(0, 0) == -1.0);
  CHECK(m.coeff(0, 1) == 2.0);
  CHECK(m.coeff(1, 2) == 1.5);
  CHECK(m.coeff(1, 0) == 0.0);
  CHECK_THROWS(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}));
}

TEST_CASE("multiply matches a dense reference") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int n = 17;
  std::vector<Triplet> trips;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((i + 2 * j) % 3 == 0) trips.push_back({i, j, dist(rng)});
  auto a = SparseMatrix::from_triplets(n, n, trips);
  const auto dense = oracle::dense_from_sparse(a);
  Vector x(n);
  for (double& v : x) v = dist(rng);
  const Vector y = a.multiply(x);
  const Vector yt = a.multiply_transpose(x);
  for (int i = 0; i < n; ++i) {
    double want = 0.0, want_t = 0.0;
    for (int j = 0; j < n; ++j) {
      want += dense[i * n + j] * x[j];
      want_t += dense[j * n + i] * x[j];
    }
    CHECK(y[i] == doctest::Approx(want).epsilon(1e-13));
    CHECK(yt[i] == doctest::Approx(want_t).epsilon(1e-13));
  }
}

TEST_CASE("pcg solves the identity in one iteration") {
  auto a = SparseMatrix::identity(3);
  auto res = pcg_jacobi(a, {1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
  CHECK(res.stats.converged);
  CHECK(res.stats.iterations == 1);
  CHECK(res.x[0] == doctest::Approx(1.0));
  CHECK(res.x[1] == doctest::Approx(2.0));
  CHECK(res.x[2] == doctest::Approx(3.0));
}

TEST_CASE("pcg solves a diagonal system") {
  auto a = SparseMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 5.0}});
  auto res = pcg_jacobi(a, {1.0, 2.0, 5.0}, {0.0, 0.0, 0.0});
  CHECK(res.stats.converged);
  for (double v : res.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pcg handles a singular range-compatible system") {
  // kernel is span(1,1); the first search direction is proportional to b, so
  // the solve is exact after a single step
  auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}});
  auto res = pcg_jacobi(a, {1.0, -1.0}, {0.0, 0.0});
  CHECK(res.stats.converged);
  CHECK(res.stats.iterations == 1);
  CHECK(res.x[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(res.x[1] == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("pcg rejects non-positive diagonals on populated rows") {
  auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, -1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
  CHECK_THROWS_AS(pcg_jacobi(a, {1.0, 1.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("pcg reports breakdown on an indefinite operator instead of looping") {
  // diagonal is positive but the matrix is indefinite
  auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 3.0}, {1, 0, 3.0}, {1, 1, 1.0}});
  PcgOptions opts;
  opts.max_iter = 50;
  auto res = pcg_jacobi(a, {1.0, 0.0}, {0.0, 0.0}, opts);
  CHECK(!res.stats.converged);
}

TEST_CASE("kernel component of the pcg increment stays negligible on constructed singular systems") {
  // Laplacian of a cycle: constant diagonal, kernel = constants
  const int n = 24;
  std::vector<Triplet> trips;
  for (int i = 0; i < n; ++i) {
    trips.push_back({i, i, 2.0});
    trips.push_back({i, (i + 1) % n, -1.0});
    trips.push_back({i, (i + n - 1) % n, -1.0});
  }
  auto a = SparseMatrix::from_triplets(n, n, trips);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Vector y(n);
    for (double& v : y) v = dist(rng);
    const Vector b = a.multiply(y);  // range-compatible by construction
    auto res = pcg_jacobi(a, b, Vector(n, 0.0));
    CHECK(res.stats.converged);
    double kernel_component = 0.0;
    for (double v : res.x) kernel_component += v / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(kernel_component) <= 1e-10);
    const Vector r = a.multiply(res.x);
    Vector diff = r;
    axpy(-1.0, b, diff);
    CHECK(norm2(diff) <= 1e-9 * norm2(b));
  }
}

TEST_CASE("conjugate gradient error decreases monotonically in the operator norm") {
  const int n = 30;
  std::vector<double> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = 1.0 + 9.0 * i / (n - 1);
  const auto dense = oracle::symmetric_with_spectrum(eigs, 42);
  auto a = oracle::sparse_from_dense(dense, n);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector b(n);
  for (double& v : b) v = dist(rng);
  const Vector x_star = oracle::dense_solve(dense, b);

  auto energy_error = [&](const Vector& x) {
    Vector e = x;
    axpy(-1.0, x_star, e);
    return std::sqrt(std::max(a.bilinear(e, e), 0.0));
  };
  double prev = energy_error(Vector(n, 0.0));
  for (int k = 1; k <= 20; ++k) {
    PcgOptions opts;
    opts.max_iter = k;
    opts.rel_tol = 0.0;  // force exactly k iterations
    auto res = pcg_jacobi(a, b, Vector(n, 0.0), opts);
    const double err = energy_error(res.x);
    CHECK(err <= prev * (1.0 + 1e-12));
    prev = err;
  }
}

TEST_CASE("envelope cholesky solves reference systems") {
  SUBCASE("diagonal") {
    auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {1, 1, 9.0}});
    EnvelopeCholesky f(a);
    const Vector x = f.solve({4.0, 18.0});
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("2x2 closed form") {
    auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
    EnvelopeCholesky f(a);
    const Vector x = f.solve({1.0, 2.0});
    CHECK(x[0] == doctest::Approx(1.0 / 11.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(7.0 / 11.0).epsilon(1e-14));
  }
  SUBCASE("zero right-hand side") {
    auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {1, 1, 9.0}});
    EnvelopeCholesky f(a);
    const Vector x = f.solve({0.0, 0.0});
    CHECK(x[0] == 0.0);
    CHECK(x[1] == 0.0);
  }
}

TEST_CASE("envelope cholesky achieves direct-solver accuracy on random SPD systems") {
  const int n = 60;
  std::vector<double> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = 1.0 + 3.0 * i / (n - 1);
  const auto dense = oracle::symmetric_with_spectrum(eigs, 99);
  auto a = oracle::sparse_from_dense(dense, n);
  EnvelopeCholesky f(a);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector b(n);
  for (double& v : b) v = dist(rng);
  const Vector x = f.solve(b);
  Vector r = a.multiply(x);
  axpy(-1.0, b, r);
  CHECK(norm2(r) <= 1e-12 * norm2(b));
}

TEST_CASE("envelope cholesky rejects indefinite matrices naming the pivot") {
  auto a = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 3.0}, {1, 0, 3.0}, {1, 1, 1.0}});
  CHECK_THROWS_WITH_AS(EnvelopeCholesky{a}, doctest::Contains("positive definiteness"), std::runtime_error);
}

TEST_CASE("power iteration finds dominant eigenvalues") {
  SUBCASE("diagonal spectrum") {
    auto a = SparseMatrix::from_triplets(3, 3, {{0, 0, 1.0}, {1, 1, 2.0}, {2, 2, 5.0}});
    auto res = power_iteration_lambda_max(
        3, [&](const Vector& x, Vector& y) { a.multiply(x, y); }, random_unit_vector(3, 1));
    CHECK(res.converged);
    CHECK(res.lambda == doctest::Approx(5.0).epsilon(2e-3));
  }
  SUBCASE("zero operator") {
    auto res = power_iteration_lambda_max(
        4, [](const Vector&, Vector& y) { y.assign(4, 0.0); }, random_unit_vector(4, 2));
    CHECK(res.converged);
    CHECK(res.lambda == 0.0);
  }
  SUBCASE("known spectrum, 50x50") {
    const int n = 50;
    std::vector<double> eigs(n);
    for (int i = 0; i < n; ++i) eigs[i] = 1.0 + i;  // max = 50
    const auto dense = oracle::symmetric_with_spectrum(eigs, 3);
    auto a = oracle::sparse_from_dense(dense, n);
    PowerIterationOptions opts;
    opts.rel_tol = 1e-7;
    opts.max_iter = 5000;
    auto res = power_iteration_lambda_max(
        n, [&](const Vector& x, Vector& y) { a.multiply(x, y); }, random_unit_vector(n, 17), opts);
    CHECK(res.lambda == doctest::Approx(50.0).epsilon(1e-3));
  }
}

TEST_CASE("power iteration Rayleigh quotients increase monotonically on symmetric operators") {
  const int n = 20;
  std::vector<double> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = 0.1 + i * 0.5;
  const auto dense = oracle::symmetric_with_spectrum(eigs, 21);
  auto a = oracle::sparse_from_dense(dense, n);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PowerIterationOptions opts;
    opts.rel_tol = 1e-10;
    opts.max_iter = 400;
    auto res = power_iteration_lambda_max(
        n, [&](const Vector& x, Vector& y) { a.multiply(x, y); }, random_unit_vector(n, seed), opts);
    for (std::size_t k = 1; k < res.history.size(); ++k)
      CHECK(res.history[k] >= res.history[k - 1] - 1e-10 * std::abs(res.history[k]));
  }
}

TEST_CASE("matrix market round trip preserves matrices and vectors") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<Triplet> trips;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 7; ++j)
      if ((i * 7 + j) % 4 == 0) trips.push_back({i, j, dist(rng)});
  auto a = SparseMatrix::from_triplets(9, 7, trips);
  const std::string path = "mm_roundtrip_test.mtx";
  write_matrix_market(a, path);
  auto b = read_matrix_market(path);
  REQUIRE(b.rows() == a.rows());
  REQUIRE(b.cols() == a.cols());
  REQUIRE(b.nnz() == a.nnz());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) CHECK(b.coeff(i, j) == a.coeff(i, j));

  Vector v(13);
  for (double& x : v) x = dist(rng);
  write_matrix_market_vector(v, path);
  const Vector w = read_matrix_market_vector(path);
  REQUIRE(w.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(w[i] == v[i]);
  std::remove(path.c_str());
}
