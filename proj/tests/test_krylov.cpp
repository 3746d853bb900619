#include <random>
#include <sstream>

#include "doctest.h"
#include "dgsipg/krylov.hpp"
#include "dgsipg/polylib.hpp"
#include "oracles.hpp"

using namespace dgsipg;

namespace {

LinearOperator dense_op(const Eigen::MatrixXd& M) {
  return [M](std::span<const double> in, std::span<double> out) {
    Eigen::Map<Eigen::VectorXd>(out.data(), M.rows()) = M * Eigen::Map<const Eigen::VectorXd>(in.data(), M.cols());
  };
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  Eigen::MatrixXd G(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) G(i, j) = d(rng);
  return G * G.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

double residual(const Eigen::MatrixXd& M, const std::vector<double>& x, const std::vector<double>& b) {
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  const Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  return (bv - M * xv).norm() / bv.norm();
}

}  // namespace

TEST_CASE("identity converges in one iteration") {
  std::mt19937_64 rng(41);
  const auto b = oracle::random_vector(12, rng);
  const auto I = Eigen::MatrixXd::Identity(12, 12);
  for (const SolveResult& r : {cg(dense_op(I), b, 1e-12, 10), gmres(dense_op(I), b, 1e-12, 5, 10)}) {
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK(oracle::rel_diff(r.x, b) < 1e-14);
  }
}

TEST_CASE("cg solves SPD systems and the reported residual is honest") {
  std::mt19937_64 rng(42);
  for (int n : {5, 20, 60}) {
    const Eigen::MatrixXd M = random_spd(n, rng);
    const auto b = oracle::random_vector(n, rng);
    const SolveResult r = cg(dense_op(M), b, 1e-10, 500);
    REQUIRE(r.report.converged);
    CHECK(r.report.reason == "converged");
    CHECK(r.report.iterations <= n + 5);
    CHECK(r.report.relative_residual <= 1e-10);
    CHECK(residual(M, r.x, b) < 1e-9);
  }
}

TEST_CASE("gmres solves nonsymmetric systems with and without restarts") {
  std::mt19937_64 rng(43);
  const int n = 40;
  Eigen::MatrixXd M = random_spd(n, rng);
  std::normal_distribution<double> d;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) M(i, j) += 3.0 * d(rng);
  const auto b = oracle::random_vector(n, rng);
  for (int restart : {5, 50}) {
    const SolveResult r = gmres(dense_op(M), b, 1e-10, restart, 5000);
    REQUIRE(r.report.converged);
    CHECK(residual(M, r.x, b) <= 1.01e-10);
  }
}

TEST_CASE("solvers report breakdown and iteration limits") {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(0, 0) = 1.0;
  M(1, 1) = -1.0;
  const std::vector<double> b{0.0, 1.0};
  const SolveResult r = cg(dense_op(M), b, 1e-10, 10);
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.reason == "indefinite");

  std::mt19937_64 rng(44);
  const Eigen::MatrixXd S = random_spd(30, rng);
  const auto c = oracle::random_vector(30, rng);
  const SolveResult m = cg(dense_op(S), c, 1e-14, 2);
  CHECK_FALSE(m.report.converged);
  CHECK(m.report.reason == "maxiter");
  CHECK(m.report.iterations == 2);
  const SolveResult g = gmres(dense_op(S), c, 1e-14, 3, 4);
  CHECK_FALSE(g.report.converged);
  CHECK(g.report.reason == "maxiter");
}

TEST_CASE("probing reproduces the matrix and its block structure") {
  std::mt19937_64 rng(45);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(6, 6);
  M.topLeftCorner(3, 3) = random_spd(3, rng);
  M.bottomRightCorner(3, 3) = random_spd(3, rng);
  M(0, 5) = 0.5;
  const DenseProbe p = probe_dense(dense_op(M), 6, {0, 3, 6});
  CHECK((p.A - M).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p.nonzeros == 19);
  CHECK(p.block_nnz(0, 0) == 9);
  CHECK(p.block_nnz(0, 1) == 1);
  CHECK(p.block_nnz(1, 0) == 0);
  CHECK(p.summary().rfind("n 6 nonzeros 19 blocks 2 nonzero_blocks 3\n", 0) == 0);
  CHECK_THROWS_AS(probe_dense(dense_op(M), 6, {}, 5), Error);
}

TEST_CASE("symmetry and definiteness diagnostics") {
  Eigen::MatrixXd U(2, 2);
  U << 1.0, 2.0, 0.0, 1.0;
  // |U - U^T|_1 = 2, |U|_1 = 3
  CHECK(asymmetry_norm(U) == doctest::Approx(2.0 / 3.0));
  std::mt19937_64 rng(46);
  const Eigen::MatrixXd S = random_spd(8, rng);
  CHECK(asymmetry_norm(S) == 0.0);
  CHECK(positive_definite(S));
  CHECK_FALSE(positive_definite(-S));
  // the transposition-invariant part decides definiteness
  Eigen::MatrixXd K = S;
  K(0, 7) += 100.0;
  K(7, 0) -= 100.0;
  CHECK(positive_definite(K));
}

TEST_CASE("matrix dump round-trips through text") {
  std::mt19937_64 rng(47);
  const Eigen::MatrixXd M = random_spd(4, rng) / 3.0;
  std::istringstream in(dump_matrix(M));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    double v;
    int col = 0;
    while (ls >> v) CHECK(v == M(rows, col++));
    CHECK(col == 4);
    ++rows;
  }
  CHECK(rows == 4);
}
