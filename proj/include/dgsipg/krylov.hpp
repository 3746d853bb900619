#pragma once

// Matrix-free Krylov solvers and dense probing diagnostics.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dgsipg {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
  std::string reason;  // "converged", "maxiter" or "indefinite"
};

struct SolveResult {
  SolveReport report;
  std::vector<double> x;
};

/// Unpreconditioned CG from x = 0, stopping on ||b - Ax|| <= tol ||b||.
/// Stops on p^T A p <= 0 rather than continuing.
SolveResult cg(const LinearOperator& A, std::span<const double> b, double tol, int maxiter);

/// Restarted GMRES(m) with modified Gram-Schmidt, from x = 0.
SolveResult gmres(const LinearOperator& A, std::span<const double> b, double tol, int restart, int maxiter);

struct DenseProbe {
  Eigen::MatrixXd A;
  std::vector<int> offsets;           // block boundaries (elements), may be empty
  Eigen::MatrixXi block_nnz;          // nonzero entries per block pair
  int nonzeros = 0;
  std::string summary() const;
};

/// Column j = A e_j. Throws if n exceeds `limit`.
DenseProbe probe_dense(const LinearOperator& A, int n, std::vector<int> offsets = {}, int limit = 20000);

/// ||M - M^T||_1 / ||M||_1 with the maximum absolute column sum norm.
double asymmetry_norm(const Eigen::MatrixXd& M);

/// True if a Cholesky factorisation of the symmetric part succeeds.
bool positive_definite(const Eigen::MatrixXd& M);

/// Dense text dump, one row per line.
std::string dump_matrix(const Eigen::MatrixXd& M);

}  // namespace dgsipg
