#pragma once

// One-dimensional polynomial machinery: Jacobi polynomials, Gauss-type
// quadrature, Lagrange interpolation and collocation differentiation.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dgsipg {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix. Basis tables are stored with one row per point
/// and one column per mode.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class QuadKind {
  GaussLegendre,
  GaussRadauM,  // includes -1, excludes +1
  GaussLobatto,
};

std::string_view to_string(QuadKind kind);
QuadKind parse_quad_kind(std::string_view name);

struct QuadRule {
  QuadKind kind = QuadKind::GaussLegendre;
  int n = 0;
  std::vector<double> points;
  std::vector<double> weights;

  /// Highest monomial degree integrated exactly.
  int exactness() const;
  bool has_left_endpoint() const { return kind != QuadKind::GaussLegendre; }
  bool has_right_endpoint() const { return kind == QuadKind::GaussLobatto; }
};

/// Degree of exactness of an n-point rule of the given kind.
int exactness_degree(QuadKind kind, int n);

struct JacobiValue {
  double value;
  double derivative;
};

/// P_n^{(alpha,beta)}(x) and its derivative by the three-term recurrence.
JacobiValue jacobi_eval(double alpha, double beta, int n, double x);

/// Zeros of P_n^{(alpha,beta)}, ascending. Golub-Welsch eigenvalues of the
/// Jacobi matrix followed by a Newton polish.
std::vector<double> jacobi_zeros(double alpha, double beta, int n);

QuadRule quad_rule(QuadKind kind, int n);

/// k x m matrix whose row r holds the Lagrange cardinal functions of `from`
/// evaluated at to[r].
Matrix lagrange_interp_matrix(std::span<const double> from, std::span<const double> to);

/// Derivatives of the Lagrange cardinal functions of `nodes` at `to`.
Matrix lagrange_deriv_matrix(std::span<const double> nodes, std::span<const double> to);

/// Collocation differentiation matrix on `points`.
Matrix diff_matrix(std::span<const double> points);

}  // namespace dgsipg
