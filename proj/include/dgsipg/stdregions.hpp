#pragma once

// Reference-element expansions and sum-factorised kernels.
//
// Tensor shapes (Seg, Quad, Hex) use the same 1D basis in every direction.
// Triangles use a generalized tensor basis phi_ij(eta1, eta2) =
// a_i(eta1) b_ij(eta2) in collapsed coordinates, with modes ordered
// lexicographically in (i, j), j <= N_P - 1 - i.
//
// Physical data is always stored on a full tensor grid, direction 0 fastest.
// Batched kernels operate on W elements interleaved point-by-point: value q
// of lane l lives at index q * W + l.

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dgsipg/polylib.hpp"

#ifndef DGSIPG_BATCH_WIDTH
#define DGSIPG_BATCH_WIDTH 4
#endif

namespace dgsipg {

inline constexpr int kBatchWidth = DGSIPG_BATCH_WIDTH;

enum class Shape { Seg, Quad, Tri, Hex };
enum class BasisKind { ModifiedModal, Orthogonal, Lagrange };

std::string_view to_string(Shape shape);
std::string_view to_string(BasisKind kind);
Shape parse_shape(std::string_view name);
BasisKind parse_basis(std::string_view name);

int shape_dim(Shape shape);
int shape_num_faces(Shape shape);
int shape_num_vertices(Shape shape);
/// Reference coordinates xi of the shape's vertices.
std::vector<std::array<double, 3>> reference_vertices(Shape shape);
/// Local vertex indices of a face, ordered so that the first vertex sits at
/// face parameter (-1, -1) and the following ones advance along face axis 0
/// then axis 1 (lexicographic), matching face_point_xi.
std::vector<int> face_vertices(Shape shape, int face);

/// Multiply-add counter filled by the kernels (per element, not per lane).
struct CostCounter {
  std::int64_t madds = 0;
};

class Basis1D {
public:
  /// `nodes` selects the Lagrange node family; ignored for modal kinds.
  Basis1D(BasisKind kind, int nmodes, QuadKind nodes = QuadKind::GaussLobatto);

  BasisKind kind() const { return kind_; }
  int nmodes() const { return nmodes_; }
  const std::vector<double>& nodes() const { return nodes_; }

  Matrix values(std::span<const double> x) const;
  Matrix derivatives(std::span<const double> x) const;

  struct Table {
    Matrix V;   // psi_i(x_q), N_Q x N_P
    Matrix DV;  // psi_i'(x_q)
  };
  Table tabulate(const QuadRule& rule) const;

private:
  BasisKind kind_;
  int nmodes_;
  std::vector<double> nodes_;
};

/// Triangle modes (i, j) in lexicographic order.
struct TriModeIndex {
  explicit TriModeIndex(int nmodes);
  int nmodes;
  std::vector<int> offset;  // offset[i] = first index of row i
  int operator()(int i, int j) const { return offset[i] + j; }
  int row_length(int i) const { return nmodes - i; }
  int size() const { return nmodes * (nmodes + 1) / 2; }
};

/// Duffy collapse xi -> eta. Triangle only; other shapes pass through.
/// At the singular vertex xi2 = 1 throws unless `limit` is set, in which
/// case eta1 := -1.
std::array<double, 3> duffy_collapse(Shape shape, std::array<double, 3> xi, bool limit = false);
std::array<double, 3> duffy_expand(Shape shape, std::array<double, 3> eta);

/// Basis values and derivatives tabulated on a tensor point set (per
/// direction), in the layout the sum-factorised kernels consume.
struct BasisTables {
  Shape shape = Shape::Seg;
  BasisKind basis = BasisKind::Orthogonal;
  int dim = 1;
  int nmodes = 0;
  int ncoeffs = 0;
  std::array<int, 3> npts{1, 1, 1};
  std::array<std::vector<double>, 3> points;
  // Tensor: val[k] is npts[k] x nmodes. Triangle: val[0] = a_i (npts0 x
  // nmodes), val[1] = b_ij (npts1 x ncoeffs).
  std::array<Matrix, 3> val, der;
  // Same tables transposed, used by the inner-product kernels.
  std::array<Matrix, 3> val_t, der_t;
  // Triangle ModifiedModal: vertex mode (0,1) also multiplies a_1.
  bool tri_correction = false;
  std::vector<double> corr_val, corr_der;  // b_01 at direction-1 points
  // Triangle Lagrange: modal coefficients = nodal_to_modal * nodal.
  Matrix nodal_to_modal;

  int size() const { return npts[0] * npts[1] * npts[2]; }
};

BasisTables tabulate_basis(Shape shape, BasisKind basis, int nmodes, const std::array<QuadKind, 3>& node_families,
                           const std::array<std::vector<double>, 3>& points);

/// Triangle Lagrange nodes (equispaced), in collapsed coordinates, mode order.
std::vector<std::array<double, 2>> tri_lagrange_nodes(int nmodes);

// ---- sum-factorisation primitives -----------------------------------------

/// Contract direction `dir` of a tensor array with dims `dims` by the
/// row-major matrix M (rows x dims[dir]); on return dims[dir] == rows.
template <int W>
void contract(const Matrix& M, std::array<int, 3>& dims, int dir, const double* in, double* out,
              CostCounter* cost = nullptr);

/// u = B c (deriv_dir < 0) or du/deta_k (deriv_dir = k) on the table points.
/// `work` must hold at least evaluate_workspace(tables) * W doubles.
template <int W>
void evaluate(const BasisTables& t, int deriv_dir, const double* coeffs, double* out, double* work,
              CostCounter* cost = nullptr);

/// Transpose of evaluate: coeffs (+)= B^T in.
template <int W>
void evaluate_transpose(const BasisTables& t, int deriv_dir, const double* in, double* coeffs, double* work,
                        bool accumulate, CostCounter* cost = nullptr);

std::size_t evaluate_workspace(const BasisTables& t);

// ---- expansions ------------------------------------------------------------

struct ExpansionKey {
  Shape shape = Shape::Quad;
  BasisKind basis = BasisKind::ModifiedModal;
  int nmodes = 2;
  int npoints = 2;
  std::array<QuadKind, 3> rules{QuadKind::GaussLobatto, QuadKind::GaussLobatto, QuadKind::GaussLobatto};
  // Add zero-weight endpoints where a face would otherwise not be part of
  // the physical grid.
  bool augmented = false;

  auto operator<=>(const ExpansionKey&) const = default;
};

/// Default per-direction rules for a shape: triangles get Gauss-Legendre in
/// both directions; GLL on a triangle becomes GLL x GR so that the
/// collapsed vertex is never a quadrature point.
std::array<QuadKind, 3> default_rules(Shape shape, QuadKind rule);

struct FaceGrid {
  int normal_dir = 0;
  double fixed_value = -1.0;
  int fixed_index = -1;  // grid index in normal_dir, -1 if not on the grid
  int naxes = 0;
  std::array<int, 2> tangential_dir{-1, -1};
  std::array<int, 2> n{1, 1};
  std::array<std::vector<double>, 2> points, weights;
  std::vector<int> phys_index;  // a + n0 * b -> grid point index

  int size() const { return n[0] * n[1]; }
  bool gatherable() const { return fixed_index >= 0; }
};

class Expansion {
public:
  explicit Expansion(const ExpansionKey& key);

  const ExpansionKey& key() const { return key_; }
  Shape shape() const { return key_.shape; }
  int dim() const { return dim_; }
  int nmodes() const { return key_.nmodes; }
  int ncoeffs() const { return tables_.ncoeffs; }
  int nphys() const { return tables_.size(); }
  const std::array<int, 3>& grid_dims() const { return tables_.npts; }
  const std::vector<double>& grid_points(int dir) const { return tables_.points[dir]; }
  /// Quadrature weights on the grid; zero on augmented points.
  const std::vector<double>& grid_weights(int dir) const { return weights_[dir]; }
  /// Tensor product of grid weights (no Jacobian).
  const std::vector<double>& weights() const { return tensor_weights_; }
  const QuadRule& rule(int dir) const { return rules_[dir]; }

  const BasisTables& tables() const { return tables_; }
  const Matrix& diff(int dir) const { return diff_[dir]; }
  const Matrix& diff_t(int dir) const { return diff_t_[dir]; }

  int num_faces() const { return static_cast<int>(faces_.size()); }
  const FaceGrid& face(int f) const { return faces_[f]; }

  bool has_boundary_interior() const { return has_bi_; }
  /// Modes that do not vanish on face f. Throws without B/I decomposition.
  const std::vector<int>& boundary_modes(int f) const;

  /// Collapsed reference coordinates of grid point q.
  std::array<double, 3> grid_eta(int q) const;
  /// Collapsed reference coordinates of a face point with face parameters t.
  std::array<double, 3> face_eta(int f, std::array<double, 2> t) const;

  /// Basis tables at an arbitrary tensor point set in collapsed coordinates.
  BasisTables tabulate(const std::array<std::vector<double>, 3>& points) const;
  std::size_t workspace() const { return workspace_; }

private:
  ExpansionKey key_;
  int dim_;
  std::array<QuadRule, 3> rules_;
  std::array<std::vector<double>, 3> weights_;
  std::vector<double> tensor_weights_;
  BasisTables tables_;
  std::array<Matrix, 3> diff_, diff_t_;
  std::vector<FaceGrid> faces_;
  bool has_bi_ = false;
  std::vector<std::vector<int>> boundary_modes_;
  std::size_t workspace_ = 0;
};

using ExpansionPtr = std::shared_ptr<const Expansion>;

/// Shared cache of immutable expansions.
ExpansionPtr get_expansion(const ExpansionKey& key);

// ---- single-element operators ---------------------------------------------

std::vector<double> bwd_trans(const Expansion& exp, std::span<const double> coeffs, CostCounter* cost = nullptr);

/// coeffs_i = sum_q phi_i(xi_q) phys_q metric_q. `metric` holds quadrature
/// weight times Jacobian per grid point.
std::vector<double> iproduct(const Expansion& exp, std::span<const double> phys, std::span<const double> metric,
                             CostCounter* cost = nullptr);

/// Collocation derivatives along each tensor (collapsed) direction.
std::vector<std::vector<double>> phys_deriv(const Expansion& exp, std::span<const double> phys,
                                            CostCounter* cost = nullptr);

/// Values on the quadrature points of face f using only boundary modes.
std::vector<double> boundary_bwd_trans(const Expansion& exp, std::span<const double> coeffs, int face,
                                       CostCounter* cost = nullptr);

// ---- batched operators -----------------------------------------------------

template <int W>
void bwd_trans_batch(const Expansion& exp, const double* coeffs, double* phys, double* work);
template <int W>
void iproduct_batch(const Expansion& exp, const double* phys_times_metric, double* coeffs, double* work);
template <int W>
void phys_deriv_batch(const Expansion& exp, int dir, const double* phys, double* dphys);

/// Interleave `nelem` element arrays of `stride` values into lane-major
/// batches of width W. Ragged final batches repeat the last element.
std::vector<double> interleave(std::span<const double> data, int nelem, int stride, int width);
/// Inverse of interleave; padded lanes are dropped.
std::vector<double> deinterleave(std::span<const double> data, int nelem, int stride, int width);

}  // namespace dgsipg
