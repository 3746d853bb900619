#pragma once

// Element <-> trace coupling: face maps, shared trace grids, point-to-point
// interpolation, direct trace evaluation and the symmetry certificate.

#include <array>
#include <string>
#include <vector>

#include "dgsipg/mesh.hpp"

namespace dgsipg {

enum class Strategy { SharedTrace, PointToPoint };
enum class StrategyChoice { SharedTrace, P2P, P2PForced };

std::string_view to_string(Strategy s);
std::string_view to_string(StrategyChoice s);
StrategyChoice parse_strategy(std::string_view name);

/// Linear map from values on a source face grid (tensor of per-axis points,
/// axis 0 fastest) to a target face grid. Source parameters relate to
/// target parameters by src = orient(code, tgt). When every target point
/// coincides with a source point the map is a pure index map.
class FaceMap {
public:
  FaceMap() = default;
  static FaceMap build(int naxes, const std::array<std::vector<double>, 2>& src,
                       const std::array<std::vector<double>, 2>& tgt, int code, bool force_dense = false);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool is_index_map() const { return !index_.empty(); }
  bool is_identity() const;

  /// out = M in
  void apply(const double* in, double* out, CostCounter* cost = nullptr) const;
  /// out += M^T in
  void apply_transpose(const double* in, double* out, CostCounter* cost = nullptr) const;
  /// Dense copy for tests.
  Matrix dense() const;

private:
  int naxes_ = 0;
  int rows_ = 1, cols_ = 1;
  bool transpose_ = false;
  std::array<int, 2> n_{1, 1};  // source counts
  std::array<int, 2> m_{1, 1};  // target counts
  std::array<Matrix, 2> mat_;   // mat_[k]: source axis k, m_{perm k} x n_k
  std::vector<int> index_;
};

struct P2PCertificate {
  int low_side = 0;  // 0 = left, 1 = right
  bool condition1 = false;
  bool condition2 = false;
  int required_degree = 0;
  int actual_degree = 0;
  bool symmetric() const { return condition1 && condition2; }
};

struct SideSpec {
  Order order;
  QuadKind face_rule = QuadKind::GaussLobatto;
};

/// Point-to-point symmetry conditions. The side with fewer modes is the low
/// side (ties: fewer points). condition1: N_P(high) <= N_Q(low) <= N_Q(high);
/// condition2: the low side's face rule integrates degree
/// (N_P(high) - 1) + (N_P(low) - 1) + p_geom exactly.
P2PCertificate certify_p2p(const SideSpec& left, const SideSpec& right, int p_geom);

/// Evaluates an element expansion (values and physical gradients) at a
/// tensor set of points on one of its faces.
struct FaceEvaluator {
  ExpansionPtr exp;
  int face = 0;
  int npts = 0;
  BasisTables tables;
  FaceFactors geom;
};

FaceEvaluator make_face_evaluator(const Mesh& mesh, int e, ExpansionPtr exp, int face,
                                  const std::array<std::vector<double>, 2>& params,
                                  const std::array<std::vector<double>, 2>& weights);

/// u and grad u (grad[m * npts + p]) from element coefficients.
void trace_phys_eval(const FaceEvaluator& fe, const double* coeffs, double* u, double* grad,
                     CostCounter* cost = nullptr);
/// coeffs += B^T fu + sum_m (d/dx_m B)^T fg_m. Flux values carry the metric.
void trace_iproduct(const FaceEvaluator& fe, const double* fu, const double* fg, double* coeffs,
                    CostCounter* cost = nullptr);

/// Face values gathered from the element grid.
std::vector<double> gathr(const Expansion& exp, std::span<const double> phys, int face);
std::vector<double> gathr_interp(const Expansion& exp, std::span<const double> phys, int face, const FaceMap& map,
                                 CostCounter* cost = nullptr);
/// Interpolate `values` onto the local face grid with `map` and add them
/// into the element grid.
void scatr_interp(const Expansion& exp, std::span<const double> values, int face, const FaceMap& map,
                  std::span<double> phys, CostCounter* cost = nullptr);

/// Values of the element expansion at the quadrature points of a mortar
/// covering the face. Only aligned mortars (covering the whole face) are
/// supported.
std::vector<double> mortar_imprint(const Expansion& exp, std::span<const double> coeffs, int face,
                                   const QuadRule& mortar, std::array<double, 2> lo = {-1.0, -1.0},
                                   std::array<double, 2> hi = {1.0, 1.0});

// ---- discretisation ---------------------------------------------------------------

struct DiscretisationOptions {
  BasisKind basis = BasisKind::Lagrange;
  QuadKind rule = QuadKind::GaussLobatto;
  StrategyChoice strategy = StrategyChoice::P2P;
  bool force_interp = false;   // dense face maps even where an index map exists
  bool trace_iproduct = false; // build evaluators for the trace-based path
  int p_geom = 1;
  double tau_constant = 10.0;
};

struct InterfaceTrace {
  bool boundary = false;
  bool conforming = true;
  Strategy strategy = Strategy::SharedTrace;
  bool certified = false;
  P2PCertificate certificate;
  double tau = 0.0;
  int naxes = 0;
  // Shared trace grid, in left-side face parameters.
  std::array<std::vector<double>, 2> points, weights;
  int npts = 0;
  FaceFactors metric;                 // left geometry on the trace grid
  std::array<FaceMap, 2> to_trace;    // side face grid -> trace grid
  std::array<FaceMap, 2> from_other;  // other side's face grid -> this side's face grid
  std::array<FaceEvaluator, 2> eval;  // trace-based path, on each side's own face parameters
  std::array<FaceMap, 2> eval_to_trace;
};

struct Discretisation {
  const Mesh* mesh = nullptr;
  DiscretisationOptions options;
  OrderMap orders;
  std::vector<ExpansionPtr> exps;
  std::vector<ElementFactors> factors;
  std::vector<int> offsets;  // coefficient offsets, size nelem + 1
  std::vector<InterfaceTrace> traces;

  int ndof() const { return offsets.back(); }
};

ExpansionKey element_key(Shape shape, Order order, const DiscretisationOptions& opt);
/// Face rule kind of an element expansion on face f.
QuadKind face_rule(const Expansion& exp, int face);

Discretisation discretise(const Mesh& mesh, const OrderMap& orders, const DiscretisationOptions& opt);

/// One line per non-conforming interface: orders, degrees and verdict.
std::string certificate_report(const Discretisation& disc);

}  // namespace dgsipg
