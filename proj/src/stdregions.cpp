#include "dgsipg/stdregions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

namespace dgsipg {

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::Seg: return "seg";
    case Shape::Quad: return "quad";
    case Shape::Tri: return "tri";
    case Shape::Hex: return "hex";
  }
  return "?";
}

std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::ModifiedModal: return "modal";
    case BasisKind::Orthogonal: return "orthogonal";
    case BasisKind::Lagrange: return "lagrange";
  }
  return "?";
}

Shape parse_shape(std::string_view name) {
  if (name == "seg") return Shape::Seg;
  if (name == "quad") return Shape::Quad;
  if (name == "tri") return Shape::Tri;
  if (name == "hex") return Shape::Hex;
  throw Error("unknown shape '" + std::string(name) + "'");
}

BasisKind parse_basis(std::string_view name) {
  if (name == "modal" || name == "modified") return BasisKind::ModifiedModal;
  if (name == "orthogonal") return BasisKind::Orthogonal;
  if (name == "lagrange") return BasisKind::Lagrange;
  throw Error("unknown basis '" + std::string(name) + "'");
}

int shape_dim(Shape shape) {
  switch (shape) {
    case Shape::Seg: return 1;
    case Shape::Quad:
    case Shape::Tri: return 2;
    case Shape::Hex: return 3;
  }
  return 0;
}

int shape_num_faces(Shape shape) {
  switch (shape) {
    case Shape::Seg: return 2;
    case Shape::Quad: return 4;
    case Shape::Tri: return 3;
    case Shape::Hex: return 6;
  }
  return 0;
}

int shape_num_vertices(Shape shape) {
  switch (shape) {
    case Shape::Seg: return 2;
    case Shape::Quad: return 4;
    case Shape::Tri: return 3;
    case Shape::Hex: return 8;
  }
  return 0;
}

std::vector<std::array<double, 3>> reference_vertices(Shape shape) {
  if (shape == Shape::Tri) return {{-1.0, -1.0, 0.0}, {1.0, -1.0, 0.0}, {-1.0, 1.0, 0.0}};
  const int d = shape_dim(shape);
  std::vector<std::array<double, 3>> v(shape_num_vertices(shape), {0.0, 0.0, 0.0});
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (int k = 0; k < d; ++k) v[i][k] = ((i >> k) & 1) ? 1.0 : -1.0;
  }
  return v;
}

std::vector<int> face_vertices(Shape shape, int face) {
  if (shape == Shape::Tri) {
    static const int tri[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    return {tri[face][0], tri[face][1]};
  }
  const int axis = face / 2;
  const int side = face % 2;
  std::vector<int> out;
  for (int v = 0; v < shape_num_vertices(shape); ++v) {
    if (((v >> axis) & 1) == side) out.push_back(v);
  }
  return out;
}

// ---- Basis1D -----------------------------------------------------------------

Basis1D::Basis1D(BasisKind kind, int nmodes, QuadKind nodes) : kind_(kind), nmodes_(nmodes) {
  if (nmodes < 1 || (kind == BasisKind::ModifiedModal && nmodes < 2)) {
    throw Error("invalid number of modes " + std::to_string(nmodes) + " for " + std::string(to_string(kind)));
  }
  if (kind == BasisKind::Lagrange) nodes_ = quad_rule(nodes, nmodes).points;
}

namespace {

double modified_value(int p, int nm, double x) {
  if (p == 0) return 0.5 * (1.0 - x);
  if (p == nm - 1) return 0.5 * (1.0 + x);
  return 0.25 * (1.0 - x) * (1.0 + x) * jacobi_eval(1.0, 1.0, p - 1, x).value;
}

double modified_deriv(int p, int nm, double x) {
  if (p == 0) return -0.5;
  if (p == nm - 1) return 0.5;
  const auto j = jacobi_eval(1.0, 1.0, p - 1, x);
  return -0.5 * x * j.value + 0.25 * (1.0 - x) * (1.0 + x) * j.derivative;
}

}  // namespace

Matrix Basis1D::values(std::span<const double> x) const {
  if (kind_ == BasisKind::Lagrange) return lagrange_interp_matrix(nodes_, x);
  Matrix out(static_cast<Eigen::Index>(x.size()), nmodes_);
  for (std::size_t q = 0; q < x.size(); ++q) {
    for (int p = 0; p < nmodes_; ++p) {
      out(q, p) = kind_ == BasisKind::ModifiedModal
                      ? modified_value(p, nmodes_, x[q])
                      : std::sqrt(0.5 * (2 * p + 1)) * jacobi_eval(0.0, 0.0, p, x[q]).value;
    }
  }
  return out;
}

Matrix Basis1D::derivatives(std::span<const double> x) const {
  if (kind_ == BasisKind::Lagrange) return lagrange_deriv_matrix(nodes_, x);
  Matrix out(static_cast<Eigen::Index>(x.size()), nmodes_);
  for (std::size_t q = 0; q < x.size(); ++q) {
    for (int p = 0; p < nmodes_; ++p) {
      out(q, p) = kind_ == BasisKind::ModifiedModal
                      ? modified_deriv(p, nmodes_, x[q])
                      : std::sqrt(0.5 * (2 * p + 1)) * jacobi_eval(0.0, 0.0, p, x[q]).derivative;
    }
  }
  return out;
}

Basis1D::Table Basis1D::tabulate(const QuadRule& rule) const {
  return {values(rule.points), derivatives(rule.points)};
}

TriModeIndex::TriModeIndex(int nm) : nmodes(nm), offset(nm + 1, 0) {
  for (int i = 0; i < nm; ++i) offset[i + 1] = offset[i] + (nm - i);
}

// ---- Duffy ---------------------------------------------------------------------

std::array<double, 3> duffy_collapse(Shape shape, std::array<double, 3> xi, bool limit) {
  if (shape != Shape::Tri) return xi;
  if (xi[1] == 1.0) {
    if (!limit) throw Error("collapse evaluated at the singular vertex xi2 = 1");
    return {-1.0, 1.0, 0.0};
  }
  return {2.0 * (1.0 + xi[0]) / (1.0 - xi[1]) - 1.0, xi[1], 0.0};
}

std::array<double, 3> duffy_expand(Shape shape, std::array<double, 3> eta) {
  if (shape != Shape::Tri) return eta;
  return {0.5 * (1.0 + eta[0]) * (1.0 - eta[1]) - 1.0, eta[1], 0.0};
}

// ---- triangle basis functions ----------------------------------------------------

namespace {

struct TriFunctions {
  BasisKind kind;
  int nm;

  double a(int i, double z, bool d) const {
    if (kind == BasisKind::ModifiedModal) {
      if (i == 0) return d ? -0.5 : 0.5 * (1.0 - z);
      if (i == 1) return d ? 0.5 : 0.5 * (1.0 + z);
      const auto j = jacobi_eval(1.0, 1.0, i - 2, z);
      return d ? -0.5 * z * j.value + 0.25 * (1.0 - z) * (1.0 + z) * j.derivative
               : 0.25 * (1.0 - z) * (1.0 + z) * j.value;
    }
    const auto j = jacobi_eval(0.0, 0.0, i, z);
    return d ? j.derivative : j.value;
  }

  // ((1-z)/2)^m and its derivative
  static double pw(int m, double z, bool d) {
    if (!d) return std::pow(0.5 * (1.0 - z), m);
    return m == 0 ? 0.0 : -0.5 * m * std::pow(0.5 * (1.0 - z), m - 1);
  }

  double b(int i, int j, double z, bool d) const {
    if (kind == BasisKind::ModifiedModal) {
      auto bubble = [&](double alpha, int deg, int power) {
        // ((1-z)/2)^power (1+z)/2 P^{alpha,1}_deg(z)
        const auto jp = jacobi_eval(alpha, 1.0, deg, z);
        const double h = 0.5 * (1.0 + z);
        if (!d) return pw(power, z, false) * h * jp.value;
        return pw(power, z, true) * h * jp.value + pw(power, z, false) * 0.5 * jp.value +
               pw(power, z, false) * h * jp.derivative;
      };
      if (i == 0) {
        if (j == 0) return d ? -0.5 : 0.5 * (1.0 - z);
        if (j == 1) return d ? 0.5 : 0.5 * (1.0 + z);
        return bubble(1.0, j - 2, 1);
      }
      if (i == 1) {
        if (j == 0) return d ? -0.5 : 0.5 * (1.0 - z);
        return bubble(1.0, j - 1, 1);
      }
      if (j == 0) return pw(i, z, d);
      return bubble(2.0 * i - 1.0, j - 1, i);
    }
    // Orthogonal (Dubiner), orthonormal on the reference triangle.
    const double c = std::sqrt(0.5 * (2 * i + 1) * (i + j + 1));
    const auto jp = jacobi_eval(2.0 * i + 1.0, 0.0, j, z);
    if (!d) return c * pw(i, z, false) * jp.value;
    return c * (pw(i, z, true) * jp.value + pw(i, z, false) * jp.derivative);
  }
};

}  // namespace

std::vector<std::array<double, 2>> tri_lagrange_nodes(int nm) {
  const TriModeIndex idx(nm);
  std::vector<std::array<double, 2>> nodes(idx.size());
  const int p = nm - 1;
  for (int a = 0; a < nm; ++a) {
    for (int b = 0; b < nm - a; ++b) {
      std::array<double, 3> xi{-1.0, -1.0, 0.0};
      if (p > 0) {
        xi[0] = -1.0 + 2.0 * a / p;
        xi[1] = -1.0 + 2.0 * b / p;
      } else {
        xi = {-1.0 / 3.0, -1.0 / 3.0, 0.0};
      }
      const auto eta = duffy_collapse(Shape::Tri, xi, true);
      nodes[idx(a, b)] = {eta[0], eta[1]};
    }
  }
  return nodes;
}

BasisTables tabulate_basis(Shape shape, BasisKind basis, int nm, const std::array<QuadKind, 3>& families,
                           const std::array<std::vector<double>, 3>& points) {
  BasisTables t;
  t.shape = shape;
  t.basis = basis;
  t.dim = shape_dim(shape);
  t.nmodes = nm;
  for (int k = 0; k < 3; ++k) {
    if (k < t.dim) {
      t.points[k] = points[k];
      t.npts[k] = static_cast<int>(points[k].size());
    } else {
      t.points[k] = {0.0};
      t.npts[k] = 1;
    }
  }
  if (shape != Shape::Tri) {
    t.ncoeffs = 1;
    for (int k = 0; k < 3; ++k) {
      if (k < t.dim) {
        const Basis1D b(basis, nm, families[k]);
        t.val[k] = b.values(t.points[k]);
        t.der[k] = b.derivatives(t.points[k]);
        t.ncoeffs *= nm;
      } else {
        t.val[k] = Matrix::Ones(1, 1);
        t.der[k] = Matrix::Zero(1, 1);
      }
    }
  } else {
    if (nm < 2) throw Error("triangle expansions need at least 2 modes");
    const TriModeIndex idx(nm);
    t.ncoeffs = idx.size();
    const TriFunctions f{basis == BasisKind::ModifiedModal ? BasisKind::ModifiedModal : BasisKind::Orthogonal, nm};
    t.val[0].resize(t.npts[0], nm);
    t.der[0].resize(t.npts[0], nm);
    for (int p = 0; p < t.npts[0]; ++p) {
      for (int i = 0; i < nm; ++i) {
        t.val[0](p, i) = f.a(i, t.points[0][p], false);
        t.der[0](p, i) = f.a(i, t.points[0][p], true);
      }
    }
    t.val[1].resize(t.npts[1], t.ncoeffs);
    t.der[1].resize(t.npts[1], t.ncoeffs);
    for (int q = 0; q < t.npts[1]; ++q) {
      for (int i = 0; i < nm; ++i) {
        for (int j = 0; j < idx.row_length(i); ++j) {
          t.val[1](q, idx(i, j)) = f.b(i, j, t.points[1][q], false);
          t.der[1](q, idx(i, j)) = f.b(i, j, t.points[1][q], true);
        }
      }
    }
    t.val[2] = Matrix::Ones(1, 1);
    t.der[2] = Matrix::Zero(1, 1);
    if (basis == BasisKind::ModifiedModal) {
      t.tri_correction = true;
      for (int q = 0; q < t.npts[1]; ++q) {
        t.corr_val.push_back(0.5 * (1.0 + t.points[1][q]));
        t.corr_der.push_back(0.5);
      }
    }
    if (basis == BasisKind::Lagrange) {
      const auto nodes = tri_lagrange_nodes(nm);
      Eigen::MatrixXd v(t.ncoeffs, t.ncoeffs);
      for (int n = 0; n < t.ncoeffs; ++n) {
        for (int i = 0; i < nm; ++i) {
          const double av = f.a(i, nodes[n][0], false);
          for (int j = 0; j < idx.row_length(i); ++j) v(n, idx(i, j)) = av * f.b(i, j, nodes[n][1], false);
        }
      }
      t.nodal_to_modal = v.inverse();
    }
  }
  for (int k = 0; k < 3; ++k) {
    t.val_t[k] = t.val[k].transpose();
    t.der_t[k] = t.der[k].transpose();
  }
  return t;
}

// ---- sum-factorisation kernels ---------------------------------------------

template <int W>
void contract(const Matrix& M, std::array<int, 3>& dims, int dir, const double* in, double* out, CostCounter* cost) {
  const int nk = dims[dir];
  const int rows = static_cast<int>(M.rows());
  int inner = 1, outer = 1;
  for (int k = 0; k < dir; ++k) inner *= dims[k];
  for (int k = dir + 1; k < 3; ++k) outer *= dims[k];
  const int span = inner * W;
  const double* m = M.data();
  for (int o = 0; o < outer; ++o) {
    for (int r = 0; r < rows; ++r) {
      double* dst = out + static_cast<std::size_t>(o * rows + r) * span;
      std::fill(dst, dst + span, 0.0);
      const double* mrow = m + static_cast<std::size_t>(r) * nk;
      for (int c = 0; c < nk; ++c) {
        const double mc = mrow[c];
        const double* src = in + static_cast<std::size_t>(o * nk + c) * span;
        for (int x = 0; x < span; ++x) dst[x] += mc * src[x];
      }
    }
  }
  if (cost) cost->madds += static_cast<std::int64_t>(rows) * nk * inner * outer;
  dims[dir] = rows;
}

std::size_t evaluate_workspace(const BasisTables& t) {
  std::size_t bound = 1;
  for (int k = 0; k < 3; ++k) bound *= static_cast<std::size_t>(std::max(t.npts[k], t.shape == Shape::Tri ? t.nmodes : (k < t.dim ? t.nmodes : 1)));
  return 3 * bound + 2 * static_cast<std::size_t>(t.ncoeffs);
}

namespace {

std::array<int, 3> contraction_order(const BasisTables& t) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.begin() + t.dim, [&](int a, int b) { return t.npts[a] < t.npts[b]; });
  return order;
}

template <int W>
void apply_nodal(const Matrix& m, bool transpose, const double* in, double* out, int n) {
  for (int r = 0; r < n; ++r) {
    for (int l = 0; l < W; ++l) out[r * W + l] = 0.0;
    for (int c = 0; c < n; ++c) {
      const double v = transpose ? m(c, r) : m(r, c);
      for (int l = 0; l < W; ++l) out[r * W + l] += v * in[c * W + l];
    }
  }
}

}  // namespace

template <int W>
void evaluate(const BasisTables& t, int deriv_dir, const double* coeffs, double* out, double* work, CostCounter* cost) {
  if (t.shape != Shape::Tri) {
    std::array<int, 3> dims{1, 1, 1};
    for (int k = 0; k < t.dim; ++k) dims[k] = t.nmodes;
    const auto order = contraction_order(t);
    const std::size_t half = (evaluate_workspace(t) - 2 * t.ncoeffs) / 3 * W;
    double* buf[2] = {work, work + half};
    const double* src = coeffs;
    for (int s = 0; s < t.dim; ++s) {
      const int k = order[s];
      double* dst = (s == t.dim - 1) ? out : buf[s % 2];
      contract<W>(deriv_dir == k ? t.der[k] : t.val[k], dims, k, src, dst, cost);
      src = dst;
    }
    return;
  }
  const TriModeIndex idx(t.nmodes);
  const int nm = t.nmodes;
  const double* c = coeffs;
  double* f = work;
  if (t.basis == BasisKind::Lagrange) {
    double* cm = work + static_cast<std::size_t>(nm) * t.npts[1] * W;
    apply_nodal<W>(t.nodal_to_modal, false, coeffs, cm, t.ncoeffs);
    if (cost) cost->madds += static_cast<std::int64_t>(t.ncoeffs) * t.ncoeffs;
    c = cm;
  }
  const Matrix& b = deriv_dir == 1 ? t.der[1] : t.val[1];
  const auto& corr = deriv_dir == 1 ? t.corr_der : t.corr_val;
  for (int q = 0; q < t.npts[1]; ++q) {
    for (int i = 0; i < nm; ++i) {
      double* dst = f + static_cast<std::size_t>(q * nm + i) * W;
      for (int l = 0; l < W; ++l) dst[l] = 0.0;
      for (int j = 0; j < idx.row_length(i); ++j) {
        const double v = b(q, idx(i, j));
        const double* src = c + static_cast<std::size_t>(idx(i, j)) * W;
        for (int l = 0; l < W; ++l) dst[l] += v * src[l];
      }
    }
    if (t.tri_correction) {
      double* dst = f + static_cast<std::size_t>(q * nm + 1) * W;
      const double* src = c + static_cast<std::size_t>(idx(0, 1)) * W;
      for (int l = 0; l < W; ++l) dst[l] += corr[q] * src[l];
    }
  }
  if (cost) cost->madds += static_cast<std::int64_t>(idx.size() + (t.tri_correction ? 1 : 0)) * t.npts[1];
  std::array<int, 3> dims{nm, t.npts[1], 1};
  contract<W>(deriv_dir == 0 ? t.der[0] : t.val[0], dims, 0, f, out, cost);
}

template <int W>
void evaluate_transpose(const BasisTables& t, int deriv_dir, const double* in, double* coeffs, double* work,
                        bool accumulate, CostCounter* cost) {
  const std::size_t nc = static_cast<std::size_t>(t.ncoeffs) * W;
  double* result = accumulate ? work + (evaluate_workspace(t) - t.ncoeffs) * W : coeffs;
  if (t.shape != Shape::Tri) {
    std::array<int, 3> dims = t.npts;
    const auto order = contraction_order(t);
    const std::size_t half = (evaluate_workspace(t) - 2 * t.ncoeffs) / 3 * W;
    double* buf[2] = {work, work + half};
    const double* src = in;
    for (int s = 0; s < t.dim; ++s) {
      const int k = order[t.dim - 1 - s];
      double* dst = (s == t.dim - 1) ? result : buf[s % 2];
      contract<W>(deriv_dir == k ? t.der_t[k] : t.val_t[k], dims, k, src, dst, cost);
      src = dst;
    }
  } else {
    const TriModeIndex idx(t.nmodes);
    const int nm = t.nmodes;
    double* g = work;
    std::array<int, 3> dims{t.npts[0], t.npts[1], 1};
    contract<W>(deriv_dir == 0 ? t.der_t[0] : t.val_t[0], dims, 0, in, g, cost);
    double* cm = (t.basis == BasisKind::Lagrange) ? work + static_cast<std::size_t>(nm) * t.npts[1] * W : result;
    const Matrix& b = deriv_dir == 1 ? t.der[1] : t.val[1];
    const auto& corr = deriv_dir == 1 ? t.corr_der : t.corr_val;
    for (int i = 0; i < nm; ++i) {
      for (int j = 0; j < idx.row_length(i); ++j) {
        double* dst = cm + static_cast<std::size_t>(idx(i, j)) * W;
        for (int l = 0; l < W; ++l) dst[l] = 0.0;
        for (int q = 0; q < t.npts[1]; ++q) {
          const double v = b(q, idx(i, j));
          const double* src = g + static_cast<std::size_t>(q * nm + i) * W;
          for (int l = 0; l < W; ++l) dst[l] += v * src[l];
        }
      }
    }
    if (t.tri_correction) {
      double* dst = cm + static_cast<std::size_t>(idx(0, 1)) * W;
      for (int q = 0; q < t.npts[1]; ++q) {
        const double* src = g + static_cast<std::size_t>(q * nm + 1) * W;
        for (int l = 0; l < W; ++l) dst[l] += corr[q] * src[l];
      }
    }
    if (cost) cost->madds += static_cast<std::int64_t>(idx.size() + (t.tri_correction ? 1 : 0)) * t.npts[1];
    if (t.basis == BasisKind::Lagrange) {
      apply_nodal<W>(t.nodal_to_modal, true, cm, result, t.ncoeffs);
      if (cost) cost->madds += static_cast<std::int64_t>(t.ncoeffs) * t.ncoeffs;
    }
  }
  if (accumulate) {
    for (std::size_t x = 0; x < nc; ++x) coeffs[x] += result[x];
  }
}

// ---- Expansion -------------------------------------------------------------------

std::array<QuadKind, 3> default_rules(Shape shape, QuadKind rule) {
  std::array<QuadKind, 3> r{rule, rule, rule};
  if (shape == Shape::Tri && rule == QuadKind::GaussLobatto) r[1] = QuadKind::GaussRadauM;
  return r;
}

Expansion::Expansion(const ExpansionKey& key) : key_(key), dim_(shape_dim(key.shape)) {
  if (key.npoints < 1) throw Error("expansion needs at least one quadrature point");
  std::array<std::vector<double>, 3> grid;
  for (int k = 0; k < 3; ++k) {
    if (k >= dim_) {
      grid[k] = {0.0};
      weights_[k] = {1.0};
      continue;
    }
    rules_[k] = quad_rule(key.rules[k], key.npoints);
    grid[k] = rules_[k].points;
    weights_[k] = rules_[k].weights;
    if (key.augmented) {
      const bool need_right = !(key.shape == Shape::Tri && k == 1);
      if (!rules_[k].has_left_endpoint()) {
        grid[k].insert(grid[k].begin(), -1.0);
        weights_[k].insert(weights_[k].begin(), 0.0);
      }
      if (need_right && !rules_[k].has_right_endpoint()) {
        grid[k].push_back(1.0);
        weights_[k].push_back(0.0);
      }
    }
  }
  tables_ = tabulate_basis(key.shape, key.basis, key.nmodes, key.rules, grid);
  tensor_weights_.resize(nphys());
  for (int q2 = 0; q2 < tables_.npts[2]; ++q2)
    for (int q1 = 0; q1 < tables_.npts[1]; ++q1)
      for (int q0 = 0; q0 < tables_.npts[0]; ++q0)
        tensor_weights_[(q2 * tables_.npts[1] + q1) * tables_.npts[0] + q0] =
            weights_[0][q0] * weights_[1][q1] * weights_[2][q2];
  for (int k = 0; k < 3; ++k) {
    diff_[k] = k < dim_ ? diff_matrix(grid[k]) : Matrix::Zero(1, 1);
    diff_t_[k] = diff_[k].transpose();
  }

  // Faces.
  auto grid_index_of = [&](int dir, double value) {
    for (std::size_t i = 0; i < grid[dir].size(); ++i)
      if (grid[dir][i] == value) return static_cast<int>(i);
    return -1;
  };
  auto quad_offset = [&](int dir) { return (grid[dir].size() > rules_[dir].points.size() && grid[dir][0] == -1.0 && !rules_[dir].has_left_endpoint()) ? 1 : 0; };
  const int nf = shape_num_faces(key.shape);
  faces_.resize(nf);
  for (int f = 0; f < nf; ++f) {
    FaceGrid& fg = faces_[f];
    if (key.shape == Shape::Tri) {
      static const int normal[3] = {1, 0, 0};
      static const double fixed[3] = {-1.0, 1.0, -1.0};
      fg.normal_dir = normal[f];
      fg.fixed_value = fixed[f];
      fg.naxes = 1;
      fg.tangential_dir = {f == 0 ? 0 : 1, -1};
    } else {
      fg.normal_dir = f / 2;
      fg.fixed_value = (f % 2) ? 1.0 : -1.0;
      fg.naxes = dim_ - 1;
      int a = 0;
      for (int k = 0; k < dim_; ++k)
        if (k != fg.normal_dir) fg.tangential_dir[a++] = k;
    }
    fg.fixed_index = grid_index_of(fg.normal_dir, fg.fixed_value);
    for (int a = 0; a < fg.naxes; ++a) {
      const int k = fg.tangential_dir[a];
      fg.points[a] = rules_[k].points;
      fg.weights[a] = rules_[k].weights;
      fg.n[a] = rules_[k].n;
    }
    if (fg.naxes == 0) {
      fg.points[0] = {0.0};
      fg.weights[0] = {1.0};
    }
    if (fg.gatherable()) {
      for (int b = 0; b < fg.n[1]; ++b) {
        for (int a = 0; a < fg.n[0]; ++a) {
          std::array<int, 3> g{0, 0, 0};
          g[fg.normal_dir] = fg.fixed_index;
          if (fg.naxes > 0) g[fg.tangential_dir[0]] = a + quad_offset(fg.tangential_dir[0]);
          if (fg.naxes > 1) g[fg.tangential_dir[1]] = b + quad_offset(fg.tangential_dir[1]);
          fg.phys_index.push_back((g[2] * tables_.npts[1] + g[1]) * tables_.npts[0] + g[0]);
        }
      }
    }
  }

  // Boundary/interior decomposition.
  const int nm = key.nmodes;
  if (key.shape == Shape::Tri) {
    has_bi_ = key.basis != BasisKind::Orthogonal;
    if (has_bi_) {
      const TriModeIndex idx(nm);
      boundary_modes_.resize(3);
      if (key.basis == BasisKind::ModifiedModal) {
        for (int i = 0; i < nm; ++i) boundary_modes_[0].push_back(idx(i, 0));
        boundary_modes_[1].push_back(idx(0, 1));
        for (int j = 0; j < nm - 1; ++j) boundary_modes_[1].push_back(idx(1, j));
        for (int j = 0; j < nm; ++j) boundary_modes_[2].push_back(idx(0, j));
      } else {
        for (int a = 0; a < nm; ++a) {
          for (int b = 0; b < nm - a; ++b) {
            if (b == 0) boundary_modes_[0].push_back(idx(a, b));
            if (a + b == nm - 1) boundary_modes_[1].push_back(idx(a, b));
            if (a == 0) boundary_modes_[2].push_back(idx(a, b));
          }
        }
      }
      for (auto& v : boundary_modes_) std::sort(v.begin(), v.end());
    }
  } else {
    has_bi_ = key.basis == BasisKind::ModifiedModal;
    if (key.basis == BasisKind::Lagrange) {
      has_bi_ = true;
      for (int k = 0; k < dim_; ++k) has_bi_ = has_bi_ && key.rules[k] == QuadKind::GaussLobatto;
    }
    if (has_bi_) {
      boundary_modes_.resize(nf);
      for (int f = 0; f < nf; ++f) {
        const int axis = f / 2;
        const int want = (f % 2) ? nm - 1 : 0;
        for (int m = 0; m < ncoeffs(); ++m) {
          int r = m;
          for (int k = 0; k < axis; ++k) r /= nm;
          if (r % nm == want) boundary_modes_[f].push_back(m);
        }
      }
    }
  }
  workspace_ = evaluate_workspace(tables_);
}

const std::vector<int>& Expansion::boundary_modes(int f) const {
  if (!has_bi_) {
    throw Error("basis '" + std::string(to_string(key_.basis)) +
                "' has no boundary/interior decomposition; use the full bwd_trans path");
  }
  return boundary_modes_.at(f);
}

std::array<double, 3> Expansion::grid_eta(int q) const {
  const auto& n = tables_.npts;
  const int q0 = q % n[0];
  const int q1 = (q / n[0]) % n[1];
  const int q2 = q / (n[0] * n[1]);
  std::array<double, 3> eta{0.0, 0.0, 0.0};
  eta[0] = tables_.points[0][q0];
  if (dim_ > 1) eta[1] = tables_.points[1][q1];
  if (dim_ > 2) eta[2] = tables_.points[2][q2];
  return eta;
}

std::array<double, 3> Expansion::face_eta(int f, std::array<double, 2> t) const {
  const FaceGrid& fg = faces_[f];
  std::array<double, 3> eta{0.0, 0.0, 0.0};
  eta[fg.normal_dir] = fg.fixed_value;
  for (int a = 0; a < fg.naxes; ++a) eta[fg.tangential_dir[a]] = t[a];
  return eta;
}

BasisTables Expansion::tabulate(const std::array<std::vector<double>, 3>& points) const {
  return tabulate_basis(key_.shape, key_.basis, key_.nmodes, key_.rules, points);
}

ExpansionPtr get_expansion(const ExpansionKey& key) {
  static std::mutex mutex;
  static std::map<ExpansionKey, ExpansionPtr> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto exp = std::make_shared<const Expansion>(key);
  cache.emplace(key, exp);
  return exp;
}

// ---- single-element operators ------------------------------------------------

namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(std::string(what) + ": expected " + std::to_string(want) + " values, got " + std::to_string(got));
  }
}

}  // namespace

std::vector<double> bwd_trans(const Expansion& exp, std::span<const double> coeffs, CostCounter* cost) {
  check_size(coeffs.size(), exp.ncoeffs(), "bwd_trans");
  std::vector<double> out(exp.nphys());
  std::vector<double> work(exp.workspace());
  evaluate<1>(exp.tables(), -1, coeffs.data(), out.data(), work.data(), cost);
  return out;
}

std::vector<double> iproduct(const Expansion& exp, std::span<const double> phys, std::span<const double> metric,
                             CostCounter* cost) {
  check_size(phys.size(), exp.nphys(), "iproduct");
  check_size(metric.size(), exp.nphys(), "iproduct metric");
  std::vector<double> in(phys.size());
  for (std::size_t q = 0; q < in.size(); ++q) in[q] = phys[q] * metric[q];
  std::vector<double> out(exp.ncoeffs());
  std::vector<double> work(exp.workspace());
  evaluate_transpose<1>(exp.tables(), -1, in.data(), out.data(), work.data(), false, cost);
  return out;
}

std::vector<std::vector<double>> phys_deriv(const Expansion& exp, std::span<const double> phys, CostCounter* cost) {
  check_size(phys.size(), exp.nphys(), "phys_deriv");
  std::vector<std::vector<double>> out(exp.dim(), std::vector<double>(exp.nphys()));
  for (int k = 0; k < exp.dim(); ++k) {
    auto dims = exp.grid_dims();
    contract<1>(exp.diff(k), dims, k, phys.data(), out[k].data(), cost);
  }
  return out;
}

std::vector<double> boundary_bwd_trans(const Expansion& exp, std::span<const double> coeffs, int face,
                                       CostCounter* cost) {
  check_size(coeffs.size(), exp.ncoeffs(), "boundary_bwd_trans");
  const auto& modes = exp.boundary_modes(face);
  const FaceGrid& fg = exp.face(face);
  std::vector<double> face_coeffs(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) face_coeffs[m] = coeffs[modes[m]];
  std::vector<double> out(fg.size());
  if (exp.shape() == Shape::Tri) {
    // Dense evaluation of the boundary modes along the edge.
    std::array<std::vector<double>, 3> pts;
    pts[fg.normal_dir] = {fg.fixed_value};
    pts[fg.tangential_dir[0]] = fg.points[0];
    const BasisTables t = exp.tabulate(pts);
    std::vector<double> unit(exp.ncoeffs(), 0.0), vals(t.size()), work(evaluate_workspace(t));
    for (std::size_t m = 0; m < modes.size(); ++m) {
      unit[modes[m]] = 1.0;
      evaluate<1>(t, -1, unit.data(), vals.data(), work.data());
      unit[modes[m]] = 0.0;
      for (int q = 0; q < fg.size(); ++q) out[q] += vals[q] * face_coeffs[m];
    }
    if (cost) cost->madds += static_cast<std::int64_t>(modes.size()) * fg.size();
    return out;
  }
  if (fg.naxes == 0) {
    out[0] = face_coeffs[0];
    return out;
  }
  const Basis1D b(exp.key().basis, exp.nmodes(), exp.key().rules[fg.tangential_dir[0]]);
  std::array<int, 3> dims{exp.nmodes(), fg.naxes > 1 ? exp.nmodes() : 1, 1};
  std::vector<double> tmp(static_cast<std::size_t>(fg.n[0]) * exp.nmodes());
  if (fg.naxes == 1) {
    contract<1>(b.values(fg.points[0]), dims, 0, face_coeffs.data(), out.data(), cost);
  } else {
    const Basis1D b1(exp.key().basis, exp.nmodes(), exp.key().rules[fg.tangential_dir[1]]);
    contract<1>(b.values(fg.points[0]), dims, 0, face_coeffs.data(), tmp.data(), cost);
    contract<1>(b1.values(fg.points[1]), dims, 1, tmp.data(), out.data(), cost);
  }
  return out;
}

// ---- batched operators -------------------------------------------------------------

template <int W>
void bwd_trans_batch(const Expansion& exp, const double* coeffs, double* phys, double* work) {
  evaluate<W>(exp.tables(), -1, coeffs, phys, work);
}

template <int W>
void iproduct_batch(const Expansion& exp, const double* in, double* coeffs, double* work) {
  evaluate_transpose<W>(exp.tables(), -1, in, coeffs, work, false);
}

template <int W>
void phys_deriv_batch(const Expansion& exp, int dir, const double* phys, double* dphys) {
  auto dims = exp.grid_dims();
  contract<W>(exp.diff(dir), dims, dir, phys, dphys);
}

std::vector<double> interleave(std::span<const double> data, int nelem, int stride, int width) {
  const int nb = (nelem + width - 1) / width;
  std::vector<double> out(static_cast<std::size_t>(nb) * stride * width);
  for (int b = 0; b < nb; ++b)
    for (int l = 0; l < width; ++l) {
      const int e = std::min(b * width + l, nelem - 1);
      for (int q = 0; q < stride; ++q)
        out[(static_cast<std::size_t>(b) * stride + q) * width + l] = data[static_cast<std::size_t>(e) * stride + q];
    }
  return out;
}

std::vector<double> deinterleave(std::span<const double> data, int nelem, int stride, int width) {
  std::vector<double> out(static_cast<std::size_t>(nelem) * stride);
  for (int e = 0; e < nelem; ++e) {
    const int b = e / width, l = e % width;
    for (int q = 0; q < stride; ++q)
      out[static_cast<std::size_t>(e) * stride + q] = data[(static_cast<std::size_t>(b) * stride + q) * width + l];
  }
  return out;
}

#define DGSIPG_INSTANTIATE(W)                                                                                      \
  template void contract<W>(const Matrix&, std::array<int, 3>&, int, const double*, double*, CostCounter*);        \
  template void evaluate<W>(const BasisTables&, int, const double*, double*, double*, CostCounter*);               \
  template void evaluate_transpose<W>(const BasisTables&, int, const double*, double*, double*, bool,              \
                                      CostCounter*);                                                               \
  template void bwd_trans_batch<W>(const Expansion&, const double*, double*, double*);                              \
  template void iproduct_batch<W>(const Expansion&, const double*, double*, double*);                               \
  template void phys_deriv_batch<W>(const Expansion&, int, const double*, double*);

DGSIPG_INSTANTIATE(1)
#if DGSIPG_BATCH_WIDTH != 1
DGSIPG_INSTANTIATE(DGSIPG_BATCH_WIDTH)
#endif

}  // namespace dgsipg
