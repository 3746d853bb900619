#include "dgsipg/trace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dgsipg {

std::string_view to_string(Strategy s) { return s == Strategy::SharedTrace ? "shared_trace" : "p2p"; }

std::string_view to_string(StrategyChoice s) {
  switch (s) {
    case StrategyChoice::SharedTrace: return "shared_trace";
    case StrategyChoice::P2P: return "p2p";
    case StrategyChoice::P2PForced: return "p2p_forced";
  }
  return "?";
}

StrategyChoice parse_strategy(std::string_view name) {
  if (name == "shared_trace") return StrategyChoice::SharedTrace;
  if (name == "p2p") return StrategyChoice::P2P;
  if (name == "p2p_forced") return StrategyChoice::P2PForced;
  throw Error("unknown strategy '" + std::string(name) + "'");
}

// ---- FaceMap ------------------------------------------------------------------

FaceMap FaceMap::build(int naxes, const std::array<std::vector<double>, 2>& src,
                       const std::array<std::vector<double>, 2>& tgt, int code, bool force_dense) {
  FaceMap map;
  map.naxes_ = naxes;
  if (naxes == 0) {
    map.mat_[0] = Matrix::Ones(1, 1);
    map.index_ = {0};
    return map;
  }
  const auto o = face_orientation(naxes, code);
  map.transpose_ = naxes == 2 && o.perm[0] == 1;
  for (int k = 0; k < naxes; ++k) {
    map.n_[k] = static_cast<int>(src[k].size());
    map.m_[k] = static_cast<int>(tgt[k].size());
  }
  bool index = !force_dense;
  std::array<std::vector<int>, 2> hit;
  for (int k = 0; k < naxes; ++k) {
    std::vector<double> at(tgt[o.perm[k]].size());
    for (std::size_t i = 0; i < at.size(); ++i) at[i] = o.sign[k] * tgt[o.perm[k]][i];
    map.mat_[k] = lagrange_interp_matrix(src[k], at);
    for (Eigen::Index r = 0; r < map.mat_[k].rows(); ++r) {
      int one = -1, nonzero = 0;
      for (Eigen::Index c = 0; c < map.mat_[k].cols(); ++c) {
        if (map.mat_[k](r, c) != 0.0) ++nonzero;
        if (map.mat_[k](r, c) == 1.0) one = static_cast<int>(c);
      }
      if (nonzero != 1 || one < 0) index = false;
      hit[k].push_back(one);
    }
  }
  map.rows_ = map.m_[0] * map.m_[1];
  map.cols_ = map.n_[0] * map.n_[1];
  if (index) {
    map.index_.resize(map.rows_);
    for (int i1 = 0; i1 < map.m_[1]; ++i1)
      for (int i0 = 0; i0 < map.m_[0]; ++i0) {
        const int i[2] = {i0, i1};
        const int j0 = hit[0][i[o.perm[0]]];
        const int j1 = naxes > 1 ? hit[1][i[o.perm[1]]] : 0;
        map.index_[i0 + map.m_[0] * i1] = j0 + map.n_[0] * j1;
      }
  }
  return map;
}

bool FaceMap::is_identity() const {
  if (index_.empty() || rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    if (index_[i] != i) return false;
  return true;
}

void FaceMap::apply(const double* in, double* out, CostCounter* cost) const {
  if (!index_.empty()) {
    for (int i = 0; i < rows_; ++i) out[i] = in[index_[i]];
    return;
  }
  if (naxes_ == 1) {
    std::array<int, 3> dims{n_[0], 1, 1};
    contract<1>(mat_[0], dims, 0, in, out, cost);
    return;
  }
  std::vector<double> tmp(static_cast<std::size_t>(std::max(m_[0], m_[1])) * std::max(n_[0], n_[1]) * 2);
  std::array<int, 3> dims{n_[0], n_[1], 1};
  if (!transpose_) {
    contract<1>(mat_[0], dims, 0, in, tmp.data(), cost);
    contract<1>(mat_[1], dims, 1, tmp.data(), out, cost);
    return;
  }
  std::vector<double> t2(rows_);
  contract<1>(mat_[0], dims, 0, in, tmp.data(), cost);     // (m1, n1)
  contract<1>(mat_[1], dims, 1, tmp.data(), t2.data(), cost);  // (m1, m0)
  for (int i1 = 0; i1 < m_[1]; ++i1)
    for (int i0 = 0; i0 < m_[0]; ++i0) out[i0 + m_[0] * i1] = t2[i1 + m_[1] * i0];
}

void FaceMap::apply_transpose(const double* in, double* out, CostCounter* cost) const {
  if (!index_.empty()) {
    for (int i = 0; i < rows_; ++i) out[index_[i]] += in[i];
    return;
  }
  std::vector<double> res(cols_);
  if (naxes_ == 1) {
    std::array<int, 3> dims{m_[0], 1, 1};
    const Matrix mt = mat_[0].transpose();
    contract<1>(mt, dims, 0, in, res.data(), cost);
  } else {
    const Matrix mt0 = mat_[0].transpose(), mt1 = mat_[1].transpose();
    std::vector<double> tmp(static_cast<std::size_t>(std::max(m_[0], m_[1])) * std::max(n_[0], n_[1]) * 2);
    if (!transpose_) {
      std::array<int, 3> dims{m_[0], m_[1], 1};
      contract<1>(mt0, dims, 0, in, tmp.data(), cost);
      contract<1>(mt1, dims, 1, tmp.data(), res.data(), cost);
    } else {
      std::vector<double> t2(rows_);
      for (int i1 = 0; i1 < m_[1]; ++i1)
        for (int i0 = 0; i0 < m_[0]; ++i0) t2[i1 + m_[1] * i0] = in[i0 + m_[0] * i1];
      std::array<int, 3> dims{m_[1], m_[0], 1};
      contract<1>(mt0, dims, 0, t2.data(), tmp.data(), cost);
      contract<1>(mt1, dims, 1, tmp.data(), res.data(), cost);
    }
  }
  for (int j = 0; j < cols_; ++j) out[j] += res[j];
}

Matrix FaceMap::dense() const {
  Matrix m(rows_, cols_);
  std::vector<double> unit(cols_, 0.0), col(rows_);
  for (int j = 0; j < cols_; ++j) {
    unit[j] = 1.0;
    apply(unit.data(), col.data());
    unit[j] = 0.0;
    for (int i = 0; i < rows_; ++i) m(i, j) = col[i];
  }
  return m;
}

// ---- certificate --------------------------------------------------------------

P2PCertificate certify_p2p(const SideSpec& left, const SideSpec& right, int p_geom) {
  P2PCertificate c;
  const bool right_low =
      right.order.np < left.order.np || (right.order.np == left.order.np && right.order.nq < left.order.nq);
  c.low_side = right_low ? 1 : 0;
  const SideSpec& lo = right_low ? right : left;
  const SideSpec& hi = right_low ? left : right;
  c.condition1 = hi.order.np <= lo.order.nq && lo.order.nq <= hi.order.nq;
  c.required_degree = (hi.order.np - 1) + (lo.order.np - 1) + p_geom;
  c.actual_degree = exactness_degree(lo.face_rule, lo.order.nq);
  c.condition2 = c.actual_degree >= c.required_degree;
  return c;
}

// ---- face evaluation ------------------------------------------------------------

namespace {

std::array<std::vector<double>, 3> face_tensor_points(const Expansion& exp, int face,
                                                      const std::array<std::vector<double>, 2>& params) {
  const FaceGrid& fg = exp.face(face);
  std::array<std::vector<double>, 3> pts;
  pts[fg.normal_dir] = {fg.fixed_value};
  for (int a = 0; a < fg.naxes; ++a) pts[fg.tangential_dir[a]] = params[a];
  return pts;
}

}  // namespace

FaceEvaluator make_face_evaluator(const Mesh& mesh, int e, ExpansionPtr exp, int face,
                                  const std::array<std::vector<double>, 2>& params,
                                  const std::array<std::vector<double>, 2>& weights) {
  FaceEvaluator fe;
  const FaceGrid& fg = exp->face(face);
  if (exp->shape() == Shape::Tri && fg.normal_dir == 0) {
    for (double t : params[0])
      if (t == 1.0) throw Error("trace evaluation at the collapsed triangle vertex");
  }
  fe.tables = exp->tabulate(face_tensor_points(*exp, face, params));
  fe.geom = face_factors(mesh, e, *exp, face, params, weights);
  fe.npts = fe.geom.npts;
  fe.face = face;
  fe.exp = std::move(exp);
  return fe;
}

void trace_phys_eval(const FaceEvaluator& fe, const double* coeffs, double* u, double* grad, CostCounter* cost) {
  const int dim = fe.exp->dim();
  const int n = fe.npts;
  std::vector<double> work(evaluate_workspace(fe.tables));
  evaluate<1>(fe.tables, -1, coeffs, u, work.data(), cost);
  if (!grad) return;
  std::vector<double> d(static_cast<std::size_t>(dim) * n);
  for (int k = 0; k < dim; ++k) evaluate<1>(fe.tables, k, coeffs, d.data() + k * n, work.data(), cost);
  for (int m = 0; m < dim; ++m)
    for (int p = 0; p < n; ++p) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += fe.geom.deta_dx[(k * dim + m) * n + p] * d[k * n + p];
      grad[m * n + p] = s;
    }
}

void trace_iproduct(const FaceEvaluator& fe, const double* fu, const double* fg, double* coeffs, CostCounter* cost) {
  const int dim = fe.exp->dim();
  const int n = fe.npts;
  std::vector<double> work(evaluate_workspace(fe.tables));
  evaluate_transpose<1>(fe.tables, -1, fu, coeffs, work.data(), true, cost);
  if (!fg) return;
  std::vector<double> gk(n);
  for (int k = 0; k < dim; ++k) {
    for (int p = 0; p < n; ++p) {
      double s = 0.0;
      for (int m = 0; m < dim; ++m) s += fe.geom.deta_dx[(k * dim + m) * n + p] * fg[m * n + p];
      gk[p] = s;
    }
    evaluate_transpose<1>(fe.tables, k, gk.data(), coeffs, work.data(), true, cost);
  }
}

std::vector<double> gathr(const Expansion& exp, std::span<const double> phys, int face) {
  const FaceGrid& fg = exp.face(face);
  if (!fg.gatherable()) {
    throw Error("face " + std::to_string(face) +
                " is not on the element grid; use augmented endpoints or trace_phys_eval");
  }
  if (phys.size() != static_cast<std::size_t>(exp.nphys())) throw Error("gathr: size mismatch");
  std::vector<double> out(fg.size());
  for (int p = 0; p < fg.size(); ++p) out[p] = phys[fg.phys_index[p]];
  return out;
}

std::vector<double> gathr_interp(const Expansion& exp, std::span<const double> phys, int face, const FaceMap& map,
                                 CostCounter* cost) {
  const auto local = gathr(exp, phys, face);
  if (map.cols() != static_cast<int>(local.size())) throw Error("gathr_interp: face map does not match face grid");
  std::vector<double> out(map.rows());
  map.apply(local.data(), out.data(), cost);
  return out;
}

void scatr_interp(const Expansion& exp, std::span<const double> values, int face, const FaceMap& map,
                  std::span<double> phys, CostCounter* cost) {
  const FaceGrid& fg = exp.face(face);
  if (!fg.gatherable()) throw Error("scatr_interp: face is not on the element grid");
  if (map.rows() != fg.size() || map.cols() != static_cast<int>(values.size())) {
    throw Error("scatr_interp: face map does not match");
  }
  std::vector<double> local(fg.size());
  map.apply(values.data(), local.data(), cost);
  for (int p = 0; p < fg.size(); ++p) phys[fg.phys_index[p]] += local[p];
}

std::vector<double> mortar_imprint(const Expansion& exp, std::span<const double> coeffs, int face,
                                   const QuadRule& mortar, std::array<double, 2> lo, std::array<double, 2> hi) {
  const FaceGrid& fg = exp.face(face);
  for (int a = 0; a < fg.naxes; ++a) {
    if (std::abs(lo[a] + 1.0) > 1e-14 || std::abs(hi[a] - 1.0) > 1e-14) {
      throw Error("mortar does not cover the whole face; geometric non-conforming mortars are not supported");
    }
  }
  if (coeffs.size() != static_cast<std::size_t>(exp.ncoeffs())) throw Error("mortar_imprint: size mismatch");
  std::array<std::vector<double>, 2> params{mortar.points, mortar.points};
  const BasisTables t = exp.tabulate(face_tensor_points(exp, face, params));
  std::vector<double> out(t.size()), work(evaluate_workspace(t));
  evaluate<1>(t, -1, coeffs.data(), out.data(), work.data());
  return out;
}

// ---- discretisation ---------------------------------------------------------------

ExpansionKey element_key(Shape shape, Order order, const DiscretisationOptions& opt) {
  ExpansionKey key;
  key.shape = shape;
  key.basis = opt.basis;
  key.nmodes = order.np;
  key.npoints = order.nq;
  key.rules = default_rules(shape, opt.rule);
  if (shape == Shape::Tri) {
    key.augmented = key.rules[0] != QuadKind::GaussLobatto || key.rules[1] == QuadKind::GaussLegendre;
  } else {
    key.augmented = opt.rule != QuadKind::GaussLobatto;
  }
  return key;
}

QuadKind face_rule(const Expansion& exp, int face) {
  const FaceGrid& fg = exp.face(face);
  if (fg.naxes == 0) return exp.key().rules[0];
  return exp.key().rules[fg.tangential_dir[0]];
}

namespace {

double penalty(const Discretisation& d, int left, int right, int lface) {
  int p = d.orders[left].np - 1;
  double vol = d.factors[left].volume;
  if (right >= 0) {
    p = std::max(p, d.orders[right].np - 1);
    vol = std::min(vol, d.factors[right].volume);
  }
  p = std::max(p, 1);
  const double h = vol / d.factors[left].faces[lface].area;
  return d.options.tau_constant * p * p / h;
}

}  // namespace

Discretisation discretise(const Mesh& mesh, const OrderMap& orders, const DiscretisationOptions& opt) {
  if (orders.size() != mesh.elements.size()) throw Error("order map does not cover the mesh");
  Discretisation d;
  d.mesh = &mesh;
  d.options = opt;
  d.orders = orders;
  d.offsets.push_back(0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (orders[e].nq < orders[e].np) throw Error("element " + std::to_string(e) + " has fewer points than modes");
    d.exps.push_back(get_expansion(element_key(mesh.elements[e].shape, orders[e], opt)));
    d.factors.push_back(element_factors(mesh, e, *d.exps[e]));
    d.offsets.push_back(d.offsets.back() + d.exps[e]->ncoeffs());
  }
  for (const Interface& f : mesh.interfaces) {
    InterfaceTrace t;
    const Expansion& le = *d.exps[f.left];
    const FaceGrid& lg = le.face(f.left_face);
    t.naxes = lg.naxes;
    t.boundary = f.boundary();
    t.tau = penalty(d, f.left, f.right, f.left_face);
    if (t.boundary) {
      t.strategy = Strategy::PointToPoint;
      if (opt.trace_iproduct) {
        t.points = lg.points;
        t.weights = lg.weights;
        t.eval[0] = make_face_evaluator(mesh, f.left, d.exps[f.left], f.left_face, lg.points, lg.weights);
      }
      d.traces.push_back(std::move(t));
      continue;
    }
    const Expansion& re = *d.exps[f.right];
    const FaceGrid& rg = re.face(f.right_face);
    t.conforming = le.key() == re.key();
    if (t.conforming) {
      t.strategy = Strategy::SharedTrace;
    } else {
      t.certificate = certify_p2p({orders[f.left], face_rule(le, f.left_face)},
                                  {orders[f.right], face_rule(re, f.right_face)}, opt.p_geom);
      t.certified = t.certificate.symmetric();
      switch (opt.strategy) {
        case StrategyChoice::SharedTrace: t.strategy = Strategy::SharedTrace; break;
        case StrategyChoice::P2P: t.strategy = t.certified ? Strategy::PointToPoint : Strategy::SharedTrace; break;
        case StrategyChoice::P2PForced: t.strategy = Strategy::PointToPoint; break;
      }
    }
    // Shared trace grid: the rule of the side with more points, in left parameters.
    const bool right_owns = orders[f.right].nq > orders[f.left].nq;
    QuadKind kind = right_owns ? face_rule(re, f.right_face) : face_rule(le, f.left_face);
    if (kind == QuadKind::GaussRadauM) kind = QuadKind::GaussLegendre;
    const int nq = right_owns ? orders[f.right].nq : orders[f.left].nq;
    if (t.naxes > 0) {
      const QuadRule r = quad_rule(kind, nq);
      for (int a = 0; a < t.naxes; ++a) {
        t.points[a] = r.points;
        t.weights[a] = r.weights;
      }
    }
    t.metric = face_factors(mesh, f.left, le, f.left_face, t.points, t.weights);
    t.npts = t.metric.npts;
    t.to_trace[0] = FaceMap::build(t.naxes, lg.points, t.points, 0, opt.force_interp);
    t.to_trace[1] = FaceMap::build(t.naxes, rg.points, t.points, f.orientation, opt.force_interp);
    t.from_other[0] = FaceMap::build(t.naxes, rg.points, lg.points, f.orientation, opt.force_interp);
    t.from_other[1] =
        FaceMap::build(t.naxes, lg.points, rg.points, inverse_orientation(t.naxes, f.orientation), opt.force_interp);
    if (opt.trace_iproduct) {
      t.eval[0] = make_face_evaluator(mesh, f.left, d.exps[f.left], f.left_face, t.points, t.weights);
      t.eval_to_trace[0] = FaceMap::build(t.naxes, t.points, t.points, 0);
      // right side: the trace points in its own face parameters
      const auto o = face_orientation(t.naxes, f.orientation);
      std::array<std::vector<double>, 2> rp, rw;
      for (int k = 0; k < t.naxes; ++k) {
        const auto& src = t.points[o.perm[k]];
        const auto& srcw = t.weights[o.perm[k]];
        std::vector<std::pair<double, double>> pw;
        for (std::size_t i = 0; i < src.size(); ++i) pw.push_back({o.sign[k] * src[i], srcw[i]});
        std::sort(pw.begin(), pw.end());
        for (const auto& [p, w] : pw) {
          rp[k].push_back(p);
          rw[k].push_back(w);
        }
      }
      t.eval[1] = make_face_evaluator(mesh, f.right, d.exps[f.right], f.right_face, rp, rw);
      t.eval_to_trace[1] = FaceMap::build(t.naxes, rp, t.points, f.orientation);
      if (!t.eval_to_trace[1].is_index_map()) throw Error("trace grid is not symmetric under the face orientation");
    }
    d.traces.push_back(std::move(t));
  }
  return d;
}

std::string certificate_report(const Discretisation& d) {
  std::ostringstream os;
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  for (std::size_t i = 0; i < d.traces.size(); ++i) {
    const auto& t = d.traces[i];
    if (t.boundary || t.conforming) continue;
    const auto& f = d.mesh->interfaces[i];
    const Order l = d.orders[f.left], r = d.orders[f.right];
    os << "interface " << i << " left P" << l.np << "Q" << l.nq << " right P" << r.np << "Q" << r.nq
       << " strategy " << to_string(t.strategy) << " condition1 " << yn(t.certificate.condition1) << " required "
       << t.certificate.required_degree << " actual " << t.certificate.actual_degree << " condition2 "
       << yn(t.certificate.condition2) << " certified " << yn(t.certified) << "\n";
  }
  return os.str();
}

}  // namespace dgsipg
