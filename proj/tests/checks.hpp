#pragma once

// Comparisons of library kernels against the dense oracles. Each returns the
// worst relative mismatch so tests and the acceptance driver share one code
// path.

#include <algorithm>
#include <random>

#include "dgsipg/trace.hpp"
#include "oracles.hpp"

namespace checks {

using namespace dgsipg;

inline ExpansionKey make_key(Shape shape, BasisKind basis, QuadKind rule, int nm, int nq) {
  ExpansionKey key;
  key.shape = shape;
  key.basis = basis;
  key.nmodes = nm;
  key.npoints = nq;
  key.rules = default_rules(shape, rule);
  return key;
}

/// Face parameters: n Gauss-Legendre points per face axis.
inline std::array<std::vector<double>, 2> face_params(const Expansion& exp, int face, int n, bool weights = false) {
  const QuadRule r = quad_rule(QuadKind::GaussLegendre, n);
  std::array<std::vector<double>, 2> out;
  for (int a = 0; a < 2; ++a) out[a] = a < exp.face(face).naxes ? (weights ? r.weights : r.points) : std::vector<double>{};
  return out;
}

inline std::array<std::vector<double>, 3> face_points(const Expansion& exp, int face,
                                                      const std::array<std::vector<double>, 2>& params) {
  const FaceGrid& fg = exp.face(face);
  std::array<std::vector<double>, 3> pts;
  pts[fg.normal_dir] = {fg.fixed_value};
  for (int a = 0; a < fg.naxes; ++a) pts[fg.tangential_dir[a]] = params[a];
  return pts;
}

struct KernelMismatch {
  double bwd = 0, iprod = 0, deriv = 0, trace = 0;
  double worst() const { return std::max({bwd, iprod, deriv, trace}); }
};

/// BwdTrans, IProduct, PhysDeriv and TracePhysEval against dense tables on
/// the reference element.
inline KernelMismatch kernel_mismatch(Shape shape, BasisKind basis, QuadKind rule, int nm, std::mt19937_64& rng) {
  KernelMismatch km;
  const ExpansionKey key = make_key(shape, basis, rule, nm, nm + 1);
  const ExpansionPtr exp = get_expansion(key);
  const int dim = exp->dim();
  std::array<std::vector<double>, 3> pts;
  for (int k = 0; k < dim; ++k) pts[k] = exp->grid_points(k);
  const oracle::Dense D = oracle::dense_basis(shape, basis, nm, key.rules, pts);

  const auto c = oracle::random_vector(exp->ncoeffs(), rng);
  const auto u = bwd_trans(*exp, c);
  km.bwd = oracle::rel_diff(u, oracle::mat_vec(D.B, c));

  const auto phys = oracle::random_vector(exp->nphys(), rng);
  auto metric = oracle::random_vector(exp->nphys(), rng);
  for (double& m : metric) m = 1.5 + m;
  std::vector<double> pm(phys.size());
  for (std::size_t q = 0; q < pm.size(); ++q) pm[q] = phys[q] * metric[q];
  km.iprod = oracle::rel_diff(iproduct(*exp, phys, metric), oracle::mat_vec(D.B.transpose(), pm));

  const auto du = phys_deriv(*exp, u);
  for (int k = 0; k < dim; ++k) km.deriv = std::max(km.deriv, oracle::rel_diff(du[k], oracle::mat_vec(D.D[k], c)));

  const Mesh mesh = oracle::reference_mesh(shape);
  for (int f = 0; f < exp->num_faces(); ++f) {
    const auto params = face_params(*exp, f, nm + 1);
    const auto weights = face_params(*exp, f, nm + 1, true);
    const FaceEvaluator fe = make_face_evaluator(mesh, 0, exp, f, params, weights);
    std::vector<double> tu(fe.npts), tg(static_cast<std::size_t>(dim) * fe.npts);
    trace_phys_eval(fe, c.data(), tu.data(), tg.data());
    const auto fp = face_points(*exp, f, params);
    const oracle::Dense F = oracle::dense_basis(shape, basis, nm, key.rules, fp);
    km.trace = std::max(km.trace, oracle::rel_diff(tu, oracle::mat_vec(F.B, c)));
    std::array<std::vector<double>, 3> g;
    for (int k = 0; k < dim; ++k) g[k] = oracle::mat_vec(F.D[k], c);
    std::vector<double> ref(tg.size());
    const int n = fe.npts;
    const int n0 = static_cast<int>(fp[0].size());
    for (int p = 0; p < n; ++p) {
      if (shape == Shape::Tri) {
        const double e0 = fp[0][p % n0], e1 = fp[1][p / n0];
        ref[p] = g[0][p] * 2.0 / (1.0 - e1);
        ref[n + p] = g[0][p] * (1.0 + e0) / (1.0 - e1) + g[1][p];
      } else {
        for (int m = 0; m < dim; ++m) ref[m * n + p] = g[m][p];
      }
    }
    km.trace = std::max(km.trace, oracle::rel_diff(tg, ref));
  }
  return km;
}

/// Imprint of the element trace at mortar points against the dense L2
/// projection of the trace onto the mortar polynomial space.
inline double mortar_mismatch(Shape shape, BasisKind basis, QuadKind rule, int nm, QuadKind mortar_kind, int nmortar,
                              int trials, std::mt19937_64& rng) {
  const ExpansionKey key = make_key(shape, basis, rule, nm, nm + 1);
  const ExpansionPtr exp = get_expansion(key);
  const QuadRule mortar = quad_rule(mortar_kind, nmortar);
  double worst = 0.0;
  for (int f = 0; f < exp->num_faces(); ++f) {
    const int naxes = exp->face(f).naxes;
    const std::array<std::vector<double>, 2> params{mortar.points, mortar.points};
    const auto fp = face_points(*exp, f, params);
    const oracle::Dense F = oracle::dense_basis(shape, basis, nm, key.rules, fp);
    // Legendre basis of the mortar space and the discrete mass matrix.
    const int M = nmortar;
    const int npts = naxes == 2 ? M * M : M;
    const int nphi = naxes == 2 ? M * M : M;
    Eigen::MatrixXd Phi(npts, nphi);
    Eigen::VectorXd W(npts);
    for (int p = 0; p < npts; ++p) {
      const int a = p % M, b = p / M;
      W[p] = mortar.weights[a] * (naxes == 2 ? mortar.weights[b] : 1.0);
      for (int r = 0; r < nphi; ++r) {
        const int i = r % M, j = r / M;
        Phi(p, r) = oracle::jacobi(0.0, 0.0, i, mortar.points[a]) *
                    (naxes == 2 ? oracle::jacobi(0.0, 0.0, j, mortar.points[b]) : 1.0);
      }
    }
    const Eigen::MatrixXd mass = Phi.transpose() * W.asDiagonal() * Phi;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(mass);
    for (int t = 0; t < trials; ++t) {
      const auto c = oracle::random_vector(exp->ncoeffs(), rng);
      const auto uq = oracle::mat_vec(F.B, c);
      const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(uq.data(), npts);
      const Eigen::VectorXd proj = Phi * ldlt.solve(Phi.transpose() * W.asDiagonal() * u);
      const auto imp = mortar_imprint(*exp, c, f, mortar);
      worst = std::max(worst, oracle::rel_diff(imp, std::vector<double>(proj.data(), proj.data() + npts)));
    }
  }
  return worst;
}

/// Interleaved batch kernels against the scalar kernels for `nelem` elements.
inline double batch_mismatch(Shape shape, BasisKind basis, QuadKind rule, int nm, int nelem, std::mt19937_64& rng) {
  constexpr int W = kBatchWidth;
  const ExpansionPtr exp = get_expansion(make_key(shape, basis, rule, nm, nm + 1));
  const int nc = exp->ncoeffs(), nq = exp->nphys();
  const auto c = oracle::random_vector(static_cast<std::size_t>(nelem) * nc, rng);
  const auto ph = oracle::random_vector(static_cast<std::size_t>(nelem) * nq, rng);
  const auto ci = interleave(c, nelem, nc, W);
  const auto pi = interleave(ph, nelem, nq, W);
  const int nb = (nelem + W - 1) / W;
  std::vector<double> ub(static_cast<std::size_t>(nb) * nq * W), ib(static_cast<std::size_t>(nb) * nc * W),
      db(static_cast<std::size_t>(nb) * nq * W), work(exp->workspace() * W);
  double worst = 0.0;
  for (int b = 0; b < nb; ++b) {
    bwd_trans_batch<W>(*exp, ci.data() + static_cast<std::size_t>(b) * nc * W,
                       ub.data() + static_cast<std::size_t>(b) * nq * W, work.data());
    iproduct_batch<W>(*exp, pi.data() + static_cast<std::size_t>(b) * nq * W,
                      ib.data() + static_cast<std::size_t>(b) * nc * W, work.data());
  }
  const auto u = deinterleave(ub, nelem, nq, W);
  const auto ip = deinterleave(ib, nelem, nc, W);
  const std::vector<double> ones(nq, 1.0);
  for (int e = 0; e < nelem; ++e) {
    const std::span<const double> ce(c.data() + static_cast<std::size_t>(e) * nc, nc);
    const std::span<const double> pe(ph.data() + static_cast<std::size_t>(e) * nq, nq);
    const auto us = bwd_trans(*exp, ce);
    const auto is = iproduct(*exp, pe, ones);
    worst = std::max(worst, oracle::rel_diff(std::span(u).subspan(static_cast<std::size_t>(e) * nq, nq), us));
    worst = std::max(worst, oracle::rel_diff(std::span(ip).subspan(static_cast<std::size_t>(e) * nc, nc), is));
  }
  for (int k = 0; k < exp->dim(); ++k) {
    for (int b = 0; b < nb; ++b)
      phys_deriv_batch<W>(*exp, k, pi.data() + static_cast<std::size_t>(b) * nq * W,
                          db.data() + static_cast<std::size_t>(b) * nq * W);
    const auto d = deinterleave(db, nelem, nq, W);
    for (int e = 0; e < nelem; ++e) {
      const auto ds = phys_deriv(*exp, std::span<const double>(ph.data() + static_cast<std::size_t>(e) * nq, nq));
      worst = std::max(worst, oracle::rel_diff(std::span(d).subspan(static_cast<std::size_t>(e) * nq, nq), ds[k]));
    }
  }
  return worst;
}

}  // namespace checks
