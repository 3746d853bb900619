#include "dgsipg/sipg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

namespace dgsipg {

// ---- manufactured solutions -----------------------------------------------------

ManufacturedCase sinusoidal_case(int dim, double k, double lambda) {
  ManufacturedCase c;
  c.name = "sinusoidal";
  auto u = [dim, k](const Vec3& x) {
    double v = 1.0;
    for (int d = 0; d < dim; ++d) v *= std::sin(k * x[d]);
    return v;
  };
  c.u = u;
  c.f = [u, dim, k, lambda](const Vec3& x) { return -(lambda + dim * k * k) * u(x); };
  return c;
}

ManufacturedCase gaussian_case(int dim, double a, double lambda, Vec3 center) {
  ManufacturedCase c;
  c.name = "gaussian";
  auto r2 = [dim, center](const Vec3& x) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += (x[d] - center[d]) * (x[d] - center[d]);
    return s;
  };
  c.u = [r2, a](const Vec3& x) { return std::exp(-r2(x) / (a * a)); };
  c.f = [r2, a, dim, lambda](const Vec3& x) {
    const double s = r2(x);
    const double u = std::exp(-s / (a * a));
    const double lap = u * (4.0 * s / (a * a * a * a) - 2.0 * dim / (a * a));
    return lap - lambda * u;
  };
  return c;
}

double forcing_eval(const ManufacturedCase& c, const Vec3& x) { return c.f(x); }

// ---- threading ------------------------------------------------------------------

void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
  if (threads <= 1 || n <= 1) {
    fn(0, n);
    return;
  }
  const int t = std::min(threads, n);
  std::vector<std::thread> pool;
  for (int i = 0; i < t; ++i) {
    const int b = static_cast<int>(static_cast<long>(n) * i / t);
    const int e = static_cast<int>(static_cast<long>(n) * (i + 1) / t);
    pool.emplace_back(fn, b, e);
  }
  for (auto& th : pool) th.join();
}

// ---- operator setup ---------------------------------------------------------------

HelmholtzOperator::HelmholtzOperator(const Discretisation& disc, const OperatorOptions& opt) : disc_(disc), opt_(opt) {
  if (opt_.batch_width != 1 && opt_.batch_width != kBatchWidth) {
    throw Error("batch width must be 1 or " + std::to_string(kBatchWidth));
  }
  const Mesh& mesh = *disc.mesh;
  const int W = opt_.batch_width;

  // Group elements by expansion and regularity, in order of first appearance.
  std::vector<std::pair<std::pair<const Expansion*, bool>, std::vector<int>>> groups;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto key = std::make_pair(disc.exps[e].get(), disc.factors[e].regular);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(e);
  }
  for (const auto& [key, elems] : groups) {
    const Expansion& E = *key.first;
    const int dim = E.dim(), nq = E.nphys();
    for (std::size_t s = 0; s < elems.size(); s += W) {
      Batch b;
      b.exp = key.first;
      b.regular = key.second;
      b.count = static_cast<int>(std::min<std::size_t>(W, elems.size() - s));
      for (int l = 0; l < W; ++l) b.elems.push_back(elems[s + std::min(l, b.count - 1)]);
      if (b.regular) {
        b.wj.resize(W);
        b.K.resize(static_cast<std::size_t>(dim) * dim * W);
        for (int l = 0; l < W; ++l) {
          const ElementFactors& ef = disc.factors[b.elems[l]];
          b.wj[l] = ef.J(0);
          for (int k = 0; k < dim; ++k)
            for (int j = 0; j < dim; ++j) {
              double s2 = 0.0;
              for (int m = 0; m < dim; ++m) s2 += ef.g(k, m, dim, 0) * ef.g(j, m, dim, 0);
              b.K[(k * dim + j) * W + l] = ef.J(0) * s2;
            }
        }
      } else {
        b.wj.resize(static_cast<std::size_t>(nq) * W);
        b.K.resize(static_cast<std::size_t>(dim) * dim * nq * W);
        for (int l = 0; l < W; ++l) {
          const ElementFactors& ef = disc.factors[b.elems[l]];
          for (int q = 0; q < nq; ++q) {
            const double wj = E.weights()[q] * ef.J(q);
            b.wj[q * W + l] = wj;
            for (int k = 0; k < dim; ++k)
              for (int j = 0; j < dim; ++j) {
                double s2 = 0.0;
                for (int m = 0; m < dim; ++m) s2 += ef.g(k, m, dim, q) * ef.g(j, m, dim, q);
                b.K[(static_cast<std::size_t>(k * dim + j) * nq + q) * W + l] = wj * s2;
              }
          }
        }
      }
      batches_.push_back(std::move(b));
    }
  }

  face_ref_.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) face_ref_[e].resize(mesh.face_interface[e].size());
  slots_.resize(mesh.interfaces.size());
  for (std::size_t i = 0; i < mesh.interfaces.size(); ++i) {
    const Interface& f = mesh.interfaces[i];
    const InterfaceTrace& t = disc.traces[i];
    face_ref_[f.left][f.left_face] = {static_cast<int>(i), 0};
    const int nl = disc.exps[f.left]->face(f.left_face).size();
    if (f.boundary()) {
      slots_[i][0].u.resize(nl);
      slots_[i][0].gn.resize(nl);
      continue;
    }
    face_ref_[f.right][f.right_face] = {static_cast<int>(i), 1};
    const int nr = disc.exps[f.right]->face(f.right_face).size();
    const bool shared = t.strategy == Strategy::SharedTrace;
    for (int s = 0; s < 2; ++s) {
      const int n = shared ? t.npts : (s == 0 ? nl : nr);
      slots_[i][s].u.resize(n);
      slots_[i][s].gn.resize(n);
    }
  }
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int f = 0; f < disc.exps[e]->num_faces(); ++f) {
      if (!disc.exps[e]->face(f).gatherable()) {
        throw Error("element " + std::to_string(e) + " face " + std::to_string(f) + " is not on the element grid");
      }
    }
  }
}

// ---- kernels --------------------------------------------------------------------

namespace {

struct Workspace {
  double* c;
  double* u;
  double* du;
  double* scratch;
  double* work;
  double* outc;
};

Workspace carve(std::vector<double>& ws, const Expansion& E, int W) {
  const std::size_t nc = E.ncoeffs(), nq = E.nphys(), dim = E.dim();
  const std::size_t need = W * (nc + nq + dim * nq + nq + E.workspace() + nc);
  if (ws.size() < need) ws.resize(need);
  double* p = ws.data();
  Workspace w;
  w.c = p;
  p += W * nc;
  w.u = p;
  p += W * nq;
  w.du = p;
  p += W * dim * nq;
  w.scratch = p;
  p += W * nq;
  w.work = p;
  p += W * E.workspace();
  w.outc = p;
  return w;
}

// F0 += sum_k D_k^T G_k; outc = B^T F0
template <int W>
void test_side(const Expansion& E, double* F0, const double* G, double* scratch, double* work, double* outc,
               CostCounter* cost) {
  const int nq = E.nphys();
  for (int k = 0; k < E.dim(); ++k) {
    auto dims = E.grid_dims();
    contract<W>(E.diff_t(k), dims, k, G + static_cast<std::size_t>(k) * nq * W, scratch, cost);
    for (int x = 0; x < nq * W; ++x) F0[x] += scratch[x];
  }
  evaluate_transpose<W>(E.tables(), -1, F0, outc, work, false, cost);
}

}  // namespace

template <int W>
void HelmholtzOperator::run_aver_jump(const Batch& b, const double* in, double* out, CostCounter* cost,
                                      std::vector<double>& ws) {
  const Expansion& E = *b.exp;
  const int nc = E.ncoeffs(), nq = E.nphys(), dim = E.dim();
  Workspace w = carve(ws, E, W);
  for (int l = 0; l < W; ++l) {
    const double* src = in + disc_.offsets[b.elems[l]];
    for (int i = 0; i < nc; ++i) w.c[i * W + l] = src[i];
  }
  evaluate<W>(E.tables(), -1, w.c, w.u, w.work, cost);
  for (int k = 0; k < dim; ++k) {
    auto dims = E.grid_dims();
    contract<W>(E.diff(k), dims, k, w.u, w.du + static_cast<std::size_t>(k) * nq * W, cost);
  }

  // Publish u and grad u . n on every face.
  if (publish_) {
    std::vector<double> ul, gl;
    for (int l = 0; l < b.count; ++l) {
      const int e = b.elems[l];
      const ElementFactors& ef = disc_.factors[e];
      for (int f = 0; f < E.num_faces(); ++f) {
        const FaceGrid& fg = E.face(f);
        const FaceFactors& ff = ef.faces[f];
        const int n = fg.size();
        ul.resize(n);
        gl.resize(n);
        for (int p = 0; p < n; ++p) {
          const int q = fg.phys_index[p];
          ul[p] = w.u[q * W + l];
          double gn = 0.0;
          for (int m = 0; m < dim; ++m) {
            double gm = 0.0;
            for (int k = 0; k < dim; ++k) gm += ef.g(k, m, dim, q) * w.du[(static_cast<std::size_t>(k) * nq + q) * W + l];
            gn += gm * ff.normal[p][m];
          }
          gl[p] = gn;
        }
        const FaceRef r = face_ref_[e][f];
        const InterfaceTrace& t = disc_.traces[r.iface];
        Slot& slot = slots_[r.iface][r.side];
        if (!t.boundary && t.strategy == Strategy::SharedTrace) {
          t.to_trace[r.side].apply(ul.data(), slot.u.data(), cost);
          t.to_trace[r.side].apply(gl.data(), slot.gn.data(), cost);
        } else {
          std::copy(ul.begin(), ul.end(), slot.u.begin());
          std::copy(gl.begin(), gl.end(), slot.gn.begin());
        }
      }
    }
  }

  // Volume terms: G_k = wJ sum_j (g g^T)_kj du_j, F0 = lambda wJ u.
  const double lambda = opt_.lambda;
  double d[3];
  for (int q = 0; q < nq; ++q) {
    const double wq = E.weights()[q];
    for (int l = 0; l < W; ++l) {
      const std::size_t ql = static_cast<std::size_t>(q) * W + l;
      for (int j = 0; j < dim; ++j) d[j] = w.du[j * static_cast<std::size_t>(nq) * W + ql];
      for (int k = 0; k < dim; ++k) {
        double s = 0.0;
        if (b.regular) {
          for (int j = 0; j < dim; ++j) s += b.K[(k * dim + j) * W + l] * d[j];
          s *= wq;
        } else {
          for (int j = 0; j < dim; ++j) s += b.K[(static_cast<std::size_t>(k * dim + j) * nq) * W + ql] * d[j];
        }
        w.du[k * static_cast<std::size_t>(nq) * W + ql] = s;
      }
      const double wj = b.regular ? wq * b.wj[l] : b.wj[ql];
      w.u[ql] *= lambda * wj;
    }
  }
  test_side<W>(E, w.u, w.du, w.scratch, w.work, w.outc, cost);
  for (int l = 0; l < b.count; ++l) {
    double* dst = out + disc_.offsets[b.elems[l]];
    for (int i = 0; i < nc; ++i) dst[i] = w.outc[i * W + l];
  }
}

void HelmholtzOperator::face_flux(int e, int f, std::vector<double>& T, std::vector<double>& S) const {
  const FaceRef r = face_ref_[e][f];
  const InterfaceTrace& t = disc_.traces[r.iface];
  const FaceFactors& ff = disc_.factors[e].faces[f];
  const int n = disc_.exps[e]->face(f).size();
  CostCounter* cost = opt_.track_cost ? const_cast<CostCounter*>(&cost_[1]) : nullptr;
  T.assign(n, 0.0);
  S.assign(n, 0.0);
  const Slot& own = slots_[r.iface][r.side];
  const double tau = t.tau;
  if (t.boundary) {
    for (int p = 0; p < n; ++p) {
      T[p] = (-own.gn[p] + 2.0 * tau * own.u[p]) * ff.wj[p];
      S[p] = -own.u[p] * ff.wj[p];
    }
    return;
  }
  const Slot& oth = slots_[r.iface][1 - r.side];
  if (t.strategy == Strategy::SharedTrace) {
    const int m = t.npts;
    std::vector<double> tw(m), sw(m);
    for (int p = 0; p < m; ++p) {
      const double ju = own.u[p] - oth.u[p];
      tw[p] = (-0.5 * (own.gn[p] - oth.gn[p]) + tau * ju) * t.metric.wj[p];
      sw[p] = -0.5 * ju * t.metric.wj[p];
    }
    t.to_trace[r.side].apply_transpose(tw.data(), T.data(), cost);
    t.to_trace[r.side].apply_transpose(sw.data(), S.data(), cost);
    return;
  }
  std::vector<double> uo(n), go(n);
  t.from_other[r.side].apply(oth.u.data(), uo.data(), cost);
  t.from_other[r.side].apply(oth.gn.data(), go.data(), cost);
  for (int p = 0; p < n; ++p) {
    const double ju = own.u[p] - uo[p];
    T[p] = (-0.5 * (own.gn[p] - go[p]) + tau * ju) * ff.wj[p];
    S[p] = -0.5 * ju * ff.wj[p];
  }
}

template <int W>
void HelmholtzOperator::run_trace_flux(const Batch& b, double* out, CostCounter* cost, std::vector<double>& ws) {
  const Expansion& E = *b.exp;
  const int nc = E.ncoeffs(), nq = E.nphys(), dim = E.dim();
  Workspace w = carve(ws, E, W);
  std::fill(w.u, w.u + static_cast<std::size_t>(nq) * W, 0.0);
  std::fill(w.du, w.du + static_cast<std::size_t>(dim) * nq * W, 0.0);
  std::vector<double> T, S;
  for (int l = 0; l < b.count; ++l) {
    const int e = b.elems[l];
    const ElementFactors& ef = disc_.factors[e];
    for (int f = 0; f < E.num_faces(); ++f) {
      face_flux(e, f, T, S);
      const FaceGrid& fg = E.face(f);
      const FaceFactors& ff = ef.faces[f];
      for (int p = 0; p < fg.size(); ++p) {
        const int q = fg.phys_index[p];
        const std::size_t ql = static_cast<std::size_t>(q) * W + l;
        w.u[ql] += T[p];
        for (int k = 0; k < dim; ++k) {
          double gn = 0.0;
          for (int m = 0; m < dim; ++m) gn += ef.g(k, m, dim, q) * ff.normal[p][m];
          w.du[k * static_cast<std::size_t>(nq) * W + ql] += S[p] * gn;
        }
      }
    }
  }
  test_side<W>(E, w.u, w.du, w.scratch, w.work, w.outc, cost);
  for (int l = 0; l < b.count; ++l) {
    double* dst = out + disc_.offsets[b.elems[l]];
    for (int i = 0; i < nc; ++i) dst[i] += w.outc[i * W + l];
  }
}

void HelmholtzOperator::for_batches(const std::function<void(const Batch&, std::vector<double>&, CostCounter*)>& fn,
                                    int phase) {
  if (opt_.track_cost) {
    std::vector<double> ws;
    for (const Batch& b : batches_) fn(b, ws, &cost_[phase]);
    return;
  }
  parallel_for(static_cast<int>(batches_.size()), opt_.threads, [&](int begin, int end) {
    std::vector<double> ws;
    for (int i = begin; i < end; ++i) fn(batches_[i], ws, nullptr);
  });
}

void HelmholtzOperator::aver_jump(std::span<const double> in, std::span<double> out) {
  if (in.size() != static_cast<std::size_t>(ndof()) || out.size() != in.size()) {
    throw Error("operator applied to a vector of the wrong size");
  }
  published_ = false;
  for_batches(
      [&](const Batch& b, std::vector<double>& ws, CostCounter* cost) {
        if (opt_.batch_width == 1) run_aver_jump<1>(b, in.data(), out.data(), cost, ws);
        else run_aver_jump<kBatchWidth>(b, in.data(), out.data(), cost, ws);
      },
      0);
}

void HelmholtzOperator::exchange() { published_ = true; }

void HelmholtzOperator::trace_flux(std::span<double> out) {
  if (!published_) throw Error("trace flux evaluated before the trace buffer was published");
  for_batches(
      [&](const Batch& b, std::vector<double>& ws, CostCounter* cost) {
        if (opt_.batch_width == 1) run_trace_flux<1>(b, out.data(), cost, ws);
        else run_trace_flux<kBatchWidth>(b, out.data(), cost, ws);
      },
      1);
  published_ = false;
}

void HelmholtzOperator::apply(std::span<const double> in, std::span<double> out) {
  aver_jump(in, out);
  exchange();
  trace_flux(out);
}

void HelmholtzOperator::apply_trace_path(std::span<const double> in, std::span<double> out) {
  publish_ = false;
  try {
    aver_jump(in, out);
  } catch (...) {
    publish_ = true;
    throw;
  }
  publish_ = true;
  const Mesh& mesh = *disc_.mesh;
  CostCounter* cost = opt_.track_cost ? &cost_[1] : nullptr;
  const int dim = mesh.dim;
  std::vector<double> u, g, gn, tw, sw, fu, fg;
  for (std::size_t i = 0; i < mesh.interfaces.size(); ++i) {
    const Interface& f = mesh.interfaces[i];
    const InterfaceTrace& t = disc_.traces[i];
    if (!t.eval[0].exp) throw Error("trace path needs face evaluators (enable trace_iproduct)");
    if (t.boundary) {
      const FaceEvaluator& fe = t.eval[0];
      const int n = fe.npts;
      u.resize(n);
      g.resize(static_cast<std::size_t>(dim) * n);
      trace_phys_eval(fe, in.data() + disc_.offsets[f.left], u.data(), g.data(), cost);
      fu.resize(n);
      fg.resize(static_cast<std::size_t>(dim) * n);
      for (int p = 0; p < n; ++p) {
        double gnp = 0.0;
        for (int m = 0; m < dim; ++m) gnp += g[m * n + p] * fe.geom.normal[p][m];
        fu[p] = (-gnp + 2.0 * t.tau * u[p]) * fe.geom.wj[p];
        const double s = -u[p] * fe.geom.wj[p];
        for (int m = 0; m < dim; ++m) fg[m * n + p] = s * fe.geom.normal[p][m];
      }
      trace_iproduct(fe, fu.data(), fg.data(), out.data() + disc_.offsets[f.left], cost);
      continue;
    }
    if (t.strategy != Strategy::SharedTrace) throw Error("trace path supports shared-trace interfaces only");
    const int n = t.npts;
    std::array<std::vector<double>, 2> us, gns;
    const int elem[2] = {f.left, f.right};
    for (int s = 0; s < 2; ++s) {
      const FaceEvaluator& fe = t.eval[s];
      u.resize(n);
      g.resize(static_cast<std::size_t>(dim) * n);
      trace_phys_eval(fe, in.data() + disc_.offsets[elem[s]], u.data(), g.data(), cost);
      gn.resize(n);
      for (int p = 0; p < n; ++p) {
        double v = 0.0;
        for (int m = 0; m < dim; ++m) v += g[m * n + p] * fe.geom.normal[p][m];
        gn[p] = v;
      }
      us[s].resize(n);
      gns[s].resize(n);
      t.eval_to_trace[s].apply(u.data(), us[s].data());
      t.eval_to_trace[s].apply(gn.data(), gns[s].data());
    }
    for (int s = 0; s < 2; ++s) {
      const FaceEvaluator& fe = t.eval[s];
      tw.resize(n);
      sw.resize(n);
      for (int p = 0; p < n; ++p) {
        const double ju = us[s][p] - us[1 - s][p];
        tw[p] = (-0.5 * (gns[s][p] - gns[1 - s][p]) + t.tau * ju) * t.metric.wj[p];
        sw[p] = -0.5 * ju * t.metric.wj[p];
      }
      fu.assign(n, 0.0);
      std::vector<double> sl(n, 0.0);
      t.eval_to_trace[s].apply_transpose(tw.data(), fu.data());
      t.eval_to_trace[s].apply_transpose(sw.data(), sl.data());
      fg.resize(static_cast<std::size_t>(dim) * n);
      for (int p = 0; p < n; ++p)
        for (int m = 0; m < dim; ++m) fg[m * n + p] = sl[p] * fe.geom.normal[p][m];
      trace_iproduct(fe, fu.data(), fg.data(), out.data() + disc_.offsets[elem[s]], cost);
    }
  }
}

// ---- right-hand side, projection, error ---------------------------------------------

std::vector<double> HelmholtzOperator::rhs(const ManufacturedCase& c) const {
  if (!c.f || !c.u) throw Error("manufactured case lacks forcing or boundary data");
  const Mesh& mesh = *disc_.mesh;
  std::vector<double> b(ndof(), 0.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Expansion& E = *disc_.exps[e];
    const ElementFactors& ef = disc_.factors[e];
    const int nq = E.nphys(), dim = E.dim();
    std::vector<double> F0(nq), G(static_cast<std::size_t>(dim) * nq, 0.0), scratch(nq), work(E.workspace());
    for (int q = 0; q < nq; ++q) F0[q] = -c.f(ef.x[q]) * E.weights()[q] * ef.J(q);
    for (int f = 0; f < E.num_faces(); ++f) {
      const FaceRef r = face_ref_[e][f];
      if (!disc_.traces[r.iface].boundary) continue;
      const double tau = disc_.traces[r.iface].tau;
      const FaceGrid& fg = E.face(f);
      const FaceFactors& ff = ef.faces[f];
      for (int p = 0; p < fg.size(); ++p) {
        const int q = fg.phys_index[p];
        const double gval = c.u(ff.x[p]);
        F0[q] += 2.0 * tau * gval * ff.wj[p];
        for (int k = 0; k < dim; ++k) {
          double gn = 0.0;
          for (int m = 0; m < dim; ++m) gn += ef.g(k, m, dim, q) * ff.normal[p][m];
          G[static_cast<std::size_t>(k) * nq + q] -= gval * ff.wj[p] * gn;
        }
      }
    }
    test_side<1>(E, F0.data(), G.data(), scratch.data(), work.data(), b.data() + disc_.offsets[e], nullptr);
  }
  return b;
}

std::vector<double> HelmholtzOperator::project(const ScalarField& u) const {
  const Mesh& mesh = *disc_.mesh;
  std::vector<double> out(ndof());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Expansion& E = *disc_.exps[e];
    const ElementFactors& ef = disc_.factors[e];
    const int nc = E.ncoeffs(), nq = E.nphys();
    Eigen::MatrixXd B(nq, nc);
    std::vector<double> unit(nc, 0.0);
    for (int i = 0; i < nc; ++i) {
      unit[i] = 1.0;
      const auto col = bwd_trans(E, unit);
      unit[i] = 0.0;
      for (int q = 0; q < nq; ++q) B(q, i) = col[q];
    }
    Eigen::VectorXd wj(nq), uq(nq);
    for (int q = 0; q < nq; ++q) {
      wj[q] = E.weights()[q] * ef.J(q);
      uq[q] = u(ef.x[q]);
    }
    const Eigen::MatrixXd M = B.transpose() * wj.asDiagonal() * B;
    const Eigen::VectorXd rhs = B.transpose() * wj.asDiagonal() * uq;
    const Eigen::VectorXd c = M.ldlt().solve(rhs);
    for (int i = 0; i < nc; ++i) out[disc_.offsets[e] + i] = c[i];
  }
  return out;
}

double HelmholtzOperator::l2_error(std::span<const double> coeffs, const ScalarField& exact) const {
  const Mesh& mesh = *disc_.mesh;
  double sum = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Expansion& E = *disc_.exps[e];
    const int dim = E.dim();
    const QuadRule r = quad_rule(QuadKind::GaussLegendre, E.key().npoints + 2);
    std::array<std::vector<double>, 3> pts;
    for (int k = 0; k < dim; ++k) pts[k] = r.points;
    const BasisTables t = E.tabulate(pts);
    std::vector<double> uh(t.size()), work(evaluate_workspace(t));
    evaluate<1>(t, -1, coeffs.data() + disc_.offsets[e], uh.data(), work.data());
    const int n = r.n;
    for (int q = 0; q < t.size(); ++q) {
      const int idx[3] = {q % n, (q / n) % n, q / (n * n)};
      Vec3 eta{0.0, 0.0, 0.0};
      double w = 1.0;
      for (int k = 0; k < dim; ++k) {
        eta[k] = r.points[idx[k]];
        w *= r.weights[idx[k]];
      }
      const Vec3 xi = duffy_expand(E.shape(), eta);
      const auto J = map_jacobian(mesh, e, xi);
      Eigen::Matrix3d jm = Eigen::Matrix3d::Identity();
      for (int m = 0; m < dim; ++m)
        for (int k = 0; k < dim; ++k) jm(m, k) = J[m][k];
      double jac = jm.determinant();
      if (E.shape() == Shape::Tri) jac *= 0.5 * (1.0 - eta[1]);
      const double diff = uh[q] - exact(map_point(mesh, e, xi));
      sum += w * jac * diff * diff;
    }
  }
  return std::sqrt(sum);
}

template void HelmholtzOperator::run_aver_jump<1>(const Batch&, const double*, double*, CostCounter*,
                                                  std::vector<double>&);
template void HelmholtzOperator::run_trace_flux<1>(const Batch&, double*, CostCounter*, std::vector<double>&);
#if DGSIPG_BATCH_WIDTH != 1
template void HelmholtzOperator::run_aver_jump<kBatchWidth>(const Batch&, const double*, double*, CostCounter*,
                                                            std::vector<double>&);
template void HelmholtzOperator::run_trace_flux<kBatchWidth>(const Batch&, double*, CostCounter*,
                                                             std::vector<double>&);
#endif

}  // namespace dgsipg
