#include "dgsipg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace dgsipg {

int Mesh::num_interior() const {
  return static_cast<int>(std::count_if(interfaces.begin(), interfaces.end(), [](const Interface& i) { return !i.boundary(); }));
}

int Mesh::num_boundary() const { return static_cast<int>(interfaces.size()) - num_interior(); }

Vec3 Mesh::centroid(int e) const {
  Vec3 c{0.0, 0.0, 0.0};
  for (int v : elements[e].vertices)
    for (int k = 0; k < 3; ++k) c[k] += vertices[v][k];
  for (double& x : c) x /= static_cast<double>(elements[e].vertices.size());
  return c;
}

std::string Mesh::dump() const {
  std::ostringstream os;
  char buf[128];
  os << "mesh dim=" << dim << " vertices=" << vertices.size() << " elements=" << elements.size()
     << " interfaces=" << interfaces.size() << "\n";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    std::snprintf(buf, sizeof buf, "v %zu %.17g %.17g %.17g\n", i, vertices[i][0], vertices[i][1], vertices[i][2]);
    os << buf;
  }
  for (std::size_t e = 0; e < elements.size(); ++e) {
    os << "e " << e << " " << to_string(elements[e].shape);
    for (int v : elements[e].vertices) os << " " << v;
    os << "\n";
  }
  for (std::size_t i = 0; i < interfaces.size(); ++i) {
    const auto& f = interfaces[i];
    os << "i " << i << " " << f.left << " " << f.left_face << " " << f.right << " " << f.right_face << " "
       << f.orientation << " " << f.tag << "\n";
  }
  return os.str();
}

Mesh generate_box(int dim, std::array<int, 3> nx, Shape shape, Vec3 lo, Vec3 hi) {
  const bool ok = (dim == 1 && shape == Shape::Seg) || (dim == 2 && (shape == Shape::Quad || shape == Shape::Tri)) ||
                  (dim == 3 && shape == Shape::Hex);
  if (!ok) {
    throw Error("cannot generate a " + std::to_string(dim) + "D box of " + std::string(to_string(shape)) + " elements");
  }
  for (int k = 0; k < dim; ++k)
    if (nx[k] < 1) throw Error("box mesh needs at least one element per direction");
  for (int k = dim; k < 3; ++k) nx[k] = 0;

  Mesh mesh;
  mesh.dim = dim;
  const int n0 = nx[0] + 1, n1 = nx[1] + 1, n2 = nx[2] + 1;
  for (int k = 0; k < n2; ++k)
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        Vec3 x{0.0, 0.0, 0.0};
        const int idx[3] = {i, j, k};
        for (int a = 0; a < dim; ++a) x[a] = lo[a] + (hi[a] - lo[a]) * idx[a] / nx[a];
        mesh.vertices.push_back(x);
      }
  auto vid = [&](int i, int j, int k) { return i + n0 * (j + n1 * k); };
  const int m0 = nx[0], m1 = std::max(nx[1], 1), m2 = std::max(nx[2], 1);
  for (int k = 0; k < m2; ++k)
    for (int j = 0; j < m1; ++j)
      for (int i = 0; i < m0; ++i) {
        if (shape == Shape::Seg) {
          mesh.elements.push_back({shape, {vid(i, 0, 0), vid(i + 1, 0, 0)}});
        } else if (shape == Shape::Quad) {
          mesh.elements.push_back({shape, {vid(i, j, 0), vid(i + 1, j, 0), vid(i, j + 1, 0), vid(i + 1, j + 1, 0)}});
        } else if (shape == Shape::Tri) {
          const int ll = vid(i, j, 0), lr = vid(i + 1, j, 0), hl = vid(i, j + 1, 0), hr = vid(i + 1, j + 1, 0);
          mesh.elements.push_back({shape, {ll, lr, hr}});
          mesh.elements.push_back({shape, {ll, hr, hl}});
        } else {
          std::vector<int> v;
          for (int b = 0; b < 8; ++b) v.push_back(vid(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1)));
          mesh.elements.push_back({shape, v});
        }
      }
  build_interfaces(mesh);
  return mesh;
}

// ---- orientation --------------------------------------------------------------

FaceOrientation face_orientation(int naxes, int code) {
  FaceOrientation o;
  if (naxes == 1) {
    o.sign[0] = (code & 1) ? -1 : 1;
  } else if (naxes == 2) {
    if (code & 1) o.perm = {1, 0};
    o.sign[0] = (code & 2) ? -1 : 1;
    o.sign[1] = (code & 4) ? -1 : 1;
  }
  return o;
}

int inverse_orientation(int naxes, int code) {
  if (naxes < 2 || !(code & 1)) return code;
  return 1 | ((code & 4) ? 2 : 0) | ((code & 2) ? 4 : 0);
}

std::array<double, 2> orient(int naxes, int code, std::array<double, 2> s) {
  const auto o = face_orientation(naxes, code);
  std::array<double, 2> t{0.0, 0.0};
  for (int k = 0; k < naxes; ++k) t[k] = o.sign[k] * s[o.perm[k]];
  return t;
}

int num_orientation_codes(int naxes) { return naxes == 0 ? 1 : (naxes == 1 ? 2 : 8); }

namespace {

int orientation_code(const std::vector<int>& L, const std::vector<int>& R) {
  if (L.size() == 1) return 0;
  if (L.size() == 2) return L[0] == R[0] ? 0 : 1;
  auto pos = [&](int gid) {
    for (int l = 0; l < 4; ++l)
      if (L[l] == gid) return l;
    throw Error("face vertices do not match");
  };
  const int p0 = pos(R[0]), p1 = pos(R[1]);
  const bool transpose = (p0 >> 1) != (p1 >> 1);
  const int axis0 = transpose ? 1 : 0;
  const int axis1 = transpose ? 0 : 1;
  const bool flip0 = ((p0 >> axis0) & 1) == 1;
  const bool flip1 = ((p0 >> axis1) & 1) == 1;
  return (transpose ? 1 : 0) | (flip0 ? 2 : 0) | (flip1 ? 4 : 0);
}

}  // namespace

void build_interfaces(Mesh& mesh) {
  mesh.interfaces.clear();
  mesh.face_interface.assign(mesh.elements.size(), {});
  std::map<std::vector<int>, int> open;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Element& el = mesh.elements[e];
    const int nf = shape_num_faces(el.shape);
    mesh.face_interface[e].assign(nf, -1);
    for (int f = 0; f < nf; ++f) {
      std::vector<int> gv;
      for (int lv : face_vertices(el.shape, f)) gv.push_back(el.vertices[lv]);
      std::vector<int> key = gv;
      std::sort(key.begin(), key.end());
      auto it = open.find(key);
      if (it == open.end()) {
        Interface iface;
        iface.left = e;
        iface.left_face = f;
        open.emplace(key, static_cast<int>(mesh.interfaces.size()));
        mesh.face_interface[e][f] = static_cast<int>(mesh.interfaces.size());
        mesh.interfaces.push_back(iface);
      } else {
        Interface& iface = mesh.interfaces[it->second];
        if (!iface.boundary()) throw Error("face shared by more than two elements");
        iface.right = e;
        iface.right_face = f;
        std::vector<int> lv;
        for (int v : face_vertices(mesh.elements[iface.left].shape, iface.left_face))
          lv.push_back(mesh.elements[iface.left].vertices[v]);
        iface.orientation = orientation_code(lv, gv);
        mesh.face_interface[e][f] = it->second;
      }
    }
  }
}

void perturb_vertices(Mesh& mesh, double amplitude, std::array<bool, 3> axes) {
  Vec3 lo{0, 0, 0}, hi{0, 0, 0}, h{0, 0, 0};
  for (int a = 0; a < mesh.dim; ++a) {
    std::set<double> coords;
    for (const auto& v : mesh.vertices) coords.insert(v[a]);
    lo[a] = *coords.begin();
    hi[a] = *coords.rbegin();
    h[a] = hi[a] - lo[a];
    double prev = lo[a];
    for (double c : coords) {
      if (c > prev) h[a] = std::min(h[a], c - prev);
      prev = c;
    }
  }
  const double pi = std::acos(-1.0);
  for (auto& v : mesh.vertices) {
    double phase = 0.0;
    for (int b = 0; b < mesh.dim; ++b)
      if (axes[b]) phase += (b + 1) * pi * (v[b] - lo[b]) / (hi[b] - lo[b]);
    Vec3 d{0, 0, 0};
    for (int a = 0; a < mesh.dim; ++a) {
      if (!axes[a]) continue;
      const double tol = 1e-12 * (hi[a] - lo[a]);
      if (std::abs(v[a] - lo[a]) < tol || std::abs(v[a] - hi[a]) < tol) continue;
      d[a] = amplitude * h[a] * std::sin(1.3 + 2.1 * a + phase);
    }
    for (int a = 0; a < mesh.dim; ++a) v[a] += d[a];
  }
}

// ---- element relabelling ------------------------------------------------------------

namespace {

struct SignedPerm {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};
};

std::vector<SignedPerm> rotations(int dim) {
  std::vector<SignedPerm> out;
  std::array<int, 3> p{0, 1, 2};
  do {
    bool valid = true;
    for (int k = dim; k < 3; ++k) valid = valid && p[k] == k;
    if (!valid) continue;
    int inversions = 0;
    for (int a = 0; a < dim; ++a)
      for (int b = a + 1; b < dim; ++b) inversions += p[a] > p[b];
    for (int s = 0; s < (1 << dim); ++s) {
      SignedPerm sp;
      sp.perm = p;
      int neg = 0;
      for (int k = 0; k < dim; ++k) {
        sp.sign[k] = ((s >> k) & 1) ? -1 : 1;
        neg += (s >> k) & 1;
      }
      if ((inversions + neg) % 2 == 0) out.push_back(sp);
    }
  } while (std::next_permutation(p.begin(), p.end()));
  // identity first so that ties keep the current labelling
  std::stable_partition(out.begin(), out.end(), [](const SignedPerm& sp) {
    return sp.perm == std::array<int, 3>{0, 1, 2} && sp.sign == std::array<int, 3>{1, 1, 1};
  });
  return out;
}

std::vector<int> apply_rotation(const Element& el, int dim, const SignedPerm& sp) {
  if (el.shape == Shape::Tri) {
    // cyclic shift stored in perm[0]
    const int s = sp.perm[0];
    return {el.vertices[s % 3], el.vertices[(s + 1) % 3], el.vertices[(s + 2) % 3]};
  }
  std::vector<int> out(el.vertices.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    int o = 0;
    for (int k = 0; k < dim; ++k) {
      const int bk = (b >> k) & 1;
      const int ob = sp.sign[k] > 0 ? bk : 1 - bk;
      o |= ob << sp.perm[k];
    }
    out[b] = el.vertices[o];
  }
  return out;
}

std::vector<SignedPerm> element_rotations(Shape shape, int dim) {
  if (shape == Shape::Tri) {
    std::vector<SignedPerm> out(3);
    for (int s = 0; s < 3; ++s) out[s].perm[0] = s;
    return out;
  }
  return rotations(dim);
}

double alignment_score(const Mesh& mesh, const Element& el, const std::vector<int>& v) {
  auto dir = [&](int from, int to) {
    Vec3 d;
    double n = 0.0;
    for (int k = 0; k < 3; ++k) {
      d[k] = mesh.vertices[to][k] - mesh.vertices[from][k];
      n += d[k] * d[k];
    }
    n = std::sqrt(n);
    for (double& x : d) x /= n;
    return d;
  };
  double score = 0.0;
  if (el.shape == Shape::Tri) {
    score += dir(v[0], v[1])[0] + dir(v[0], v[2])[1];
  } else {
    for (int k = 0; k < mesh.dim; ++k) score += dir(v[0], v[1 << k])[k];
  }
  return score;
}

}  // namespace

void rotate_elements(Mesh& mesh, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& el : mesh.elements) {
    const auto rots = element_rotations(el.shape, mesh.dim);
    std::uniform_int_distribution<std::size_t> pick(0, rots.size() - 1);
    el.vertices = apply_rotation(el, mesh.dim, rots[pick(rng)]);
  }
  build_interfaces(mesh);
}

int canonicalize_orientations(Mesh& mesh) {
  for (auto& el : mesh.elements) {
    const auto rots = element_rotations(el.shape, mesh.dim);
    std::vector<int> best = el.vertices;
    double best_score = alignment_score(mesh, el, best);
    for (const auto& r : rots) {
      auto cand = apply_rotation(el, mesh.dim, r);
      const double s = alignment_score(mesh, el, cand);
      if (s > best_score + 1e-12) {
        best_score = s;
        best = cand;
      }
    }
    el.vertices = best;
  }
  build_interfaces(mesh);
  std::set<int> codes;
  for (const auto& f : mesh.interfaces)
    if (!f.boundary()) codes.insert(f.orientation);
  return static_cast<int>(codes.size());
}

// ---- mapping ------------------------------------------------------------------

Vec3 map_point(const Mesh& mesh, int e, const Vec3& xi) {
  const Element& el = mesh.elements[e];
  Vec3 x{0.0, 0.0, 0.0};
  if (el.shape == Shape::Tri) {
    const double c[3] = {-0.5 * (xi[0] + xi[1]), 0.5 * (1.0 + xi[0]), 0.5 * (1.0 + xi[1])};
    for (int v = 0; v < 3; ++v)
      for (int m = 0; m < 3; ++m) x[m] += c[v] * mesh.vertices[el.vertices[v]][m];
    return x;
  }
  const int d = shape_dim(el.shape);
  for (std::size_t v = 0; v < el.vertices.size(); ++v) {
    double c = 1.0;
    for (int k = 0; k < d; ++k) c *= ((v >> k) & 1) ? 0.5 * (1.0 + xi[k]) : 0.5 * (1.0 - xi[k]);
    for (int m = 0; m < 3; ++m) x[m] += c * mesh.vertices[el.vertices[v]][m];
  }
  return x;
}

std::array<Vec3, 3> map_jacobian(const Mesh& mesh, int e, const Vec3& xi) {
  const Element& el = mesh.elements[e];
  std::array<Vec3, 3> J{};
  if (el.shape == Shape::Tri) {
    const auto& a = mesh.vertices[el.vertices[0]];
    const auto& b = mesh.vertices[el.vertices[1]];
    const auto& c = mesh.vertices[el.vertices[2]];
    for (int m = 0; m < 3; ++m) {
      J[m][0] = 0.5 * (b[m] - a[m]);
      J[m][1] = 0.5 * (c[m] - a[m]);
    }
    return J;
  }
  const int d = shape_dim(el.shape);
  for (std::size_t v = 0; v < el.vertices.size(); ++v) {
    for (int k = 0; k < d; ++k) {
      double c = 1.0;
      for (int j = 0; j < d; ++j) {
        const bool hi = (v >> j) & 1;
        if (j == k) c *= hi ? 0.5 : -0.5;
        else c *= hi ? 0.5 * (1.0 + xi[j]) : 0.5 * (1.0 - xi[j]);
      }
      for (int m = 0; m < 3; ++m) J[m][k] += c * mesh.vertices[el.vertices[v]][m];
    }
  }
  return J;
}

bool is_affine(const Mesh& mesh, int e) {
  const Element& el = mesh.elements[e];
  if (el.shape == Shape::Tri || el.shape == Shape::Seg) return true;
  const int d = shape_dim(el.shape);
  const auto& x0 = mesh.vertices[el.vertices[0]];
  double scale = 0.0;
  for (int v : el.vertices)
    for (int m = 0; m < 3; ++m) scale = std::max(scale, std::abs(mesh.vertices[v][m] - x0[m]));
  for (std::size_t v = 0; v < el.vertices.size(); ++v) {
    for (int m = 0; m < 3; ++m) {
      double pred = x0[m];
      for (int k = 0; k < d; ++k)
        if ((v >> k) & 1) pred += mesh.vertices[el.vertices[1u << k]][m] - x0[m];
      if (std::abs(pred - mesh.vertices[el.vertices[v]][m]) > 1e-13 * scale) return false;
    }
  }
  return true;
}

// ---- geometric factors --------------------------------------------------------

namespace {

// d eta_k / d x_m at a point; zero at the collapsed vertex.
Eigen::Matrix3d deta_dx_at(const Mesh& mesh, int e, Shape shape, int dim, const Vec3& eta, double* detJ) {
  const Vec3 xi = duffy_expand(shape, eta);
  const auto J = map_jacobian(mesh, e, xi);
  Eigen::Matrix3d jm = Eigen::Matrix3d::Identity();
  for (int m = 0; m < dim; ++m)
    for (int k = 0; k < dim; ++k) jm(m, k) = J[m][k];
  *detJ = jm.determinant();
  Eigen::Matrix3d dxi_dx = jm.inverse();
  if (shape != Shape::Tri) return dxi_dx;
  Eigen::Matrix3d deta_dxi = Eigen::Matrix3d::Identity();
  if (eta[1] == 1.0) {
    deta_dxi.setZero();
  } else {
    deta_dxi(0, 0) = 2.0 / (1.0 - eta[1]);
    deta_dxi(0, 1) = (1.0 + eta[0]) / (1.0 - eta[1]);
  }
  return deta_dxi * dxi_dx;
}

Vec3 dxi_dt(Shape shape, const FaceGrid& fg, int a) {
  Vec3 d{0.0, 0.0, 0.0};
  if (shape == Shape::Tri) {
    if (fg.normal_dir == 1) d = {1.0, 0.0, 0.0};        // AB
    else if (fg.fixed_value > 0) d = {-1.0, 1.0, 0.0};  // BC
    else d = {0.0, 1.0, 0.0};                           // AC
    return d;
  }
  d[fg.tangential_dir[a]] = 1.0;
  return d;
}

Vec3 reference_normal(Shape shape, const FaceGrid& fg) {
  Vec3 n{0.0, 0.0, 0.0};
  if (shape == Shape::Tri && fg.normal_dir == 0 && fg.fixed_value > 0) return {1.0, 1.0, 0.0};
  n[fg.normal_dir] = fg.fixed_value;
  return n;
}

}  // namespace

FaceFactors face_factors(const Mesh& mesh, int e, const Expansion& exp, int face,
                         const std::array<std::vector<double>, 2>& params,
                         const std::array<std::vector<double>, 2>& weights) {
  const Shape shape = exp.shape();
  const int dim = exp.dim();
  const FaceGrid& fg = exp.face(face);
  FaceFactors ff;
  const int n0 = fg.naxes > 0 ? static_cast<int>(params[0].size()) : 1;
  const int n1 = fg.naxes > 1 ? static_cast<int>(params[1].size()) : 1;
  ff.npts = n0 * n1;
  ff.wj.resize(ff.npts);
  ff.normal.resize(ff.npts);
  ff.x.resize(ff.npts);
  ff.deta_dx.resize(static_cast<std::size_t>(dim) * dim * ff.npts);
  const Vec3 nref = reference_normal(shape, fg);
  for (int b = 0; b < n1; ++b) {
    for (int a = 0; a < n0; ++a) {
      const int p = a + n0 * b;
      std::array<double, 2> t{fg.naxes > 0 ? params[0][a] : 0.0, fg.naxes > 1 ? params[1][b] : 0.0};
      const Vec3 eta = exp.face_eta(face, t);
      const Vec3 xi = duffy_expand(shape, eta);
      ff.x[p] = map_point(mesh, e, xi);
      const auto J = map_jacobian(mesh, e, xi);
      double detJ = 0.0;
      const Eigen::Matrix3d g = deta_dx_at(mesh, e, shape, dim, eta, &detJ);
      for (int k = 0; k < dim; ++k)
        for (int m = 0; m < dim; ++m) ff.deta_dx[(k * dim + m) * ff.npts + p] = g(k, m);
      // physical outward direction from the reference normal
      Eigen::Matrix3d jm = Eigen::Matrix3d::Identity();
      for (int m = 0; m < dim; ++m)
        for (int k = 0; k < dim; ++k) jm(m, k) = J[m][k];
      const Eigen::Matrix3d dxi_dx = jm.inverse();
      Eigen::Vector3d guide = Eigen::Vector3d::Zero();
      for (int k = 0; k < dim; ++k)
        for (int m = 0; m < dim; ++m) guide[m] += nref[k] * dxi_dx(k, m);
      std::array<Eigen::Vector3d, 2> tan;
      for (int s = 0; s < fg.naxes; ++s) {
        const Vec3 d = dxi_dt(shape, fg, s);
        tan[s].setZero();
        for (int m = 0; m < dim; ++m)
          for (int k = 0; k < dim; ++k) tan[s][m] += J[m][k] * d[k];
      }
      Eigen::Vector3d n;
      double sj = 1.0;
      if (dim == 1) {
        n = Eigen::Vector3d(guide[0] > 0 ? 1.0 : -1.0, 0.0, 0.0);
      } else if (dim == 2) {
        sj = tan[0].norm();
        n = Eigen::Vector3d(tan[0][1], -tan[0][0], 0.0) / sj;
      } else {
        const Eigen::Vector3d c = tan[0].cross(tan[1]);
        sj = c.norm();
        n = c / sj;
      }
      if (n.dot(guide) < 0) n = -n;
      const double w = (fg.naxes > 0 ? weights[0][a] : 1.0) * (fg.naxes > 1 ? weights[1][b] : 1.0);
      ff.wj[p] = w * sj;
      ff.area += ff.wj[p];
      ff.normal[p] = {n[0], n[1], n[2]};
    }
  }
  return ff;
}

ElementFactors element_factors(const Mesh& mesh, int e, const Expansion& exp) {
  ElementFactors ef;
  const Shape shape = exp.shape();
  const int dim = exp.dim();
  const int nq = exp.nphys();
  ef.regular = shape != Shape::Tri && is_affine(mesh, e);
  const int n = ef.regular ? 1 : nq;
  ef.jac.resize(n);
  ef.deta_dx.resize(static_cast<std::size_t>(dim) * dim * n);
  ef.x.resize(nq);
  for (int q = 0; q < nq; ++q) {
    const Vec3 eta = exp.grid_eta(q);
    ef.x[q] = map_point(mesh, e, duffy_expand(shape, eta));
    if (q >= n) continue;
    const Vec3 at = ef.regular ? Vec3{0.0, 0.0, 0.0} : eta;
    double detJ = 0.0;
    const Eigen::Matrix3d g = deta_dx_at(mesh, e, shape, dim, at, &detJ);
    if (!(detJ > 0.0)) throw Error("element " + std::to_string(e) + " has a non-positive Jacobian");
    const double duffy = shape == Shape::Tri ? 0.5 * (1.0 - eta[1]) : 1.0;
    ef.jac[q] = detJ * duffy;
    for (int k = 0; k < dim; ++k)
      for (int m = 0; m < dim; ++m) ef.deta_dx[(k * dim + m) * n + q] = g(k, m);
  }
  for (int q = 0; q < nq; ++q) ef.volume += exp.weights()[q] * ef.J(q);
  for (int f = 0; f < exp.num_faces(); ++f) {
    const FaceGrid& fg = exp.face(f);
    ef.faces.push_back(face_factors(mesh, e, exp, f, fg.points, fg.weights));
  }
  return ef;
}

// ---- orders -------------------------------------------------------------------

RegionPredicate half_domain(int axis, double threshold) {
  return [axis, threshold](const Vec3& x) { return x[axis] > threshold; };
}

RegionPredicate centered_box(double half_width, int dim) {
  return [half_width, dim](const Vec3& x) {
    for (int k = 0; k < dim; ++k)
      if (std::abs(x[k]) > half_width) return false;
    return true;
  };
}

OrderMap assign_orders(const Mesh& mesh, Order base, const RegionPredicate& refined_region, Order refined) {
  OrderMap orders(mesh.elements.size(), base);
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (refined_region && refined_region(mesh.centroid(e))) orders[e] = refined;
  return orders;
}

std::vector<int> nonconforming_interfaces(const Mesh& mesh, const OrderMap& orders) {
  std::vector<int> out;
  for (std::size_t i = 0; i < mesh.interfaces.size(); ++i) {
    const auto& f = mesh.interfaces[i];
    if (!f.boundary() && orders[f.left] != orders[f.right]) out.push_back(static_cast<int>(i));
  }
  return out;
}

OrderMap insert_transition_layer(const Mesh& mesh, const OrderMap& orders) {
  std::set<Order> levels(orders.begin(), orders.end());
  if (levels.size() > 2) throw Error("transition layer supports at most two order levels");
  if (levels.size() < 2) return orders;
  const Order lo = *levels.begin();
  const Order hi = *levels.rbegin();
  const bool lo_is_background = lo.np < hi.np || (lo.np == hi.np && lo.nq <= hi.nq);
  const Order background = lo_is_background ? lo : hi;
  const Order refined = lo_is_background ? hi : lo;
  OrderMap out = orders;
  for (const auto& f : mesh.interfaces) {
    if (f.boundary()) continue;
    const bool lref = orders[f.left] == refined, rref = orders[f.right] == refined;
    if (lref == rref) continue;
    const int bg = lref ? f.right : f.left;
    out[bg] = {background.np, refined.nq};
  }
  return out;
}

}  // namespace dgsipg
