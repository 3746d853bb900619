#pragma once

// Structured box meshes, geometric factors, interface topology and
// per-element order assignment.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dgsipg/stdregions.hpp"

namespace dgsipg {

using Vec3 = std::array<double, 3>;

struct Element {
  Shape shape = Shape::Quad;
  std::vector<int> vertices;  // local order follows reference_vertices(shape)
};

/// A face shared by two elements, or a boundary face (right < 0).
/// `orientation` maps the left face parameters s to the right ones t:
/// t_k = sign_k * s_perm[k] (see face_orientation).
struct Interface {
  int left = -1;
  int left_face = -1;
  int right = -1;
  int right_face = -1;
  int orientation = 0;
  int tag = 0;

  bool boundary() const { return right < 0; }
};

struct Mesh {
  int dim = 2;
  std::vector<Vec3> vertices;
  std::vector<Element> elements;
  std::vector<Interface> interfaces;
  std::vector<std::vector<int>> face_interface;  // [elem][face] -> interface

  int num_elements() const { return static_cast<int>(elements.size()); }
  int num_interior() const;
  int num_boundary() const;
  Vec3 centroid(int e) const;
  /// One record per vertex, element and interface; see README for fields.
  std::string dump() const;
};

Mesh generate_box(int dim, std::array<int, 3> nx, Shape shape, Vec3 lo = {-1.0, -1.0, -1.0},
                  Vec3 hi = {1.0, 1.0, 1.0});

/// (Re)build interfaces and orientation codes from element vertex lists.
void build_interfaces(Mesh& mesh);

/// Smooth displacement of vertices along the selected axes. A vertex moves
/// along axis a only if it is not on the domain boundary plane normal to a,
/// and the displacement depends only on the selected coordinates, so
/// unselected directions stay straight. Amplitude is relative to the local
/// element size.
void perturb_vertices(Mesh& mesh, double amplitude, std::array<bool, 3> axes);

/// Apply a random orientation-preserving relabelling of each element's
/// local axes (testing aid).
void rotate_elements(Mesh& mesh, std::uint64_t seed);

/// Relabel local axes so that they align with the global axes as far as
/// possible. Returns the number of distinct interior orientation codes.
int canonicalize_orientations(Mesh& mesh);

// ---- orientation --------------------------------------------------------------

struct FaceOrientation {
  std::array<int, 2> perm{0, 1};
  std::array<int, 2> sign{1, 1};
};

/// Decode an orientation code for a face with `naxes` parameters. Edge codes
/// are 0 (same direction) and 1 (reversed); quad-face codes are
/// transpose + 2 flip0 + 4 flip1.
FaceOrientation face_orientation(int naxes, int code);
int inverse_orientation(int naxes, int code);
std::array<double, 2> orient(int naxes, int code, std::array<double, 2> s);
int num_orientation_codes(int naxes);

// ---- mapping ----------------------------------------------------------------

/// x(xi) for element e.
Vec3 map_point(const Mesh& mesh, int e, const Vec3& xi);
/// dx_m/dxi_k, stored as J[m][k].
std::array<Vec3, 3> map_jacobian(const Mesh& mesh, int e, const Vec3& xi);
bool is_affine(const Mesh& mesh, int e);

// ---- geometric factors --------------------------------------------------------

struct FaceFactors {
  int npts = 0;
  std::vector<double> wj;        // quadrature weight * surface Jacobian
  std::vector<Vec3> normal;      // outward unit normal
  std::vector<Vec3> x;           // physical coordinates
  std::vector<double> deta_dx;   // [(k * dim + m) * npts + p]
  double area = 0.0;
};

struct ElementFactors {
  bool regular = false;
  std::vector<double> jac;       // size 1 if regular, else nphys; includes the Duffy factor
  std::vector<double> deta_dx;   // [(k * dim + m) * n + q], n = 1 if regular
  std::vector<Vec3> x;           // physical coordinates of grid points
  std::vector<FaceFactors> faces;
  double volume = 0.0;

  double J(int q) const { return regular ? jac[0] : jac[q]; }
  double g(int k, int m, int dim, int q) const {
    const int n = regular ? 1 : static_cast<int>(jac.size());
    return deta_dx[(k * dim + m) * n + (regular ? 0 : q)];
  }
};

/// Face factors at the tensor points `params` (per face axis, in that face's
/// parameters) with matching weights.
FaceFactors face_factors(const Mesh& mesh, int e, const Expansion& exp, int face,
                         const std::array<std::vector<double>, 2>& params,
                         const std::array<std::vector<double>, 2>& weights);

ElementFactors element_factors(const Mesh& mesh, int e, const Expansion& exp);

// ---- orders -------------------------------------------------------------------

struct Order {
  int np = 2;
  int nq = 3;
  auto operator<=>(const Order&) const = default;
};

using OrderMap = std::vector<Order>;
using RegionPredicate = std::function<bool(const Vec3&)>;

RegionPredicate half_domain(int axis, double threshold = 0.0);
RegionPredicate centered_box(double half_width, int dim);

OrderMap assign_orders(const Mesh& mesh, Order base, const RegionPredicate& refined_region, Order refined);
/// Interior interfaces whose sides carry different orders.
std::vector<int> nonconforming_interfaces(const Mesh& mesh, const OrderMap& orders);
/// Background elements face-adjacent to the refined region take the
/// background N_P and the refined N_Q.
OrderMap insert_transition_layer(const Mesh& mesh, const OrderMap& orders);

}  // namespace dgsipg
