#include <cmath>
#include <numbers>
#include <random>

#include "checks.hpp"
#include "doctest.h"
#include "dgsipg/krylov.hpp"
#include "dgsipg/sipg.hpp"

using namespace dgsipg;

namespace {

double fd_laplacian(const ScalarField& u, const Vec3& x, int dim) {
  const double h = 1e-3;
  double lap = 0.0;
  for (int d = 0; d < dim; ++d) {
    Vec3 p = x, m = x;
    p[d] += h;
    m[d] -= h;
    lap += (u(p) - 2.0 * u(x) + u(m)) / (h * h);
  }
  return lap;
}

struct Setup {
  Mesh mesh;
  Discretisation disc;
  std::unique_ptr<HelmholtzOperator> op;
};

std::unique_ptr<Setup> conforming(Shape s, int np, double perturb, OperatorOptions oo = {}) {
  auto st = std::make_unique<Setup>();
  const int dim = shape_dim(s);
  st->mesh = generate_box(dim, {dim == 3 ? 2 : 3, dim == 3 ? 2 : 3, 2}, s);
  if (perturb > 0.0) perturb_vertices(st->mesh, perturb, {true, true, dim == 3});
  DiscretisationOptions opt;
  opt.basis = s == Shape::Tri ? BasisKind::ModifiedModal : BasisKind::Lagrange;
  st->disc = discretise(st->mesh, OrderMap(st->mesh.num_elements(), Order{np, np + 1}), opt);
  st->op = std::make_unique<HelmholtzOperator>(st->disc, oo);
  return st;
}

LinearOperator wrap(HelmholtzOperator& op) {
  return [&op](std::span<const double> in, std::span<double> out) { op.apply(in, out); };
}

}  // namespace

TEST_CASE("manufactured forcing is the Laplacian minus lambda u") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> d(-0.9, 0.9);
  for (int dim : {1, 2, 3}) {
    for (const ManufacturedCase& c :
         {sinusoidal_case(dim, std::numbers::pi, 1.5), gaussian_case(dim, 0.6, 1.5, {0.1, -0.2, 0.05})}) {
      for (int i = 0; i < 10; ++i) {
        const Vec3 x{d(rng), dim > 1 ? d(rng) : 0.0, dim > 2 ? d(rng) : 0.0};
        const double ref = fd_laplacian(c.u, x, dim) - 1.5 * c.u(x);
        CHECK(forcing_eval(c, x) == doctest::Approx(ref).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("one-dimensional operator matches a hand-assembled SIPG matrix") {
  const int np = 3, nq = 5;
  const double lambda = 1.0, C = 10.0;
  Mesh mesh = generate_box(1, {2, 1, 1}, Shape::Seg);
  DiscretisationOptions opt;
  opt.tau_constant = C;
  const Discretisation disc = discretise(mesh, OrderMap(2, Order{np, nq}), opt);
  OperatorOptions oo;
  oo.lambda = lambda;
  HelmholtzOperator op(disc, oo);
  const Eigen::MatrixXd A = probe_dense(wrap(op), op.ndof()).A;

  // oracle: Lagrange basis on GLL nodes, exact integration, h = 1 per element
  const auto nodes = quad_rule(QuadKind::GaussLobatto, np).points;
  const QuadRule g = quad_rule(QuadKind::GaussLegendre, 8);
  const Matrix B = lagrange_interp_matrix(nodes, g.points);
  const Matrix D = lagrange_deriv_matrix(nodes, g.points);
  const std::vector<double> ends{-1.0, 1.0};
  const Matrix Be = lagrange_interp_matrix(nodes, ends);
  const Matrix De = lagrange_deriv_matrix(nodes, ends);
  const double h = 1.0, jac = h / 2.0, tau = C * (np - 1) * (np - 1) / h;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * np, 2 * np);
  for (int e = 0; e < 2; ++e)
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < g.points.size(); ++q)
          s += g.weights[q] * jac * (D(q, i) * D(q, j) / (jac * jac) + lambda * B(q, i) * B(q, j));
        R(e * np + i, e * np + j) += s;
      }
  // side value and physical derivative of mode i at end `end` (0 left, 1 right)
  auto val = [&](int i, int end) { return Be(end, i); };
  auto der = [&](int i, int end) { return De(end, i) / jac; };
  // boundary faces: x = -1 on element 0 and x = 1 on element 1
  for (auto [e, end, n] : {std::tuple{0, 0, -1.0}, std::tuple{1, 1, 1.0}})
    for (int i = 0; i < np; ++i)
      for (int j = 0; j < np; ++j)
        R(e * np + i, e * np + j) += -val(i, end) * der(j, end) * n - der(i, end) * n * val(j, end) +
                                     2.0 * tau * val(i, end) * val(j, end);
  // interior face x = 0: element 0 at its right end, element 1 at its left end
  const int end[2] = {1, 0};
  const double nrm[2] = {1.0, -1.0};
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t) {
      const double sign = s == t ? 1.0 : -1.0;
      for (int i = 0; i < np; ++i)
        for (int j = 0; j < np; ++j) {
          const double v = val(i, end[s]), dv = der(i, end[s]);
          const double u = val(j, end[t]), du = der(j, end[t]);
          R(s * np + i, t * np + j) += -v * 0.5 * du * nrm[s] - 0.5 * dv * nrm[s] * sign * u + tau * v * sign * u;
        }
    }
  CHECK((A - R).cwiseAbs().maxCoeff() < 1e-12 * R.cwiseAbs().maxCoeff());

  // right-hand side: -(v, f) on the element rule plus the ghost-state Dirichlet terms
  const ManufacturedCase c = sinusoidal_case(1, 2.0, lambda);
  const auto b = op.rhs(c);
  const QuadRule gr = quad_rule(QuadKind::GaussLobatto, nq);
  const Matrix Bh = lagrange_interp_matrix(nodes, gr.points);
  std::vector<double> ref(2 * np, 0.0);
  for (int e = 0; e < 2; ++e)
    for (int i = 0; i < np; ++i)
      for (std::size_t q = 0; q < gr.points.size(); ++q) {
        const double x = -1.0 + e + (gr.points[q] + 1.0) * jac;
        ref[e * np + i] -= gr.weights[q] * jac * Bh(q, i) * c.f({x, 0.0, 0.0});
      }
  for (auto [e, endp, n] : {std::tuple{0, 0, -1.0}, std::tuple{1, 1, 1.0}}) {
    const double gx = c.u({n, 0.0, 0.0});
    for (int i = 0; i < np; ++i) ref[e * np + i] += -der(i, endp) * n * gx + 2.0 * tau * val(i, endp) * gx;
  }
  CHECK(oracle::rel_diff(b, ref) < 1e-10);
}

TEST_CASE("operator is symmetric and positive definite on conforming meshes") {
  for (Shape s : {Shape::Quad, Shape::Tri, Shape::Hex}) {
    CAPTURE(to_string(s));
    auto st = conforming(s, 3, 0.15);
    const Eigen::MatrixXd A = probe_dense(wrap(*st->op), st->op->ndof()).A;
    CHECK(asymmetry_norm(A) < 1e-12);
    CHECK(positive_definite(A));
  }
}

TEST_CASE("discrete solutions are reproduced exactly") {
  // u of degree 2 per variable lies in the space for np = 3 on affine meshes
  for (Shape s : {Shape::Quad, Shape::Tri, Shape::Hex}) {
    CAPTURE(to_string(s));
    const int dim = shape_dim(s);
    auto st = conforming(s, 3, 0.0);
    ManufacturedCase c;
    c.u = [](const Vec3& x) { return 0.5 + x[0] * x[1] - 0.3 * x[0] * x[0] + 0.7 * x[2] * x[2] + 0.2 * x[1]; };
    c.f = [dim](const Vec3& x) {
      const double lap = -0.6 + (dim == 3 ? 1.4 : 0.0);
      return lap - (0.5 + x[0] * x[1] - 0.3 * x[0] * x[0] + 0.7 * x[2] * x[2] + 0.2 * x[1]);
    };
    const auto uh = st->op->project(c.u);
    CHECK(st->op->l2_error(uh, c.u) < 1e-12);
    std::vector<double> Au(uh.size());
    st->op->apply(uh, Au);
    CHECK(oracle::rel_diff(Au, st->op->rhs(c)) < 1e-11);
  }
}

TEST_CASE("phases compose to apply and are independent of thread count") {
  std::mt19937_64 rng(32);
  for (Shape s : {Shape::Quad, Shape::Hex}) {
    auto one = conforming(s, 4, 0.1);
    OperatorOptions two_threads;
    two_threads.threads = 2;
    auto two = conforming(s, 4, 0.1, two_threads);
    const auto x = oracle::random_vector(one->op->ndof(), rng);
    std::vector<double> a(x.size()), b(x.size()), c(x.size());
    CHECK_THROWS_AS(one->op->trace_flux(c), Error);
    one->op->apply(x, a);
    two->op->apply(x, b);
    CHECK(oracle::rel_diff(a, b) < 1e-14);
    one->op->aver_jump(x, c);
    one->op->exchange();
    one->op->trace_flux(c);
    CHECK(oracle::rel_diff(a, c) < 1e-14);
  }
}
