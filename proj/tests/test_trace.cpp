#include <random>

#include "checks.hpp"
#include "doctest.h"

using namespace dgsipg;

namespace {

double poly2(double s, double t) { return 0.3 + s - 0.7 * s * s * s + 0.2 * t + s * t * t - 0.4 * t * t * t; }

}  // namespace

TEST_CASE("point-to-point certificate reproduces the mixed-order verdicts") {
  const auto gll = QuadKind::GaussLobatto;
  auto cert = [&](Order a, Order b) { return certify_p2p({a, gll}, {b, gll}, 1); };
  const auto c1 = cert({3, 4}, {5, 6});
  CHECK_FALSE(c1.condition1);
  CHECK(c1.required_degree == 7);
  CHECK(c1.actual_degree == 5);
  CHECK_FALSE(c1.symmetric());
  const auto c2 = cert({3, 5}, {5, 6});
  CHECK(c2.condition1);
  CHECK(c2.required_degree == 7);
  CHECK(c2.actual_degree == 7);
  CHECK(c2.symmetric());
  const auto c3 = cert({4, 5}, {5, 6});
  CHECK(c3.condition1);
  CHECK(c3.required_degree == 8);
  CHECK_FALSE(c3.condition2);
  // the low side is found regardless of argument order
  CHECK(cert({5, 6}, {3, 5}).low_side == 1);
  CHECK(cert({5, 6}, {3, 5}).symmetric());
  CHECK(cert({3, 6}, {3, 4}).low_side == 1);
}

TEST_CASE("face maps interpolate polynomials under every orientation") {
  const auto src1 = quad_rule(QuadKind::GaussLobatto, 4).points;
  const auto tgt1 = quad_rule(QuadKind::GaussLegendre, 5).points;
  for (int naxes : {1, 2})
    for (int code = 0; code < num_orientation_codes(naxes); ++code) {
      const std::array<std::vector<double>, 2> src{src1, naxes == 2 ? src1 : std::vector<double>{0.0}};
      const std::array<std::vector<double>, 2> tgt{tgt1, naxes == 2 ? tgt1 : std::vector<double>{0.0}};
      const FaceMap map = FaceMap::build(naxes, src, tgt, code);
      std::vector<double> in;
      for (double b : src[1])
        for (double a : src[0]) in.push_back(poly2(a, b));
      std::vector<double> out(map.rows());
      map.apply(in.data(), out.data());
      int p = 0;
      for (double b : tgt[1])
        for (double a : tgt[0]) {
          const auto s = orient(naxes, code, {a, b});
          CHECK(out[p++] == doctest::Approx(poly2(s[0], naxes == 2 ? s[1] : 0.0)).scale(1.0));
        }
      // transpose accumulates M^T
      const Matrix D = map.dense();
      std::mt19937_64 rng(code);
      const auto y = oracle::random_vector(map.rows(), rng);
      std::vector<double> acc(map.cols(), 1.0);
      map.apply_transpose(y.data(), acc.data());
      const auto ref = oracle::mat_vec(D.transpose(), y);
      for (int i = 0; i < map.cols(); ++i) CHECK(acc[i] == doctest::Approx(1.0 + ref[i]).scale(1.0));
    }
}

TEST_CASE("matching grids give index maps unless forced dense") {
  const auto g = quad_rule(QuadKind::GaussLobatto, 4).points;
  const std::array<std::vector<double>, 2> grid{g, g};
  for (int code = 0; code < 8; ++code) {
    const FaceMap m = FaceMap::build(2, grid, grid, code);
    CHECK(m.is_index_map());
    CHECK(m.is_identity() == (code == 0));
    const FaceMap d = FaceMap::build(2, grid, grid, code, true);
    CHECK_FALSE(d.is_index_map());
    CHECK((d.dense() - m.dense()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("trace inner product is the adjoint of trace evaluation") {
  std::mt19937_64 rng(21);
  for (Shape s : {Shape::Quad, Shape::Tri, Shape::Hex}) {
    const int dim = shape_dim(s);
    Mesh m = generate_box(dim, {2, 2, 2}, s);
    perturb_vertices(m, 0.2, {true, true, dim == 3});
    const ExpansionPtr exp = get_expansion(checks::make_key(s, BasisKind::ModifiedModal, QuadKind::GaussLobatto, 4, 5));
    for (int f = 0; f < exp->num_faces(); ++f) {
      const FaceEvaluator fe = make_face_evaluator(m, 0, exp, f, checks::face_params(*exp, f, 4),
                                                   checks::face_params(*exp, f, 4, true));
      const auto c = oracle::random_vector(exp->ncoeffs(), rng);
      const auto fu = oracle::random_vector(fe.npts, rng);
      const auto fg = oracle::random_vector(static_cast<std::size_t>(dim) * fe.npts, rng);
      std::vector<double> u(fe.npts), g(fg.size()), r(exp->ncoeffs(), 0.0);
      trace_phys_eval(fe, c.data(), u.data(), g.data());
      trace_iproduct(fe, fu.data(), fg.data(), r.data());
      double lhs = 0.0, rhs = 0.0;
      for (int p = 0; p < fe.npts; ++p) lhs += fu[p] * u[p];
      for (std::size_t p = 0; p < fg.size(); ++p) lhs += fg[p] * g[p];
      for (int i = 0; i < exp->ncoeffs(); ++i) rhs += c[i] * r[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("triangle trace evaluation refuses the collapsed vertex") {
  const Mesh m = oracle::reference_mesh(Shape::Tri);
  const ExpansionPtr exp = get_expansion(checks::make_key(Shape::Tri, BasisKind::Orthogonal, QuadKind::GaussLegendre, 3, 4));
  const auto gll = quad_rule(QuadKind::GaussLobatto, 3);
  CHECK_THROWS_AS(make_face_evaluator(m, 0, exp, 1, {gll.points, {}}, {gll.weights, {}}), Error);
  CHECK_NOTHROW(make_face_evaluator(m, 0, exp, 0, {gll.points, {}}, {gll.weights, {}}));
}

TEST_CASE("mortar imprint equals the dense L2 projection") {
  std::mt19937_64 rng(22);
  for (Shape s : {Shape::Quad, Shape::Tri, Shape::Hex})
    for (BasisKind b : {BasisKind::ModifiedModal, BasisKind::Lagrange})
      for (int nm = 2; nm <= 4; ++nm)
        CHECK(checks::mortar_mismatch(s, b, QuadKind::GaussLobatto, nm, QuadKind::GaussLegendre, nm + 1, 5, rng) < 1e-11);
  const ExpansionPtr exp = get_expansion(checks::make_key(Shape::Quad, BasisKind::ModifiedModal, QuadKind::GaussLobatto, 3, 4));
  const std::vector<double> c(exp->ncoeffs(), 1.0);
  CHECK_THROWS_AS(mortar_imprint(*exp, c, 0, quad_rule(QuadKind::GaussLegendre, 4), {-1.0, -1.0}, {0.0, 1.0}), Error);
}

TEST_CASE("gather with interpolation equals evaluation at the target points") {
  std::mt19937_64 rng(23);
  const ExpansionPtr exp = get_expansion(checks::make_key(Shape::Hex, BasisKind::Lagrange, QuadKind::GaussLobatto, 4, 5));
  const auto c = oracle::random_vector(exp->ncoeffs(), rng);
  const auto u = bwd_trans(*exp, c);
  const int f = 3;
  const FaceGrid& fg = exp->face(f);
  const auto tgt = quad_rule(QuadKind::GaussLegendre, 6).points;
  const FaceMap map = FaceMap::build(2, fg.points, {tgt, tgt}, 5);
  const auto got = gathr_interp(*exp, u, f, map);
  std::vector<double> ref;
  for (double b : tgt)
    for (double a : tgt) {
      const auto s = orient(2, 5, {a, b});
      const BasisTables t = exp->tabulate({std::vector<double>{s[0]}, std::vector<double>{1.0}, std::vector<double>{s[1]}});
      std::vector<double> v(1), work(evaluate_workspace(t));
      evaluate<1>(t, -1, c.data(), v.data(), work.data());
      ref.push_back(v[0]);
    }
  CHECK(oracle::rel_diff(got, ref) < 1e-12);
  // scatter interpolates back onto the face and adds into the face slots only
  const FaceMap back = FaceMap::build(2, {tgt, tgt}, fg.points, inverse_orientation(2, 5));
  const auto y = oracle::random_vector(map.rows(), rng);
  std::vector<double> phys(exp->nphys(), 0.0);
  scatr_interp(*exp, y, f, back, phys);
  std::vector<double> local(back.rows());
  back.apply(y.data(), local.data());
  double rest = 0.0;
  for (int p = 0; p < fg.size(); ++p) {
    CHECK(phys[fg.phys_index[p]] == doctest::Approx(local[p]).scale(1.0));
    phys[fg.phys_index[p]] = 0.0;
  }
  for (double v : phys) rest += std::abs(v);
  CHECK(rest == 0.0);
  CHECK_THROWS_AS(scatr_interp(*exp, y, f, map, phys), Error);
}

TEST_CASE("strategy selection follows conformity and certification") {
  Mesh m = generate_box(3, {2, 2, 2}, Shape::Hex);
  auto run = [&](Order lo, Order hi, StrategyChoice choice) {
    DiscretisationOptions opt;
    opt.strategy = choice;
    return discretise(m, assign_orders(m, lo, half_domain(2), hi), opt);
  };
  auto count = [](const Discretisation& d, Strategy s) {
    int n = 0;
    for (const auto& t : d.traces) n += !t.boundary && !t.conforming && t.strategy == s;
    return n;
  };
  const auto uniform = run({3, 4}, {3, 4}, StrategyChoice::P2PForced);
  for (const auto& t : uniform.traces) {
    if (t.boundary) continue;
    CHECK(t.conforming);
    CHECK(t.strategy == Strategy::SharedTrace);
  }
  CHECK(count(run({3, 4}, {5, 6}, StrategyChoice::P2P), Strategy::SharedTrace) == 4);
  CHECK(count(run({3, 5}, {5, 6}, StrategyChoice::P2P), Strategy::PointToPoint) == 4);
  const auto forced = run({3, 4}, {5, 6}, StrategyChoice::P2PForced);
  CHECK(count(forced, Strategy::PointToPoint) == 4);
  const std::string rep = certificate_report(forced);
  CHECK(std::count(rep.begin(), rep.end(), '\n') == 4);
  CHECK(rep.find("certified no") != std::string::npos);
  CHECK(count(run({3, 4}, {5, 6}, StrategyChoice::SharedTrace), Strategy::SharedTrace) == 4);
  CHECK(parse_strategy("p2p_forced") == StrategyChoice::P2PForced);
  CHECK_THROWS_AS(parse_strategy("mortar"), Error);
}
