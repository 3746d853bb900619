// Acceptance driver: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "checks.hpp"
#include "dgsipg/studies.hpp"

using namespace dgsipg;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

RunConfig config(const std::string& text) { return parse_run_config(Config::from_text(text)); }

const std::array<Shape, 3> kShapes{Shape::Quad, Shape::Tri, Shape::Hex};
const std::array<BasisKind, 3> kBases{BasisKind::ModifiedModal, BasisKind::Orthogonal, BasisKind::Lagrange};
const std::array<QuadKind, 2> kRules{QuadKind::GaussLegendre, QuadKind::GaussLobatto};

// 1
Outcome quadrature_exactness() {
  double worst = 0.0;
  int rules = 0;
  for (QuadKind kind : {QuadKind::GaussLegendre, QuadKind::GaussRadauM, QuadKind::GaussLobatto}) {
    for (int n = kind == QuadKind::GaussLobatto ? 2 : 1; n <= 12; ++n) {
      const QuadRule r = quad_rule(kind, n);
      ++rules;
      for (int d = 0; d <= r.exactness(); ++d) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.points[i], d);
        const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
        worst = std::max(worst, std::abs(s - exact));
      }
    }
  }
  return {worst <= 1e-13, std::to_string(rules) + " rules, worst monomial error " + sci(worst)};
}

// 2
Outcome kernel_oracles() {
  std::mt19937_64 rng(2);
  checks::KernelMismatch worst;
  int configs = 0;
  for (Shape s : kShapes)
    for (BasisKind b : kBases)
      for (QuadKind r : kRules)
        for (int nm = 2; nm <= 6; ++nm) {
          const auto km = checks::kernel_mismatch(s, b, r, nm, rng);
          worst.bwd = std::max(worst.bwd, km.bwd);
          worst.iprod = std::max(worst.iprod, km.iprod);
          worst.deriv = std::max(worst.deriv, km.deriv);
          worst.trace = std::max(worst.trace, km.trace);
          ++configs;
        }
  return {worst.worst() <= 1e-12, std::to_string(configs) + " configurations; bwd " + sci(worst.bwd) + " iprod " +
                                      sci(worst.iprod) + " deriv " + sci(worst.deriv) + " trace " + sci(worst.trace)};
}

// 3
Outcome table2() {
  const RunConfig rc = config(
      "dim = 3\nshape = hex\nbasis = lagrange\nrule = GLL\nnx = 2\nperturb = 0.15\nperturb_axes = xy\n"
      "refinement = half\nrefine_axis = 2\nstrategy = p2p_forced\nk = 0.5pi\nsolver = both\ntol = 1e-9\n"
      "maxiter = 1000\npairs = 3:4-5:6, 3:5-5:6, 4:5-5:6\nbaseline = none\n");
  const StudyResult res = run_symmetry_study(rc);
  const Table& t = res.table;
  auto num = [&](int r, const char* c) { return std::stod(t.at(r, c)); };
  const bool a = num(0, "asymmetry") > 1e-3 && t.at(0, "cg_converged") == "no" && t.at(0, "gmres_converged") == "yes" &&
                 t.at(0, "condition1") == "no" && t.at(0, "required_degree") == "7" && t.at(0, "actual_degree") == "5";
  const bool b = num(1, "asymmetry") <= 1e-13 && t.at(1, "cg_converged") == "yes";
  const bool c = num(2, "asymmetry") > 1e-6 && num(2, "asymmetry") < 1e-1;
  std::ostringstream os;
  os << "P3Q4-P5Q6 ratio " << sci(num(0, "asymmetry")) << " CG " << t.at(0, "cg_converged") << " GMRES "
     << t.at(0, "gmres_converged") << " (" << t.at(0, "gmres_iterations") << "); P3Q5-P5Q6 ratio "
     << sci(num(1, "asymmetry")) << " CG " << t.at(1, "cg_converged") << " (" << t.at(1, "cg_iterations")
     << "); P4Q5-P5Q6 ratio " << sci(num(2, "asymmetry"));
  return {a && b && c, os.str()};
}

// 4
Outcome shared_trace_universality() {
  double worst = 0.0;
  int cases = 0;
  for (Shape s : kShapes) {
    const int dim = shape_dim(s);
    std::ostringstream cfg;
    cfg << "dim = " << dim << "\nshape = " << to_string(s) << "\nnx = 2\nperturb = 0.15\nperturb_axes = xy\n"
        << "strategy = shared_trace\nrefine_axis = " << dim - 1 << "\n";
    const RunConfig rc = config(cfg.str());
    for (int a = 2; a <= 5; ++a)
      for (int b = 2; b <= 5; ++b) {
        ProblemSpec spec;
        spec.nx = 2;
        spec.base = {a, a + 1};
        spec.refined = Order{b, b + 1};
        spec.refinement = Refinement::Half;
        auto p = build_problem(rc, spec);
        const DenseProbe probe = probe_dense(p->linear(), p->op->ndof());
        worst = std::max(worst, asymmetry_norm(probe.A));
        ++cases;
      }
  }
  return {worst <= 1e-12, std::to_string(cases) + " pairings, worst asymmetry " + sci(worst)};
}

// 5
Outcome mortar_equivalence() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int configs = 0;
  for (Shape s : kShapes)
    for (BasisKind b : kBases)
      for (QuadKind r : kRules)
        for (int nm = 2; nm <= 6; ++nm) {
          const std::array<std::pair<QuadKind, int>, 3> mortars{
              {{QuadKind::GaussLegendre, nm}, {QuadKind::GaussLegendre, nm + 2}, {QuadKind::GaussLobatto, nm + 1}}};
          for (const auto& [mk, mn] : mortars) {
            worst = std::max(worst, checks::mortar_mismatch(s, b, r, nm, mk, mn, 50, rng));
            ++configs;
          }
        }
  return {worst <= 1e-11, std::to_string(configs) + " configurations x 50 vectors, worst " + sci(worst)};
}

// 6
Outcome convergence_slopes() {
  bool pass = true;
  std::ostringstream os;
  for (Shape s : kShapes) {
    const int dim = shape_dim(s);
    std::ostringstream cfg;
    cfg << "dim = " << dim << "\nshape = " << to_string(s) << "\nlo = 0\nhi = 1\nk = 2pi\norders = 2, 3, 4\n"
        << "nx = " << (dim == 3 ? "2, 4, 8" : "4, 8, 16") << "\nrefinement = half\nmodes = uniform, refined\n"
        << "solver = cg\ntol = 1e-10\nmaxiter = 20000\n";
    const StudyResult res = run_convergence_study(config(cfg.str()));
    const Table& t = res.table;
    std::map<std::pair<std::string, int>, double> slope;
    std::map<std::tuple<std::string, int, int>, double> err;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const std::string mode = t.at(r, "mode");
      const int np = std::stoi(t.at(r, "np"));
      slope[{mode, np}] = std::stod(t.at(r, "slope"));
      err[{mode, np, std::stoi(t.at(r, "nx"))}] = std::stod(t.at(r, "l2_error"));
      pass = pass && t.at(r, "converged") == "yes";
    }
    os << to_string(s) << ":";
    for (int np = 2; np <= 4; ++np) {
      const double su = slope[{"uniform", np}], sr = slope[{"refined", np}];
      pass = pass && su >= np - 0.7 && std::abs(sr - su) <= 0.5;
      os << " P" << np << " " << sci(su) << "/" << sci(sr);
    }
    for (const auto& [k, e] : err)
      if (std::get<0>(k) == "refined") pass = pass && e <= err[{"uniform", std::get<1>(k), std::get<2>(k)}];
    os << "; ";
  }
  return {pass, os.str() + "(uniform/refined slopes)"};
}

// 7
Outcome gaussian_efficiency() {
  const RunConfig rc = config(
      "dim = 2\nshape = quad\ncase = gaussian\na = 0.2\nrefinement = box\nbox_half_width = 0.5\norders = 3\n"
      "refined_offset = 2\nnx = 8, 16\nmodes = refined, uniform_high\nsolver = cg\ntol = 1e-10\nmaxiter = 20000\n");
  const Table t = run_convergence_study(rc).table;
  bool pass = true;
  std::ostringstream os;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.at(r, "mode") != "refined") continue;
    for (std::size_t h = 0; h < t.rows.size(); ++h) {
      if (t.at(h, "mode") != "uniform_high" || t.at(h, "nx") != t.at(r, "nx")) continue;
      const double er = std::stod(t.at(r, "l2_error")), eh = std::stod(t.at(h, "l2_error"));
      const int nr = std::stoi(t.at(r, "ndof")), nh = std::stoi(t.at(h, "ndof"));
      pass = pass && er <= 3.0 * eh && nr < nh && t.at(r, "converged") == "yes" && t.at(h, "converged") == "yes";
      os << "nx " << t.at(r, "nx") << ": refined " << sci(er) << " (" << nr << " dof) vs uniform " << sci(eh) << " ("
         << nh << " dof); ";
    }
  }
  return {pass, os.str()};
}

// 8
Outcome transition_layer() {
  const std::string base =
      "dim = 3\nshape = hex\nnx = 4\nperturb = 0.15\nperturb_axes = xy\nrefinement = half\nrefine_axis = 2\n"
      "strategy = p2p_forced\nk = 0.5pi\ntol = 1e-9\nmaxiter = 3000\n";
  ProblemSpec spec;
  spec.nx = 4;
  spec.base = {3, 4};
  spec.refined = Order{5, 6};
  spec.refinement = Refinement::Half;
  auto certified = [](const Problem& p) {
    bool all = true;
    for (const auto& t : p.disc.traces)
      if (!t.boundary && !t.conforming) all = all && t.certificate.symmetric();
    return all;
  };
  const RunConfig before = config(base);
  auto p0 = build_problem(before, spec);
  const bool failed_before = !certified(*p0);
  const RunConfig after = config(base + "transition_layer = true\n");
  auto p1 = build_problem(after, spec);
  const bool cert_after = certified(*p1);
  const SolveOutcome o = solve_case(*p1, make_case(after), after, "cg");
  std::ostringstream os;
  os << "certified before " << (failed_before ? "no" : "yes") << ", after " << (cert_after ? "yes" : "no") << "; CG "
     << (o.report.converged ? "converged in " + std::to_string(o.report.iterations) : o.report.reason) << ", ndof "
     << p1->op->ndof();
  return {failed_before && cert_after && o.report.converged, os.str()};
}

// 9
Outcome path_equivalence_and_ordering() {
  double worst = 0.0;
  std::mt19937_64 rng(9);
  for (Shape s : kShapes) {
    const int dim = shape_dim(s);
    std::ostringstream cfg;
    cfg << "dim = " << dim << "\nshape = " << to_string(s) << "\nperturb = 0.15\n";
    const RunConfig rc = config(cfg.str());
    for (int np = 2; np <= 5; ++np) {
      ProblemSpec spec;
      spec.nx = dim == 3 ? 2 : 3;
      spec.base = {np, np + 1};
      spec.trace_iproduct = true;
      auto p = build_problem(rc, spec);
      const auto x = oracle::random_vector(p->op->ndof(), rng);
      std::vector<double> y0(x.size()), y1(x.size());
      p->op->apply(x, y0);
      p->op->apply_trace_path(x, y1);
      worst = std::max(worst, oracle::rel_diff(y1, y0));
    }
  }
  const RunConfig rc = config("dim = 3\nshape = hex\norders = 4\nnq_offset = 1\nnx = 4\nrepeats = 15\n");
  const Table t = run_bench(rc).table;
  std::map<std::string, double> thr;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.at(r, "operator") == "LhsEval") thr[t.at(r, "mode")] = std::stod(t.at(r, "throughput"));
  const bool order = thr["conforming"] > thr["interp"] && thr["interp"] > thr["trace"];
  std::ostringstream os;
  os << "path mismatch " << sci(worst) << "; throughput conforming " << sci(thr["conforming"]) << " > interp "
     << sci(thr["interp"]) << " > trace " << sci(thr["trace"]) << " dof/s";
  return {worst <= 1e-11 && order, os.str()};
}

// 10
Outcome batched_layout() {
  std::mt19937_64 rng(10);
  double kernels = 0.0;
  for (Shape s : kShapes)
    for (BasisKind b : kBases)
      for (QuadKind r : kRules)
        for (int nm = 2; nm <= 6; ++nm) kernels = std::max(kernels, checks::batch_mismatch(s, b, r, nm, 7, rng));
  double ops = 0.0;
  const char* meshes[] = {
      "dim = 2\nshape = quad\nperturb = 0.2\n",
      "dim = 2\nshape = tri\nperturb = 0.2\nbasis = modal\nrule = GL\n",
      "dim = 3\nshape = hex\nperturb = 0.15\n",
      "dim = 3\nshape = hex\nbasis = orthogonal\nrule = GL\n",
  };
  for (const char* m : meshes) {
    for (bool mixed : {false, true}) {
      RunConfig r1 = config(m), rw = config(m);
      r1.batch_width = 1;
      rw.batch_width = kBatchWidth;
      ProblemSpec spec;
      spec.nx = r1.dim == 3 ? 3 : 5;
      spec.base = {3, 4};
      if (mixed) {
        spec.refined = Order{4, 6};
        spec.refinement = Refinement::Half;
      }
      auto p1 = build_problem(r1, spec);
      auto pw = build_problem(rw, spec);
      const auto x = oracle::random_vector(p1->op->ndof(), rng);
      std::vector<double> y1(x.size()), yw(x.size());
      p1->op->apply(x, y1);
      pw->op->apply(x, yw);
      ops = std::max(ops, oracle::rel_diff(yw, y1));
    }
  }
  return {kernels <= 1e-14 && ops <= 1e-14, "width " + std::to_string(kBatchWidth) + "; kernels " + sci(kernels) +
                                                ", operators " + sci(ops)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"quadrature exactness", quadrature_exactness},
      {"kernel/oracle equivalence", kernel_oracles},
      {"mixed-order symmetry table", table2},
      {"shared-trace universality", shared_trace_universality},
      {"mortar equivalence", mortar_equivalence},
      {"convergence slopes", convergence_slopes},
      {"gaussian-pulse efficiency", gaussian_efficiency},
      {"transition-layer repair", transition_layer},
      {"path equivalence and throughput ordering", path_equivalence_and_ordering},
      {"batched-layout equivalence", batched_layout},
  };
  // optional: run a single criterion by number
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && only != static_cast<int>(i) + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%s) [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
