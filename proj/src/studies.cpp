#include "dgsipg/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace dgsipg {

namespace {

Order parse_order(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error("order '" + s + "' is not np:nq");
  Config c;
  c.set("np", s.substr(0, colon));
  c.set("nq", s.substr(colon + 1));
  return {c.get_int("np", 0), c.get_int("nq", 0)};
}

std::pair<Order, Order> parse_pair(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw Error("pair '" + s + "' is not np:nq-np:nq");
  return {parse_order(s.substr(0, dash)), parse_order(s.substr(dash + 1))};
}

std::string order_name(Order o) { return "P" + std::to_string(o.np) + "Q" + std::to_string(o.nq); }
const char* yes_no(bool b) { return b ? "yes" : "no"; }

Refinement parse_refinement(const std::string& s) {
  if (s == "none") return Refinement::None;
  if (s == "half") return Refinement::Half;
  if (s == "box") return Refinement::Box;
  throw Error("unknown refinement '" + s + "' (none, half, box)");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F>
double median_time(int warmup, int repeats, F&& fn) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> t;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return median(t);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dim", "shape", "basis", "rule", "np", "nq", "refined_np", "refined_nq", "refinement", "refine_axis",
      "box_half_width", "strategy", "transition_layer", "case", "k", "a", "lambda", "tau", "p_geom", "solver",
      "tol", "maxiter", "restart", "nx", "lo", "hi", "perturb", "perturb_axes", "batch_width", "threads",
      "output_dir", "probe_limit", "probe_dump", "pairs", "baseline", "orders", "nq_offset", "refined_offset",
      "modes", "bench_modes", "warmup", "repeats", "seed"};
  return keys;
}

RunConfig parse_run_config(const Config& cfg) {
  cfg.check_keys(config_keys());
  RunConfig rc;
  rc.dim = cfg.get_int("dim", rc.dim);
  if (rc.dim < 1 || rc.dim > 3) throw Error("dim must be 1, 2 or 3");
  rc.shape = parse_shape(cfg.get("shape", rc.dim == 1 ? "seg" : rc.dim == 2 ? "quad" : "hex"));
  rc.basis = parse_basis(cfg.get("basis", "lagrange"));
  rc.rule = parse_quad_kind(cfg.get("rule", "GLL"));
  rc.base = {cfg.get_int("np", rc.base.np), cfg.get_int("nq", rc.base.nq)};
  rc.refined = {cfg.get_int("refined_np", rc.refined.np), cfg.get_int("refined_nq", rc.refined.nq)};
  rc.refinement = parse_refinement(cfg.get("refinement", "none"));
  rc.refine_axis = cfg.get_int("refine_axis", rc.refine_axis);
  if (rc.refine_axis < 0 || rc.refine_axis >= rc.dim) throw Error("refine_axis out of range");
  rc.box_half_width = cfg.get_double("box_half_width", rc.box_half_width);
  rc.strategy = parse_strategy(cfg.get("strategy", "p2p"));
  rc.transition_layer = cfg.get_bool("transition_layer", false);
  rc.problem = cfg.get("case", rc.problem);
  if (rc.problem != "sinusoidal" && rc.problem != "gaussian") throw Error("case must be sinusoidal or gaussian");
  rc.k = cfg.get_double("k", rc.k);
  rc.a = cfg.get_double("a", rc.a);
  rc.lambda = cfg.get_double("lambda", rc.lambda);
  rc.tau = cfg.get_double("tau", rc.tau);
  rc.p_geom = cfg.get_int("p_geom", rc.p_geom);
  rc.solver = cfg.get("solver", rc.solver);
  if (rc.solver != "cg" && rc.solver != "gmres" && rc.solver != "both") throw Error("solver must be cg, gmres or both");
  rc.tol = cfg.get_double("tol", rc.tol);
  rc.maxiter = cfg.get_int("maxiter", rc.maxiter);
  rc.restart = cfg.get_int("restart", rc.restart);
  rc.nx = cfg.get_ints("nx", rc.nx);
  if (rc.nx.empty()) throw Error("nx list is empty");
  rc.lo = cfg.get_double("lo", rc.lo);
  rc.hi = cfg.get_double("hi", rc.hi);
  if (!(rc.hi > rc.lo)) throw Error("hi must exceed lo");
  rc.perturb = cfg.get_double("perturb", rc.perturb);
  const std::string axes = cfg.get("perturb_axes", rc.perturb > 0.0 ? "xyz" : "");
  for (char ch : axes) {
    if (ch < 'x' || ch > 'z') throw Error("perturb_axes takes letters from xyz");
    rc.perturb_axes[ch - 'x'] = true;
  }
  rc.batch_width = cfg.get_int("batch_width", rc.batch_width);
  if (rc.batch_width != 1 && rc.batch_width != kBatchWidth)
    throw Error("batch_width must be 1 or " + std::to_string(kBatchWidth));
  rc.threads = std::max(1, cfg.get_int("threads", rc.threads));
  rc.output_dir = cfg.get("output_dir", rc.output_dir);
  rc.probe_limit = cfg.get_int("probe_limit", rc.probe_limit);
  rc.probe_dump = cfg.get_bool("probe_dump", rc.probe_dump);
  for (const auto& s : cfg.get_list("pairs", {"3:4-5:6", "3:5-5:6", "4:5-5:6"})) rc.pairs.push_back(parse_pair(s));
  const std::string baseline = cfg.get("baseline", "3:4");
  if (baseline != "none") rc.baseline = parse_order(baseline);
  rc.orders = cfg.get_ints("orders", rc.orders);
  rc.nq_offset = cfg.get_int("nq_offset", rc.nq_offset);
  rc.refined_offset = cfg.get_int("refined_offset", rc.refined_offset);
  const std::vector<std::string> default_modes =
      rc.refinement == Refinement::None ? std::vector<std::string>{"uniform"}
                                        : std::vector<std::string>{"uniform", "refined", "uniform_high"};
  rc.modes = cfg.get_list("modes", default_modes);
  for (const auto& m : rc.modes)
    if (m != "uniform" && m != "refined" && m != "uniform_high") throw Error("unknown mode '" + m + "'");
  rc.bench_modes = cfg.get_list("bench_modes", rc.bench_modes);
  for (const auto& m : rc.bench_modes)
    if (m != "conforming" && m != "interp" && m != "trace") throw Error("unknown bench mode '" + m + "'");
  rc.warmup = std::max(3, cfg.get_int("warmup", rc.warmup));
  rc.repeats = std::max(10, cfg.get_int("repeats", rc.repeats));
  rc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  return rc;
}

LinearOperator Problem::linear() const {
  HelmholtzOperator* A = op.get();
  return [A](std::span<const double> in, std::span<double> out) { A->apply(in, out); };
}

std::unique_ptr<Problem> build_problem(const RunConfig& rc, const ProblemSpec& spec) {
  auto p = std::make_unique<Problem>();
  const Vec3 lo{rc.lo, rc.lo, rc.lo}, hi{rc.hi, rc.hi, rc.hi};
  p->mesh = generate_box(rc.dim, {spec.nx, spec.nx, spec.nx}, rc.shape, lo, hi);
  if (rc.perturb > 0.0) perturb_vertices(p->mesh, rc.perturb, rc.perturb_axes);

  RegionPredicate region;
  const double mid = 0.5 * (rc.lo + rc.hi);
  if (spec.refined && spec.refinement == Refinement::Half) {
    region = half_domain(rc.refine_axis, mid);
  } else if (spec.refined && spec.refinement == Refinement::Box) {
    const auto box = centered_box(rc.box_half_width, rc.dim);
    region = [box, mid](const Vec3& x) { return box({x[0] - mid, x[1] - mid, x[2] - mid}); };
  }
  p->orders = assign_orders(p->mesh, spec.base, region, spec.refined.value_or(spec.base));
  if (rc.transition_layer) p->orders = insert_transition_layer(p->mesh, p->orders);

  DiscretisationOptions dopt;
  dopt.basis = rc.basis;
  dopt.rule = rc.rule;
  dopt.strategy = rc.strategy;
  dopt.force_interp = spec.force_interp;
  dopt.trace_iproduct = spec.trace_iproduct;
  dopt.p_geom = rc.p_geom;
  dopt.tau_constant = rc.tau;
  p->disc = discretise(p->mesh, p->orders, dopt);

  OperatorOptions oopt;
  oopt.lambda = rc.lambda;
  oopt.threads = rc.threads;
  oopt.batch_width = rc.batch_width;
  p->op = std::make_unique<HelmholtzOperator>(p->disc, oopt);
  return p;
}

ManufacturedCase make_case(const RunConfig& rc) {
  if (rc.problem == "gaussian") {
    const double mid = 0.5 * (rc.lo + rc.hi);
    return gaussian_case(rc.dim, rc.a, rc.lambda, {mid, mid, mid});
  }
  return sinusoidal_case(rc.dim, rc.k, rc.lambda);
}

SolveOutcome solve_case(Problem& p, const ManufacturedCase& c, const RunConfig& rc, const std::string& solver) {
  const std::vector<double> b = p.op->rhs(c);
  const LinearOperator A = p.linear();
  SolveResult r = solver == "gmres" ? gmres(A, b, rc.tol, rc.restart, rc.maxiter) : cg(A, b, rc.tol, rc.maxiter);
  return {r.report, p.op->l2_error(r.x, c.u)};
}

// ---- tables -------------------------------------------------------------------

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string Table::to_csv() const {
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << "\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return os.str();
}

int Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error("no column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

double fitted_slope(const std::vector<int>& nx, const std::vector<double>& err) {
  if (nx.size() != err.size() || nx.size() < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(nx.size());
  for (std::size_t i = 0; i < nx.size(); ++i) {
    const double x = std::log(1.0 / nx[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---- symmetry -----------------------------------------------------------------

StudyResult run_symmetry_study(const RunConfig& rc) {
  StudyResult res;
  res.table.header = {"pair",           "strategy",     "nonconforming", "condition1",   "condition2",
                      "required_degree", "actual_degree", "certified",    "asymmetry",    "positive_definite",
                      "cg_converged",   "cg_iterations", "cg_l2_error",  "gmres_converged", "gmres_iterations",
                      "gmres_l2_error", "ndof"};
  std::vector<std::pair<Order, std::optional<Order>>> runs;
  if (rc.baseline) runs.push_back({*rc.baseline, std::nullopt});
  for (const auto& [lo, hi] : rc.pairs) runs.push_back({lo, hi});

  const ManufacturedCase mc = make_case(rc);
  std::ostringstream rep;
  rep << "symmetry study: dim " << rc.dim << " shape " << to_string(rc.shape) << " basis " << to_string(rc.basis)
      << " rule " << to_string(rc.rule) << " strategy " << to_string(rc.strategy) << " nx " << rc.nx.front()
      << " tau " << rc.tau << " transition_layer " << yes_no(rc.transition_layer) << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-13s %-6s %-6s %-4s %-4s %-9s %-10s %-14s %-14s\n", "pair", "strategy",
                "cond1", "cond2", "req", "act", "certified", "asymmetry", "CG", "GMRES");
  rep << line;

  bool dumped = false;
  for (const auto& [base, refined] : runs) {
    ProblemSpec spec;
    spec.nx = rc.nx.front();
    spec.base = base;
    spec.refined = refined;
    spec.refinement = refined ? (rc.refinement == Refinement::None ? Refinement::Half : rc.refinement) : rc.refinement;
    auto p = build_problem(rc, spec);
    const int n = p->op->ndof();
    const DenseProbe probe = probe_dense(p->linear(), n, p->disc.offsets, rc.probe_limit);
    const double asym = asymmetry_norm(probe.A);

    int nonconf = 0, req = 0, act = 1 << 20;
    bool c1 = true, c2 = true, certified = true, any_p2p = false;
    for (const auto& t : p->disc.traces) {
      if (t.boundary || t.conforming) continue;
      ++nonconf;
      c1 = c1 && t.certificate.condition1;
      c2 = c2 && t.certificate.condition2;
      certified = certified && (t.certified || t.strategy == Strategy::SharedTrace);
      any_p2p = any_p2p || t.strategy == Strategy::PointToPoint;
      req = std::max(req, t.certificate.required_degree);
      act = std::min(act, t.certificate.actual_degree);
    }

    SolveOutcome cgo, gmo;
    const bool run_cg = rc.solver != "gmres", run_gm = rc.solver != "cg";
    if (run_cg) cgo = solve_case(*p, mc, rc, "cg");
    if (run_gm) gmo = solve_case(*p, mc, rc, "gmres");

    const std::string name = refined ? order_name(base) + "-" + order_name(*refined) : order_name(base);
    const std::string strat = any_p2p ? "p2p" : "shared_trace";
    auto na = [&](const std::string& s) { return nonconf ? s : std::string("n/a"); };
    res.table.rows.push_back({name, strat, std::to_string(nonconf), na(yes_no(c1)), na(yes_no(c2)),
                              na(std::to_string(req)), na(std::to_string(act)), na(yes_no(certified)), fmt(asym),
                              yes_no(positive_definite(probe.A)), run_cg ? yes_no(cgo.report.converged) : "n/a",
                              std::to_string(cgo.report.iterations), run_cg ? fmt(cgo.l2) : "n/a",
                              run_gm ? yes_no(gmo.report.converged) : "n/a", std::to_string(gmo.report.iterations),
                              run_gm ? fmt(gmo.l2) : "n/a", std::to_string(n)});

    auto verdict = [](bool ran, const SolveOutcome& o) {
      if (!ran) return std::string("n/a");
      return o.report.converged ? std::to_string(o.report.iterations) : "- (" + o.report.reason + ")";
    };
    std::snprintf(line, sizeof line, "%-14s %-13s %-6s %-6s %-4s %-4s %-9s %-10.3e %-14s %-14s\n", name.c_str(),
                  strat.c_str(), na(yes_no(c1)).c_str(), na(yes_no(c2)).c_str(), na(std::to_string(req)).c_str(),
                  na(std::to_string(act)).c_str(), na(yes_no(certified)).c_str(), asym,
                  verdict(run_cg, cgo).c_str(), verdict(run_gm, gmo).c_str());
    rep << line;
    if (nonconf) {
      std::istringstream cr(certificate_report(p->disc));
      std::string l;
      while (std::getline(cr, l)) rep << "    " << l << "\n";
    }
    if (rc.probe_dump && !dumped && refined) {
      res.probe_matrix = dump_matrix(probe.A);
      rep << "\nprobe " << name << ": " << probe.summary() << "\n";
      dumped = true;
    }
  }
  res.report = rep.str();
  res.summary = res.report;
  return res;
}

// ---- convergence --------------------------------------------------------------

StudyResult run_convergence_study(const RunConfig& rc) {
  StudyResult res;
  res.table.header = {"case", "shape", "dim",   "mode",      "np",        "nq",        "refined_np", "refined_nq",
                      "nx",   "ndof",  "l2_error", "converged", "iterations", "slope"};
  const ManufacturedCase mc = make_case(rc);
  const std::string solver = rc.solver == "both" ? "cg" : rc.solver;
  std::ostringstream sum;
  sum << "convergence study: " << mc.name << " dim " << rc.dim << " shape " << to_string(rc.shape) << "\n";
  for (int np : rc.orders) {
    const Order lo{np, np + rc.nq_offset};
    const Order hi{np + rc.refined_offset, np + rc.refined_offset + rc.nq_offset};
    for (const auto& mode : rc.modes) {
      ProblemSpec spec;
      spec.base = mode == "uniform_high" ? hi : lo;
      if (mode == "refined") {
        spec.refined = hi;
        spec.refinement = rc.refinement == Refinement::None ? Refinement::Half : rc.refinement;
      }
      std::vector<std::vector<std::string>> rows;
      std::vector<int> fit_nx;
      std::vector<double> fit_err;
      for (int nx : rc.nx) {
        spec.nx = nx;
        auto p = build_problem(rc, spec);
        const SolveOutcome o = solve_case(*p, mc, rc, solver);
        if (o.report.converged) {
          fit_nx.push_back(nx);
          fit_err.push_back(o.l2);
        }
        rows.push_back({mc.name, std::string(to_string(rc.shape)), std::to_string(rc.dim), mode,
                        std::to_string(spec.base.np), std::to_string(spec.base.nq),
                        std::to_string(spec.refined ? spec.refined->np : spec.base.np),
                        std::to_string(spec.refined ? spec.refined->nq : spec.base.nq), std::to_string(nx),
                        std::to_string(p->op->ndof()), fmt(o.l2), yes_no(o.report.converged),
                        std::to_string(o.report.iterations)});
      }
      const double slope = fitted_slope(fit_nx, fit_err);
      for (auto& r : rows) {
        r.push_back(fmt(slope));
        sum << "  " << r[3] << " np " << r[4] << " nx " << r[8] << " ndof " << r[9] << " l2 " << r[10]
            << (r[11] == "yes" ? "" : " (not converged)") << "\n";
        res.table.rows.push_back(std::move(r));
      }
      sum << "  " << mode << " np " << spec.base.np << " slope " << fmt(slope) << "\n";
    }
  }
  res.summary = sum.str();
  return res;
}

// ---- bench --------------------------------------------------------------------

StudyResult run_bench(const RunConfig& rc) {
  StudyResult res;
  res.table.header = {"mode", "operator",   "np",         "nq",    "nx",       "ndof",
                      "repeats", "median_seconds", "throughput", "flops", "intensity"};
  std::ostringstream sum;
  sum << "bench: dim " << rc.dim << " shape " << to_string(rc.shape) << " threads " << rc.threads
      << " batch_width " << rc.batch_width << "\n";
  for (int np : rc.orders) {
    for (int nx : rc.nx) {
      for (const auto& mode : rc.bench_modes) {
        ProblemSpec spec;
        spec.nx = nx;
        spec.base = {np, np + rc.nq_offset};
        spec.force_interp = mode == "interp";
        spec.trace_iproduct = mode == "trace";
        auto p = build_problem(rc, spec);
        HelmholtzOperator& op = *p->op;
        const int n = op.ndof();

        std::mt19937_64 rng(rc.seed);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> x(n), y(n);
        for (double& v : x) v = dist(rng);

        // nominal flops from a single cost-tracked application
        OperatorOptions copt;
        copt.lambda = rc.lambda;
        copt.batch_width = rc.batch_width;
        copt.track_cost = true;
        HelmholtzOperator counter(p->disc, copt);
        if (mode == "trace") counter.apply_trace_path(x, y);
        else counter.apply(x, y);
        const double f_aj = 2.0 * counter.cost_aver_jump().madds;
        const double f_tf = 2.0 * counter.cost_trace_flux().madds;

        // bytes moved: input, output and geometric factors once per application
        double geo = 0.0;
        for (int e = 0; e < p->mesh.num_elements(); ++e) {
          const auto& gf = p->disc.factors[e];
          geo += static_cast<double>(gf.jac.size() + gf.deta_dx.size());
        }
        const double bytes = 8.0 * (2.0 * n + geo);

        auto record = [&](const std::string& name, double t, double flops) {
          res.table.rows.push_back({mode, name, std::to_string(spec.base.np), std::to_string(spec.base.nq),
                                    std::to_string(nx), std::to_string(n), std::to_string(rc.repeats), fmt(t),
                                    fmt(n / t), fmt(flops), fmt(flops / bytes)});
          sum << "  " << mode << " " << name << " np " << spec.base.np << " nx " << nx << " ndof " << n
              << " median " << fmt(t) << " s throughput " << fmt(n / t) << " dof/s\n";
        };

        if (mode == "trace") {
          record("LhsEval", median_time(rc.warmup, rc.repeats, [&] { op.apply_trace_path(x, y); }), f_aj + f_tf);
          continue;
        }
        record("LhsEval", median_time(rc.warmup, rc.repeats, [&] { op.apply(x, y); }), f_aj + f_tf);
        std::vector<double> taj, ttf;
        for (int i = 0; i < rc.warmup + rc.repeats; ++i) {
          const auto t0 = std::chrono::steady_clock::now();
          op.aver_jump(x, y);
          op.exchange();
          const auto t1 = std::chrono::steady_clock::now();
          op.trace_flux(y);
          const auto t2 = std::chrono::steady_clock::now();
          if (i < rc.warmup) continue;
          taj.push_back(std::chrono::duration<double>(t1 - t0).count());
          ttf.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        record("AverJump", median(taj), f_aj);
        record("TraceFlux", median(ttf), f_tf);
      }
    }
  }
  res.summary = sum.str();
  return res;
}

}  // namespace dgsipg
