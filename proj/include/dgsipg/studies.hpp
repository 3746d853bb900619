#pragma once

// Study drivers behind the command-line tool: symmetry probing of mixed-order
// pairings, convergence sweeps and operator throughput benchmarks.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dgsipg/config.hpp"
#include "dgsipg/krylov.hpp"
#include "dgsipg/sipg.hpp"

namespace dgsipg {

enum class Refinement { None, Half, Box };

struct RunConfig {
  int dim = 2;
  Shape shape = Shape::Quad;
  BasisKind basis = BasisKind::Lagrange;
  QuadKind rule = QuadKind::GaussLobatto;
  Order base{3, 4};
  Order refined{5, 6};
  Refinement refinement = Refinement::None;
  int refine_axis = 0;
  double box_half_width = 0.5;
  StrategyChoice strategy = StrategyChoice::P2P;
  bool transition_layer = false;
  std::string problem = "sinusoidal";  // or "gaussian"
  double k = 6.283185307179586;
  double a = 0.2;
  double lambda = 1.0;
  double tau = 10.0;
  int p_geom = 1;
  std::string solver = "cg";  // cg, gmres or both
  double tol = 1e-9;
  int maxiter = 1000;
  int restart = 50;
  std::vector<int> nx{4};
  double lo = -1.0, hi = 1.0;
  double perturb = 0.0;
  std::array<bool, 3> perturb_axes{false, false, false};
  int batch_width = kBatchWidth;
  int threads = 1;
  std::string output_dir = ".";
  int probe_limit = 20000;
  bool probe_dump = false;
  // symmetry
  std::vector<std::pair<Order, Order>> pairs;
  std::optional<Order> baseline;
  // convergence
  std::vector<int> orders{2, 3, 4};
  int nq_offset = 1;
  int refined_offset = 1;
  std::vector<std::string> modes;
  // bench
  std::vector<std::string> bench_modes{"conforming", "interp", "trace"};
  int warmup = 3;
  int repeats = 10;
  std::uint64_t seed = 1;
};

/// Keys accepted in config files and overrides.
const std::vector<std::string>& config_keys();
RunConfig parse_run_config(const Config& cfg);

/// A mesh, its discretisation and the operator built on it. Not movable:
/// the discretisation points at the mesh.
struct Problem {
  Mesh mesh;
  OrderMap orders;
  Discretisation disc;
  std::unique_ptr<HelmholtzOperator> op;

  Problem() = default;
  Problem(const Problem&) = delete;
  Problem& operator=(const Problem&) = delete;

  LinearOperator linear() const;
};

struct ProblemSpec {
  int nx = 4;
  Order base{3, 4};
  std::optional<Order> refined;
  Refinement refinement = Refinement::None;
  bool force_interp = false;
  bool trace_iproduct = false;
};

std::unique_ptr<Problem> build_problem(const RunConfig& rc, const ProblemSpec& spec);
ManufacturedCase make_case(const RunConfig& rc);

struct SolveOutcome {
  SolveReport report;
  double l2 = 0.0;
};
SolveOutcome solve_case(Problem& p, const ManufacturedCase& c, const RunConfig& rc, const std::string& solver);

// ---- tables -------------------------------------------------------------------

/// %.16e, i.e. 17 significant digits.
std::string fmt(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
  int column(const std::string& name) const;
  const std::string& at(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

struct StudyResult {
  Table table;
  std::string report;        // symmetry_report.txt
  std::string probe_matrix;  // probe_matrix.txt, optional
  std::string summary;       // printed to stdout
};

/// Least-squares slope of log(err) against log(1/nx); NaN with fewer than two points.
double fitted_slope(const std::vector<int>& nx, const std::vector<double>& err);

StudyResult run_symmetry_study(const RunConfig& rc);
StudyResult run_convergence_study(const RunConfig& rc);
StudyResult run_bench(const RunConfig& rc);

}  // namespace dgsipg
