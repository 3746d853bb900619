#pragma once

// Symmetric interior penalty Helmholtz operator, right-hand side and error
// functionals. The discrete problem is
//   (grad v, grad u) + lambda (v, u) - <v, {grad u}.n> - <grad v.n, [u]/2>
//     + <v, tau [u]> = -(v, f)
// on every element, with Dirichlet data imposed through the ghost state
// u+ = 2g - u-, grad u+ = grad u-.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dgsipg/trace.hpp"

namespace dgsipg {

using ScalarField = std::function<double(const Vec3&)>;

/// Exact solution u and forcing f with f = lap(u) - lambda u.
struct ManufacturedCase {
  std::string name;
  ScalarField u;
  ScalarField f;
};

/// u = prod_d sin(k x_d).
ManufacturedCase sinusoidal_case(int dim, double k, double lambda);
/// u = exp(-|x - c|^2 / a^2).
ManufacturedCase gaussian_case(int dim, double a, double lambda, Vec3 center = {0.0, 0.0, 0.0});
double forcing_eval(const ManufacturedCase& c, const Vec3& x);

struct OperatorOptions {
  double lambda = 1.0;
  int threads = 1;
  int batch_width = kBatchWidth;  // 1 or kBatchWidth
  bool track_cost = false;        // forces a single thread
};

class HelmholtzOperator {
public:
  HelmholtzOperator(const Discretisation& disc, const OperatorOptions& opt);

  int ndof() const { return disc_.ndof(); }
  const Discretisation& discretisation() const { return disc_; }

  /// out = A in (all three phases).
  void apply(std::span<const double> in, std::span<double> out);
  /// Phase 1: volume terms and publication of face traces.
  void aver_jump(std::span<const double> in, std::span<double> out);
  /// Stand-in for the halo exchange: marks the trace buffer as published.
  void exchange();
  /// Phase 2: interface fluxes, added to `out`.
  void trace_flux(std::span<double> out);
  /// Alternative path: volume terms plus direct trace evaluation and trace
  /// inner products per interface. Requires evaluators in the discretisation
  /// and shared-trace interfaces only.
  void apply_trace_path(std::span<const double> in, std::span<double> out);

  std::vector<double> rhs(const ManufacturedCase& c) const;
  double l2_error(std::span<const double> coeffs, const ScalarField& exact) const;
  /// Element-wise L2 projection of a field.
  std::vector<double> project(const ScalarField& u) const;

  const CostCounter& cost_aver_jump() const { return cost_[0]; }
  const CostCounter& cost_trace_flux() const { return cost_[1]; }
  void reset_cost() { cost_[0] = cost_[1] = {}; }

private:
  struct Batch {
    const Expansion* exp = nullptr;
    bool regular = false;
    int count = 0;
    std::vector<int> elems;
    std::vector<double> wj;  // deformed: nq * W; regular: W (jacobian)
    std::vector<double> K;   // deformed: dim*dim * nq * W; regular: dim*dim * W
  };
  struct Slot {
    std::vector<double> u, gn;
  };
  struct FaceRef {
    int iface = -1;
    int side = 0;
  };

  template <int W>
  void run_aver_jump(const Batch& b, const double* in, double* out, CostCounter* cost, std::vector<double>& ws);
  template <int W>
  void run_trace_flux(const Batch& b, double* out, CostCounter* cost, std::vector<double>& ws);
  void for_batches(const std::function<void(const Batch&, std::vector<double>&, CostCounter*)>& fn, int phase);
  void face_flux(int e, int f, std::vector<double>& T, std::vector<double>& S) const;

  const Discretisation& disc_;
  OperatorOptions opt_;
  std::vector<Batch> batches_;
  std::vector<std::vector<FaceRef>> face_ref_;
  std::vector<std::array<Slot, 2>> slots_;
  bool published_ = false;
  bool publish_ = true;
  std::array<CostCounter, 2> cost_{};
};

/// Run fn(begin, end) over [0, n) split across `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int, int)>& fn);

}  // namespace dgsipg
