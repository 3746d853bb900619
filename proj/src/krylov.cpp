#include "dgsipg/krylov.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dgsipg/polylib.hpp"

namespace dgsipg {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double true_residual(const LinearOperator& A, std::span<const double> b, std::span<const double> x) {
  std::vector<double> ax(b.size());
  A(x, ax);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
  return std::sqrt(s);
}

}  // namespace

SolveResult cg(const LinearOperator& A, std::span<const double> b, double tol, int maxiter) {
  const std::size_t n = b.size();
  SolveResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    res.report = {true, 0, 0.0, "converged"};
    return res;
  }
  std::vector<double> r(b.begin(), b.end()), p = r, ap(n);
  double rr = dot(r, r);
  res.report.reason = "maxiter";
  for (int it = 1; it <= maxiter; ++it) {
    A(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      res.report.iterations = it;
      res.report.reason = "indefinite";
      break;
    }
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r);
    res.report.iterations = it;
    res.report.relative_residual = std::sqrt(rr_new) / bnorm;
    if (res.report.relative_residual <= tol) {
      // confirm with the true residual; on drift restart from it
      A(res.x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      rr = dot(r, r);
      res.report.relative_residual = std::sqrt(rr) / bnorm;
      if (res.report.relative_residual <= tol) {
        res.report.converged = true;
        res.report.reason = "converged";
        break;
      }
      p = r;
      continue;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return res;
}

SolveResult gmres(const LinearOperator& A, std::span<const double> b, double tol, int restart, int maxiter) {
  const int n = static_cast<int>(b.size());
  SolveResult res;
  res.x.assign(n, 0.0);
  const double bnorm = norm(b);
  if (bnorm == 0.0) {
    res.report = {true, 0, 0.0, "converged"};
    return res;
  }
  const int m = std::max(1, restart);
  std::vector<std::vector<double>> V(m + 1, std::vector<double>(n));
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  std::vector<double> cs(m), sn(m), g(m + 1), w(n), ax(n);
  int total = 0;
  res.report.reason = "maxiter";
  while (total < maxiter) {
    A(res.x, ax);
    for (int i = 0; i < n; ++i) V[0][i] = b[i] - ax[i];
    const double beta = norm(V[0]);
    res.report.relative_residual = beta / bnorm;
    if (beta / bnorm <= tol) {
      res.report.converged = true;
      res.report.reason = "converged";
      break;
    }
    for (double& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m && total < maxiter; ++j) {
      ++total;
      A(V[j], w);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = dot(w, V[i]);
        for (int k = 0; k < n; ++k) w[k] -= H(i, j) * V[i][k];
      }
      H(j + 1, j) = norm(w);
      if (H(j + 1, j) > 0.0)
        for (int k = 0; k < n; ++k) V[j + 1][k] = w[k] / H(j + 1, j);
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double d = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = H(j, j) / d;
      sn[j] = H(j + 1, j) / d;
      H(j, j) = d;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      res.report.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (res.report.relative_residual <= tol) {
        ++j;
        break;
      }
    }
    // back substitution and update
    std::vector<double> y(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < j; ++k) s -= H(i, k) * y[k];
      y[i] = s / H(i, i);
    }
    for (int i = 0; i < j; ++i)
      for (int k = 0; k < n; ++k) res.x[k] += y[i] * V[i][k];
    res.report.iterations = total;
  }
  res.report.iterations = total;
  if (!res.report.converged) {
    res.report.relative_residual = true_residual(A, b, res.x) / bnorm;
    if (res.report.relative_residual <= tol) {
      res.report.converged = true;
      res.report.reason = "converged";
    }
  }
  return res;
}

DenseProbe probe_dense(const LinearOperator& A, int n, std::vector<int> offsets, int limit) {
  if (n > limit) {
    throw Error("dense probe of " + std::to_string(n) + " unknowns exceeds the limit of " + std::to_string(limit) +
                "; use a smaller mesh");
  }
  DenseProbe p;
  p.A.resize(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    A(e, col);
    e[j] = 0.0;
    for (int i = 0; i < n; ++i) p.A(i, j) = col[i];
  }
  if (offsets.empty()) offsets = {0, n};
  p.offsets = offsets;
  const int nb = static_cast<int>(offsets.size()) - 1;
  p.block_nnz = Eigen::MatrixXi::Zero(nb, nb);
  const double scale = p.A.cwiseAbs().maxCoeff();
  const double thr = 1e-14 * (scale > 0 ? scale : 1.0);
  std::vector<int> block(n);
  for (int b = 0; b < nb; ++b)
    for (int i = offsets[b]; i < offsets[b + 1]; ++i) block[i] = b;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (std::abs(p.A(i, j)) > thr) {
        ++p.block_nnz(block[i], block[j]);
        ++p.nonzeros;
      }
  return p;
}

std::string DenseProbe::summary() const {
  std::ostringstream os;
  const int nb = static_cast<int>(block_nnz.rows());
  int blocks = 0;
  for (int i = 0; i < nb; ++i)
    for (int j = 0; j < nb; ++j) blocks += block_nnz(i, j) > 0;
  os << "n " << A.rows() << " nonzeros " << nonzeros << " blocks " << nb << " nonzero_blocks " << blocks << "\n";
  for (int i = 0; i < nb; ++i) {
    os << "block " << i << ":";
    for (int j = 0; j < nb; ++j)
      if (block_nnz(i, j) > 0) os << " " << j << "(" << block_nnz(i, j) << ")";
    os << "\n";
  }
  return os.str();
}

double asymmetry_norm(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw Error("asymmetry_norm needs a square matrix");
  const double denom = M.cwiseAbs().colwise().sum().maxCoeff();
  if (denom == 0.0) return 0.0;
  const Eigen::MatrixXd D = M - M.transpose();
  return D.cwiseAbs().colwise().sum().maxCoeff() / denom;
}

bool positive_definite(const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  return llt.info() == Eigen::Success;
}

std::string dump_matrix(const Eigen::MatrixXd& M) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      std::snprintf(buf, sizeof buf, j ? " %.16e" : "%.16e", M(i, j));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace dgsipg
