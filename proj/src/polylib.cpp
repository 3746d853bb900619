#include "dgsipg/polylib.hpp"

#include <algorithm>
#include <cmath>

namespace dgsipg {

std::string_view to_string(QuadKind kind) {
  switch (kind) {
    case QuadKind::GaussLegendre: return "GL";
    case QuadKind::GaussRadauM: return "GR";
    case QuadKind::GaussLobatto: return "GLL";
  }
  return "?";
}

QuadKind parse_quad_kind(std::string_view name) {
  if (name == "GL" || name == "gl" || name == "GaussLegendre") return QuadKind::GaussLegendre;
  if (name == "GR" || name == "gr" || name == "GaussRadauM") return QuadKind::GaussRadauM;
  if (name == "GLL" || name == "gll" || name == "GaussLobatto") return QuadKind::GaussLobatto;
  throw Error("unknown quadrature kind '" + std::string(name) + "'");
}

int exactness_degree(QuadKind kind, int n) {
  switch (kind) {
    case QuadKind::GaussLegendre: return 2 * n - 1;
    case QuadKind::GaussRadauM: return 2 * n - 2;
    case QuadKind::GaussLobatto: return 2 * n - 3;
  }
  return -1;
}

int QuadRule::exactness() const { return exactness_degree(kind, n); }

JacobiValue jacobi_eval(double alpha, double beta, int n, double x) {
  auto value = [alpha, beta, x](int deg) {
    if (deg == 0) return 1.0;
    double p0 = 1.0;
    double p1 = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
    for (int k = 1; k < deg; ++k) {
      const double s = 2.0 * k + alpha + beta;
      const double a1 = 2.0 * (k + 1) * (k + alpha + beta + 1.0) * s;
      const double a2 = (s + 1.0) * (alpha * alpha - beta * beta);
      const double a3 = s * (s + 1.0) * (s + 2.0);
      const double a4 = 2.0 * (k + alpha) * (k + beta) * (s + 2.0);
      const double p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
      p0 = p1;
      p1 = p2;
    }
    return p1;
  };
  JacobiValue out{value(n), 0.0};
  if (n > 0) {
    out.derivative = 0.5 * (n + alpha + beta + 1.0) * jacobi_eval(alpha + 1.0, beta + 1.0, n - 1, x).value;
  }
  return out;
}

std::vector<double> jacobi_zeros(double alpha, double beta, int n) {
  if (n <= 0) return {};
  Eigen::MatrixXd jm = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + ab;
    jm(k, k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double kk = k + 1.0;
      const double t = 2.0 * kk + ab;
      const double b2 = 4.0 * kk * (kk + alpha) * (kk + beta) * (kk + ab) / (t * t * (t + 1.0) * (t - 1.0));
      jm(k, k + 1) = jm(k + 1, k) = std::sqrt(b2);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jm, Eigen::EigenvaluesOnly);
  std::vector<double> z(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  for (double& x : z) {
    const auto [p, dp] = jacobi_eval(alpha, beta, n, x);
    if (dp != 0.0) x -= p / dp;
  }
  std::sort(z.begin(), z.end());
  return z;
}

QuadRule quad_rule(QuadKind kind, int n) {
  QuadRule rule;
  rule.kind = kind;
  rule.n = n;
  if (n < 1 || (kind == QuadKind::GaussLobatto && n < 2)) {
    throw Error("cannot construct " + std::string(to_string(kind)) + " rule with " + std::to_string(n) + " points");
  }
  auto& x = rule.points;
  auto& w = rule.weights;
  switch (kind) {
    case QuadKind::GaussLegendre: {
      x = jacobi_zeros(0.0, 0.0, n);
      for (double xi : x) {
        const double dp = jacobi_eval(0.0, 0.0, n, xi).derivative;
        w.push_back(2.0 / ((1.0 - xi * xi) * dp * dp));
      }
      break;
    }
    case QuadKind::GaussRadauM: {
      x.push_back(-1.0);
      const auto inner = jacobi_zeros(0.0, 1.0, n - 1);
      x.insert(x.end(), inner.begin(), inner.end());
      const double nn = static_cast<double>(n) * n;
      w.push_back(2.0 / nn);
      for (std::size_t i = 1; i < x.size(); ++i) {
        const double p = jacobi_eval(0.0, 0.0, n - 1, x[i]).value;
        w.push_back((1.0 - x[i]) / (nn * p * p));
      }
      break;
    }
    case QuadKind::GaussLobatto: {
      x.push_back(-1.0);
      const auto inner = jacobi_zeros(1.0, 1.0, n - 2);
      x.insert(x.end(), inner.begin(), inner.end());
      x.push_back(1.0);
      for (double xi : x) {
        const double p = jacobi_eval(0.0, 0.0, n - 1, xi).value;
        w.push_back(2.0 / (n * (n - 1.0) * p * p));
      }
      break;
    }
  }
  return rule;
}

namespace {

void require_distinct(std::span<const double> pts) {
  std::vector<double> s(pts.begin(), pts.end());
  std::sort(s.begin(), s.end());
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (std::abs(s[i] - s[i - 1]) <= 1e-14 * (1.0 + std::abs(s[i]))) {
      throw Error("interpolation nodes must be pairwise distinct");
    }
  }
  if (s.empty()) throw Error("interpolation needs at least one node");
}

std::vector<double> barycentric_weights(std::span<const double> x) {
  std::vector<double> lam(x.size(), 1.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (k != j) lam[j] /= (x[j] - x[k]);
    }
  }
  return lam;
}

int find_node(std::span<const double> nodes, double t) {
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    if (std::abs(nodes[q] - t) <= 1e-15) return static_cast<int>(q);
  }
  return -1;
}

}  // namespace

Matrix lagrange_interp_matrix(std::span<const double> from, std::span<const double> to) {
  require_distinct(from);
  const auto lam = barycentric_weights(from);
  const int m = static_cast<int>(from.size());
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(to.size()), m);
  for (std::size_t r = 0; r < to.size(); ++r) {
    const int hit = find_node(from, to[r]);
    if (hit >= 0) {
      out(r, hit) = 1.0;
      continue;
    }
    double denom = 0.0;
    for (int q = 0; q < m; ++q) denom += lam[q] / (to[r] - from[q]);
    for (int q = 0; q < m; ++q) out(r, q) = lam[q] / (to[r] - from[q]) / denom;
  }
  return out;
}

Matrix lagrange_deriv_matrix(std::span<const double> nodes, std::span<const double> to) {
  require_distinct(nodes);
  const auto lam = barycentric_weights(nodes);
  const int m = static_cast<int>(nodes.size());
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(to.size()), m);
  for (std::size_t r = 0; r < to.size(); ++r) {
    const double t = to[r];
    const int hit = find_node(nodes, t);
    if (hit >= 0) {
      double diag = 0.0;
      for (int q = 0; q < m; ++q) {
        if (q == hit) continue;
        out(r, q) = (lam[q] / lam[hit]) / (nodes[hit] - nodes[q]);
        diag -= out(r, q);
      }
      out(r, hit) = diag;
      continue;
    }
    // l_q'(t) = l_q(t) * sum_{j != q} 1/(t - x_j)
    double full = 0.0;
    for (int j = 0; j < m; ++j) full += 1.0 / (t - nodes[j]);
    double prod = 1.0;
    for (int j = 0; j < m; ++j) prod *= (t - nodes[j]);
    for (int q = 0; q < m; ++q) {
      const double lq = lam[q] * prod / (t - nodes[q]);
      out(r, q) = lq * (full - 1.0 / (t - nodes[q]));
    }
  }
  return out;
}

Matrix diff_matrix(std::span<const double> points) {
  return lagrange_deriv_matrix(points, points);
}

}  // namespace dgsipg
