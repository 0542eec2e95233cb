// Brute-force curvature oracle for the test suite. Works directly on a metric
// closure with nested central differences and never touches the reduction
// machinery, so it is an independent route to every curvature number the
// geometry module reports. The contraction pairs the upper Riemann index with
// the last lower slot (round spheres come out negative), matching the
// convention of the tensors under test.
#ifndef BUNDLEDIFF_TESTS_RIEMANN_ORACLE_HPP
#define BUNDLEDIFF_TESTS_RIEMANN_ORACLE_HPP

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using MetricFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;  // q -> G row-major n*n

inline std::vector<double> invert_dense(std::vector<double> a, int n) {
  std::vector<double> inv(static_cast<size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i * n + i)] = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a[static_cast<size_t>(r * n + col)]) > std::fabs(a[static_cast<size_t>(piv * n + col)])) piv = r;
    for (int k = 0; k < n; ++k) {
      std::swap(a[static_cast<size_t>(col * n + k)], a[static_cast<size_t>(piv * n + k)]);
      std::swap(inv[static_cast<size_t>(col * n + k)], inv[static_cast<size_t>(piv * n + k)]);
    }
    const double p = a[static_cast<size_t>(col * n + col)];
    for (int k = 0; k < n; ++k) {
      a[static_cast<size_t>(col * n + k)] /= p;
      inv[static_cast<size_t>(col * n + k)] /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[static_cast<size_t>(r * n + col)];
      for (int k = 0; k < n; ++k) {
        a[static_cast<size_t>(r * n + k)] -= f * a[static_cast<size_t>(col * n + k)];
        inv[static_cast<size_t>(r * n + k)] -= f * inv[static_cast<size_t>(col * n + k)];
      }
    }
  }
  return inv;
}

inline std::vector<double> christoffel_at(const MetricFn& g, std::vector<double> q, int n, double h) {
  std::vector<double> G, Gp, Gm;
  g(q, G);
  std::vector<double> Gi = invert_dense(G, n);
  std::vector<double> dG(static_cast<size_t>(n * n * n));  // [a*n*n + b*n + c] = d_c G_ab
  for (int c = 0; c < n; ++c) {
    std::vector<double> qp = q, qm = q;
    qp[static_cast<size_t>(c)] += h;
    qm[static_cast<size_t>(c)] -= h;
    g(qp, Gp);
    g(qm, Gm);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        dG[static_cast<size_t>((a * n + b) * n + c)] =
            (Gp[static_cast<size_t>(a * n + b)] - Gm[static_cast<size_t>(a * n + b)]) / (2 * h);
  }
  std::vector<double> Gam(static_cast<size_t>(n * n * n), 0.0);  // [c][a][b]
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0;
        for (int e = 0; e < n; ++e)
          s += Gi[static_cast<size_t>(c * n + e)] *
               (dG[static_cast<size_t>((e * n + a) * n + b)] + dG[static_cast<size_t>((e * n + b) * n + a)] -
                dG[static_cast<size_t>((a * n + b) * n + e)]);
        Gam[static_cast<size_t>((c * n + a) * n + b)] = 0.5 * s;
      }
  return Gam;
}

// scalar curvature with the upper-index-last contraction (sphere-negative)
inline double scalar_curvature(const MetricFn& g, const std::vector<double>& q, int n,
                               double h = 1e-4) {
  std::vector<double> G;
  g(q, G);
  std::vector<double> Gi = invert_dense(G, n);
  std::vector<double> Gam = christoffel_at(g, q, n, h);
  // dGam[s][(m,a,b)] = d_s Gam^m_ab
  std::vector<std::vector<double>> dGam(static_cast<size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::vector<double> qp = q, qm = q;
    qp[static_cast<size_t>(s)] += h;
    qm[static_cast<size_t>(s)] -= h;
    std::vector<double> Gp = christoffel_at(g, qp, n, h);
    std::vector<double> Gm = christoffel_at(g, qm, n, h);
    dGam[static_cast<size_t>(s)].resize(static_cast<size_t>(n * n * n));
    for (size_t k = 0; k < Gp.size(); ++k)
      dGam[static_cast<size_t>(s)][k] = (Gp[k] - Gm[k]) / (2 * h);
  }
  auto gam = [&](int c, int a, int b) { return Gam[static_cast<size_t>((c * n + a) * n + b)]; };
  auto dgam = [&](int s, int c, int a, int b) {
    return dGam[static_cast<size_t>(s)][static_cast<size_t>((c * n + a) * n + b)];
  };
  double R = 0;
  for (int S = 0; S < n; ++S)
    for (int C = 0; C < n; ++C) {
      const double w = Gi[static_cast<size_t>(S * n + C)];
      if (w == 0) continue;
      for (int M = 0; M < n; ++M) {
        const int E = M;
        double t = dgam(S, M, C, E) - dgam(E, M, C, S);
        for (int K = 0; K < n; ++K) t += gam(K, C, E) * gam(M, K, S) - gam(K, C, S) * gam(M, K, E);
        R += w * t;
      }
    }
  return R;
}

}  // namespace oracle

#endif
