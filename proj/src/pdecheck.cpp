#include "bundlediff/pdecheck.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "bundlediff/rng.hpp"

namespace bundlediff {

namespace {

void add_scaled(CMat& acc, cplx s, const CMat& X) {
  for (int i = 0; i < X.n * X.n; ++i) acc.a[static_cast<size_t>(i)] += s * X.a[static_cast<size_t>(i)];
}

}  // namespace

OpCoeffs assemble_operator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                           const SigmaPoint& p, DerivMode mode, double mu2, double kappa,
                           double mass) {
  const double mu2k = mu2 * kappa;
  const int n = model.dim(), m = model.gdim();
  const int d = irrep.dim();
  const auto& J = irrep.generators();
  OpCoeffs C;
  C.n = n;
  C.d = d;
  C.c1J.assign(static_cast<size_t>(n), CMat());
  for (auto& M : C.c1J) M.setZero(d);
  C.c0.setZero(d);
  const double V = model.potential(p.chart, p.q);
  const double vterm = V / (mu2 * kappa * mass);

  if (label == OpLabel::total_space) {
    Mat G;
    Ten3 dG;
    model.metric(p.chart, p.q, G);
    if (mode == DerivMode::analytic)
      model.dmetric(p.chart, p.q, dG);
    else
      fd_dmetric(model, p.chart, p.q, dG);
    Mat Ginv;
    invert(G, Ginv);
    C.h2.setZero(n, n);
    C.c1I.setZero(n);
    for (int A = 0; A < n; ++A) {
      for (int B = 0; B < n; ++B) C.h2(A, B) = 0.5 * mu2k * Ginv(A, B);
      double t1 = 0, t2 = 0;
      for (int B = 0; B < n; ++B) {
        double dAB = 0;
        for (int c = 0; c < n; ++c)
          for (int e = 0; e < n; ++e) dAB -= Ginv(A, c) * dG(c, e, B) * Ginv(e, B);
        t1 += dAB;
        double tr = 0;
        for (int c = 0; c < n; ++c)
          for (int e = 0; e < n; ++e) tr += Ginv(c, e) * dG(c, e, B);
        t2 += 0.5 * Ginv(A, B) * tr;
      }
      C.c1I[A] = 0.5 * mu2k * (t1 + t2);
    }
    for (int k = 0; k < d; ++k) C.c0(k, k) = vterm;
    return C;
  }

  FirstOrder E;
  first_order(model, p.chart, p.q, mode, E);

  // shared contractions
  Vec hHG;  // sum_{E,M} h^{EM} HGam^A_{EM}
  hHG.setZero(n);
  for (int A = 0; A < n; ++A) {
    double s = 0;
    for (int Ee = 0; Ee < n; ++Ee)
      for (int M = 0; M < n; ++M) s += E.h(Ee, M) * E.HGam(A, Ee, M);
    hHG[A] = s;
  }
  Mat NGL(n, m);  // N G^{-1} Lam^T
  for (int A = 0; A < n; ++A)
    for (int al = 0; al < m; ++al) {
      double s = 0;
      for (int c = 0; c < n; ++c)
        for (int P = 0; P < n; ++P) s += E.N(A, c) * E.Ginv(c, P) * E.Lam(al, P);
      NGL(A, al) = s;
    }
  Mat LGL(m, m);
  for (int al = 0; al < m; ++al)
    for (int sg = 0; sg < m; ++sg) {
      double s = 0;
      for (int c = 0; c < n; ++c)
        for (int P = 0; P < n; ++P) s += E.Lam(al, c) * E.Ginv(c, P) * E.Lam(sg, P);
      LGL(al, sg) = s;
    }

  C.h2.setZero(n, n);
  for (int A = 0; A < n; ++A)
    for (int B = 0; B < n; ++B) C.h2(A, B) = 0.5 * mu2k * E.h(A, B);
  C.c1I.setZero(n);

  auto jtilde = [&]() {
    double jt;
    if (model.jtilde_fast(p.chart, p.q, jt)) return jt;
    return curvature_scalars(model, p.chart, p.q, mode).Jtilde;
  };

  if (label == OpLabel::op2 || label == OpLabel::operator_2) {
    for (int A = 0; A < n; ++A) {
      double s = -hHG[A] + 2.0 * E.jI[A];
      if (label == OpLabel::op2) s += 2.0 * E.jII[A];
      C.c1I[A] = 0.5 * mu2k * s;
    }
    for (int A = 0; A < n; ++A)
      for (int al = 0; al < m; ++al)
        if (NGL(A, al) != 0) add_scaled(C.c1J[static_cast<size_t>(A)], mu2k * NGL(A, al), J[static_cast<size_t>(al)]);
    // zeroth order
    for (int al = 0; al < m; ++al)
      if (E.t_drift[al] != 0) add_scaled(C.c0, -0.5 * mu2k * E.t_drift[al], J[static_cast<size_t>(al)]);
    for (int al = 0; al < m; ++al)
      for (int sg = 0; sg < m; ++sg)
        if (LGL(al, sg) != 0)
          add_scaled(C.c0, 0.5 * mu2k * LGL(al, sg),
                     cmul(J[static_cast<size_t>(al)], J[static_cast<size_t>(sg)]));
    if (label == OpLabel::operator_2) {
      // + Lam^al_C gamma^{mn} [nabla_K K]^C J_al  and the -1/4 Jtilde potential
      for (int al = 0; al < m; ++al) {
        double s = 0;
        for (int c = 0; c < n; ++c) s += E.Lam(al, c) * E.nkk[c];
        if (s != 0) add_scaled(C.c0, 0.5 * mu2k * s, J[static_cast<size_t>(al)]);
      }
      const double jt = jtilde();
      for (int k = 0; k < d; ++k) C.c0(k, k) += -0.125 * mu2k * jt;
    }
    for (int k = 0; k < d; ++k) C.c0(k, k) += vterm;
    return C;
  }

  // horizontal-Laplacian forms
  const bool covector = (label == OpLabel::operator_3_casimir);
  // first order, identity part: operator_3 carries h^{EC} (d_C N^B_E) d_B;
  // h_kappa carries the Delta_M drift -hHG + 2 j_I
  if (covector) {
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int Ee = 0; Ee < n; ++Ee)
        for (int c = 0; c < n; ++c) s += E.h(Ee, c) * E.dN(B, Ee, c);
      double s2 = 0;
      for (int Ee = 0; Ee < n; ++Ee)
        for (int c = 0; c < n; ++c)
          for (int b = 0; b < n; ++b) s2 += E.h(Ee, c) * E.HGam(b, Ee, c) * E.N(B, b);
      C.c1I[B] = 0.5 * mu2k * (s - s2);
    }
  } else {
    for (int A = 0; A < n; ++A) C.c1I[A] = 0.5 * mu2k * (-hHG[A] + 2.0 * E.jI[A]);
  }
  // first order, J part: -2 h^{EC} A_E J (covector) / +2 (vector)
  const double sgn = covector ? -1.0 : 1.0;
  for (int c = 0; c < n; ++c)
    for (int al = 0; al < m; ++al) {
      double s = 0;
      for (int Ee = 0; Ee < n; ++Ee) s += E.h(Ee, c) * E.A(al, Ee);
      if (s != 0)
        add_scaled(C.c1J[static_cast<size_t>(c)], sgn * mu2k * s, J[static_cast<size_t>(al)]);
    }
  // zeroth order J-linear terms
  for (int al = 0; al < m; ++al) {
    double lin = 0;
    if (covector) {
      // h^{EC} [ -A_B dN(B,C,E) - dA(al,C,E) + HGam^B_{EC} N^D_B A_D ]
      for (int Ee = 0; Ee < n; ++Ee)
        for (int c = 0; c < n; ++c) {
          const double w = E.h(Ee, c);
          if (w == 0) continue;
          double t = -E.dA(al, c, Ee);
          for (int b = 0; b < n; ++b) t -= E.A(al, b) * E.dN(b, c, Ee);
          for (int b = 0; b < n; ++b)
            for (int Dd = 0; Dd < n; ++Dd) t += E.HGam(b, Ee, c) * E.N(Dd, b) * E.A(al, Dd);
          lin += w * t;
        }
    } else {
      // -h^{EB}[ d_E(N^C_B A_C) + HGam^C_{EB} N^D_C A_D ]
      for (int Ee = 0; Ee < n; ++Ee)
        for (int b = 0; b < n; ++b) {
          const double w = E.h(Ee, b);
          if (w == 0) continue;
          double t = 0;
          for (int c = 0; c < n; ++c) t += E.dN(c, b, Ee) * E.A(al, c) + E.N(c, b) * E.dA(al, c, Ee);
          for (int c = 0; c < n; ++c)
            for (int Dd = 0; Dd < n; ++Dd) t += E.HGam(c, Ee, b) * E.N(Dd, c) * E.A(al, Dd);
          lin -= w * t;
        }
    }
    if (lin != 0) add_scaled(C.c0, 0.5 * mu2k * lin, J[static_cast<size_t>(al)]);
  }
  // zeroth order J-quadratic: h^{EC} A^be_E A^al_C J_be J_al + gaminv J J
  for (int be = 0; be < m; ++be)
    for (int al = 0; al < m; ++al) {
      double s = 0;
      for (int Ee = 0; Ee < n; ++Ee)
        for (int c = 0; c < n; ++c) s += E.h(Ee, c) * E.A(be, Ee) * E.A(al, c);
      s += E.gaminv(be, al);
      if (s != 0)
        add_scaled(C.c0, 0.5 * mu2k * s, cmul(J[static_cast<size_t>(be)], J[static_cast<size_t>(al)]));
    }
  const double jt = jtilde();
  for (int k = 0; k < d; ++k) C.c0(k, k) += vterm - 0.125 * mu2k * jt;
  return C;
}

SmoothSection random_trig_section(const BundleModel& model, int d, uint64_t seed, int n_modes) {
  const int nf = model.dim() - model.gdim();
  struct Mode {
    double kx[kMaxTen];
    cplx c;
  };
  auto modes = std::make_shared<std::vector<std::vector<Mode>>>();
  modes->resize(static_cast<size_t>(d));
  const double base = model.periodic() ? 2 * 3.14159265358979323846 / (2 * model.chart_extent(0)) : 0.7;
  for (int comp = 0; comp < d; ++comp)
    for (int j = 0; j < n_modes; ++j) {
      Mode mo{};
      double z0, z1;
      for (int i = 0; i < nf; ++i) {
        normal_pair(seed, static_cast<uint64_t>(comp * 131 + j), static_cast<uint32_t>(i), 0, z0, z1);
        const int f = 1 + (static_cast<int>(std::fabs(z0) * 10) % 3);
        mo.kx[i] = base * f * (z1 > 0 ? 1 : -1);
      }
      normal_pair(seed, static_cast<uint64_t>(comp * 131 + j), 0xC0FFu, 0, z0, z1);
      mo.c = cplx(z0, z1) / std::sqrt(2.0 * n_modes);
      (*modes)[static_cast<size_t>(comp)].push_back(mo);
    }
  SmoothSection s;
  s.d = d;
  const int n = model.dim();
  s.eval = [modes, d, n, nf](const SigmaPoint& p, cplx* val, cplx* grad, cplx* hess) {
    for (int comp = 0; comp < d; ++comp) {
      cplx v = 0;
      cplx g[kMaxTen] = {};
      cplx h[kMaxTen][kMaxTen] = {};
      for (const auto& mo : (*modes)[static_cast<size_t>(comp)]) {
        double phase = 0;
        for (int i = 0; i < nf; ++i) phase += mo.kx[i] * p.q[i];
        const cplx e = mo.c * std::exp(cplx(0, phase));
        v += e;
        for (int i = 0; i < nf; ++i) {
          g[i] += cplx(0, mo.kx[i]) * e;
          for (int j = 0; j < nf; ++j) h[i][j] += -mo.kx[i] * mo.kx[j] * e;
        }
      }
      val[comp] = v;
      if (grad)
        for (int i = 0; i < n; ++i) grad[comp * n + i] = (i < nf) ? g[i] : cplx(0, 0);
      if (hess)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            hess[(comp * n + i) * n + j] = (i < nf && j < nf) ? h[i][j] : cplx(0, 0);
    }
  };
  return s;
}

void apply_generator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                     const SmoothSection& s, const SigmaPoint& p, DerivMode mode, double mu2,
                     double kappa, double mass, cplx* out) {
  OpCoeffs C = assemble_operator(label, model, irrep, p, mode, mu2, kappa, mass);
  const int n = C.n, d = C.d;
  cplx val[kMaxIrr], grad[kMaxIrr * kMaxTen], hess[kMaxIrr * kMaxTen * kMaxTen];
  s.eval(p, val, grad, hess);
  for (int comp = 0; comp < d; ++comp) {
    cplx acc = 0;
    for (int A = 0; A < n; ++A) {
      for (int B = 0; B < n; ++B)
        if (C.h2(A, B) != 0) acc += C.h2(A, B) * hess[(comp * n + A) * n + B];
      if (C.c1I[A] != 0.0) acc += C.c1I[A] * grad[comp * n + A];
      for (int q = 0; q < d; ++q) {
        const cplx j = C.c1J[static_cast<size_t>(A)](comp, q);
        if (j != cplx(0, 0)) acc += j * grad[q * n + A];
      }
    }
    for (int q = 0; q < d; ++q) acc += C.c0(comp, q) * val[q];
    out[comp] = acc;
  }
}

double operator_identity_residual(const BundleModel& model, const Irrep& irrep, int n_points,
                                  int n_sections, DerivMode mode, uint64_t seed, double mu2,
                                  double kappa, double mass) {
  double worst = 0;
  for (int sidx = 0; sidx < n_sections; ++sidx) {
    SmoothSection sec = random_trig_section(model, irrep.dim(), seed + 1000 * static_cast<uint64_t>(sidx) + 7);
    for (int pidx = 0; pidx < n_points; ++pidx) {
      SigmaPoint p = model.random_sigma_point(seed ^ 0x0b5e55ull, static_cast<uint64_t>(sidx * n_points + pidx));
      cplx y1[kMaxIrr], y2[kMaxIrr];
      apply_generator(OpLabel::operator_2, model, irrep, sec, p, mode, mu2, kappa, mass, y1);
      apply_generator(OpLabel::operator_3_casimir, model, irrep, sec, p, mode, mu2, kappa, mass, y2);
      double num = 0, den = 1e-30;
      for (int k = 0; k < irrep.dim(); ++k) {
        num = std::max(num, std::abs(y1[k] - y2[k]));
        den = std::max(den, std::max(std::abs(y1[k]), std::abs(y2[k])));
      }
      worst = std::max(worst, num / den);
    }
  }
  return worst;
}

// ---- grids -----------------------------------------------------------------

SigmaPoint GridSection::point_of(const BundleModel& model, long node) const {
  SigmaPoint p;
  p.chart = node_chart[static_cast<size_t>(node)];
  p.q.setZero(model.dim());
  p.q[0] = x0 + node_ix[static_cast<size_t>(node)] * h;
  p.q[1] = y0 + node_iy[static_cast<size_t>(node)] * h;
  return p;
}

namespace {

struct GridIndex {
  int ncharts, nx, ny;
  std::vector<int> map;  // chart * nx * ny
  int at(int c, int i, int j) const {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return -1;
    return map[static_cast<size_t>((c * nx + i) * ny + j)];
  }
};

GridIndex build_index(const GridSection& g) {
  GridIndex gi{g.ncharts, g.nx, g.ny, {}};
  gi.map.assign(static_cast<size_t>(g.ncharts * g.nx * g.ny), -1);
  for (long m = 0; m < g.n_nodes(); ++m)
    gi.map[static_cast<size_t>((g.node_chart[static_cast<size_t>(m)] * g.nx + g.node_ix[static_cast<size_t>(m)]) * g.ny +
                               g.node_iy[static_cast<size_t>(m)])] = static_cast<int>(m);
  return gi;
}

// cubic Lagrange weights for the 4 nodes i-1..i+2 around fractional position t in [0,1)
void cubic_weights(double t, double w[4]) {
  w[0] = -t * (t - 1) * (t - 2) / 6.0;
  w[1] = (t + 1) * (t - 1) * (t - 2) / 2.0;
  w[2] = -(t + 1) * t * (t - 2) / 2.0;
  w[3] = (t + 1) * t * (t - 1) / 6.0;
}

constexpr double kPi = 3.14159265358979323846264338327950288;

}  // namespace

GridSection make_grid(const BundleModel& model, double h, double extent, int d) {
  GridSection g;
  g.d = d;
  g.ncharts = model.charts();
  if (extent <= 0) extent = model.chart_extent(0);
  if (model.periodic()) {
    const double L = 2 * model.chart_extent(0);
    const int nx = std::max(4, static_cast<int>(std::lround(L / h)));
    g.nx = g.ny = nx;
    g.h = L / nx;
    g.x0 = g.y0 = -0.5 * L;
    g.ncharts = 1;
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < nx; ++j) {
        g.node_chart.push_back(0);
        g.node_ix.push_back(i);
        g.node_iy.push_back(j);
      }
  } else {
    const int nx = 2 * static_cast<int>(std::ceil(extent / h)) + 1;
    g.nx = g.ny = nx;
    g.h = h;
    g.x0 = g.y0 = -extent;
    for (int c = 0; c < g.ncharts; ++c)
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j) {
          const double x = g.x0 + i * h, y = g.y0 + j * h;
          if (x * x + y * y <= extent * extent + 1e-12) {
            g.node_chart.push_back(c);
            g.node_ix.push_back(i);
            g.node_iy.push_back(j);
          }
        }
  }
  g.values.assign(static_cast<size_t>(g.n_nodes() * d), cplx(0, 0));
  return g;
}

void fill_grid(GridSection& g, const BundleModel& model,
               const std::function<void(const SigmaPoint&, cplx*)>& f) {
  cplx buf[kMaxIrr];
  for (long nn = 0; nn < g.n_nodes(); ++nn) {
    f(g.point_of(model, nn), buf);
    for (int k = 0; k < g.d; ++k) g.values[static_cast<size_t>(nn * g.d + k)] = buf[k];
  }
}

namespace {

using SpMat = Eigen::SparseMatrix<std::complex<double>>;
using Trip = Eigen::Triplet<std::complex<double>>;

// the forward operator acts on the associated vector bundle, whose sections
// transition with the inverse representation factor; every other label acts
// on covector sections
bool vector_bundle_label(OpLabel l) { return l == OpLabel::h_kappa; }

// seam transition matrix T with psi^c_n(w) = sum_m T(m, n) psi^{oc}_m(1/w):
// covector sections use T = D(g(arg w)); vector sections use T = D(g(arg w))^{-T}
CMat seam_matrix(const Irrep& irrep, double x, double y, bool vector_bundle) {
  GroupElement t(std::atan2(y, x));
  if (!vector_bundle) return irrep.matrix(t);
  CMat Dinv = irrep.matrix(GroupElement(-t.a[0]));
  return ctranspose(Dinv);
}

// interpolation of the other chart's values (with transition factor) for a
// ghost position in chart `c` at coordinates (x, y)
void ghost_row(const BundleModel& model, const Irrep& irrep, const GridSection& g,
               const GridIndex& gi, int c, double x, double y, int comp,
               std::vector<Trip>& trips, long row, cplx scale, bool vector_bundle) {
  const int oc = 1 - c;
  const double w2 = x * x + y * y;
  const double xo = x / w2, yo = -y / w2;
  const int d = g.d;
  CMat D = seam_matrix(irrep, x, y, vector_bundle);
  const double fx = (xo - g.x0) / g.h, fy = (yo - g.y0) / g.h;
  const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
  double wx[4], wy[4];
  cubic_weights(fx - i0, wx);
  cubic_weights(fy - j0, wy);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const int idx = gi.at(oc, i0 - 1 + a, j0 - 1 + b);
      if (idx < 0) throw std::runtime_error("grid: ghost interpolation stencil left the chart");
      const double w = wx[a] * wy[b];
      if (w == 0) continue;
      for (int mm = 0; mm < d; ++mm)
        trips.emplace_back(row, static_cast<long>(idx) * d + mm, scale * w * D(mm, comp));
    }
}

// sparse matrix of the labelled operator over the composite grid
SpMat build_grid_operator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                          const GridSection& g, const EvolveOptions& opt) {
  const GridIndex gi = build_index(g);
  const int d = g.d;
  const long N = g.n_nodes();
  std::vector<Trip> trips;
  trips.reserve(static_cast<size_t>(N * d * 12));
  const bool periodic = model.periodic();
  const double h = g.h, h2 = h * h;

  // neighbor accessor: returns column index base or -1; for ghosts appends
  // interpolation rows directly
  auto add_entry = [&](long row_base, int c, int i, int j, const CMat& w) {
    int idx = -1;
    int ii = i, jj = j;
    if (periodic) {
      ii = (i % g.nx + g.nx) % g.nx;
      jj = (j % g.ny + g.ny) % g.ny;
      idx = gi.at(c, ii, jj);
    } else {
      idx = gi.at(c, i, j);
    }
    if (idx >= 0) {
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q)
          if (w(p, q) != cplx(0, 0)) trips.emplace_back(row_base + p, static_cast<long>(idx) * d + q, w(p, q));
      return;
    }
    // ghost: interpolate from the other chart (two-chart models only)
    const double x = g.x0 + i * h, y = g.y0 + j * h;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q)
        if (w(p, q) != cplx(0, 0))
          ghost_row(model, irrep, g, gi, c, x, y, q, trips, row_base + p, w(p, q),
                    vector_bundle_label(label));
  };

  for (long nn = 0; nn < N; ++nn) {
    const int c = g.node_chart[static_cast<size_t>(nn)];
    const int i = g.node_ix[static_cast<size_t>(nn)];
    const int j = g.node_iy[static_cast<size_t>(nn)];
    const SigmaPoint p = g.point_of(model, nn);
    OpCoeffs C = assemble_operator(label, model, irrep, p, opt.mode, opt.mu2, opt.kappa, opt.mass);
    const long row = nn * d;
    CMat W(d);

    // second derivatives: axes 0 and 1 are the grid directions
    const double cxx = C.h2(0, 0), cyy = C.h2(1, 1), cxy = C.h2(0, 1) + C.h2(1, 0);
    // diagonal terms
    W.setZero(d);
    for (int k = 0; k < d; ++k) W(k, k) = cxx / h2;
    add_entry(row, c, i + 1, j, W);
    add_entry(row, c, i - 1, j, W);
    W.setZero(d);
    for (int k = 0; k < d; ++k) W(k, k) = cyy / h2;
    add_entry(row, c, i, j + 1, W);
    add_entry(row, c, i, j - 1, W);
    if (cxy != 0) {
      W.setZero(d);
      for (int k = 0; k < d; ++k) W(k, k) = cxy / (4 * h2);
      add_entry(row, c, i + 1, j + 1, W);
      add_entry(row, c, i - 1, j - 1, W);
      for (int k = 0; k < d; ++k) W(k, k) = -cxy / (4 * h2);
      add_entry(row, c, i + 1, j - 1, W);
      add_entry(row, c, i - 1, j + 1, W);
    }
    // first derivatives
    for (int axis = 0; axis < 2; ++axis) {
      CMat cJ = C.c1J[static_cast<size_t>(axis)];
      for (int k = 0; k < d; ++k) cJ(k, k) += C.c1I[axis];
      bool nonzero = false;
      for (int k = 0; k < d * d; ++k)
        if (cJ.a[static_cast<size_t>(k)] != cplx(0, 0)) nonzero = true;
      if (!nonzero) continue;
      CMat Wp = cJ, Wm = cJ;
      for (int k = 0; k < d * d; ++k) {
        Wp.a[static_cast<size_t>(k)] *= 0.5 / h;
        Wm.a[static_cast<size_t>(k)] *= -0.5 / h;
      }
      add_entry(row, c, i + (axis == 0), j + (axis == 1), Wp);
      add_entry(row, c, i - (axis == 0), j - (axis == 1), Wm);
    }
    // zeroth order + diagonal of the second-derivative stencil
    W = C.c0;
    for (int k = 0; k < d; ++k) W(k, k) += -2.0 * (cxx + cyy) / h2;
    add_entry(row, c, i, j, W);
  }
  SpMat H(N * d, N * d);
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

}  // namespace

GridSection apply_grid_operator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                                const GridSection& u, const EvolveOptions& opt) {
  SpMat H = build_grid_operator(label, model, irrep, u, opt);
  Eigen::Map<const Eigen::VectorXcd> x(u.values.data(), static_cast<long>(u.values.size()));
  Eigen::VectorXcd y = H * x;
  GridSection out = u;
  for (size_t k = 0; k < out.values.size(); ++k) out.values[k] = y[static_cast<long>(k)];
  return out;
}

GridSection evolve(OpLabel label, const BundleModel& model, const Irrep& irrep,
                   const GridSection& initial, const EvolveOptions& opt) {
  if (opt.t_span <= 0) return initial;
  SpMat H = build_grid_operator(label, model, irrep, initial, opt);
  const long N = static_cast<long>(initial.values.size());
  Eigen::VectorXcd u(N);
  for (long k = 0; k < N; ++k) u[k] = initial.values[static_cast<size_t>(k)];
  const int nsteps = std::max(1, static_cast<int>(std::lround(opt.t_span / opt.dt)));
  const double dt = opt.t_span / nsteps;

  if (opt.stepper == Stepper::explicit_euler) {
    const double u0 = u.norm();
    for (int s = 0; s < nsteps; ++s) {
      u += dt * (H * u);
      if (u.norm() > 50 * (u0 + 1.0))
        throw std::runtime_error("Instability: explicit Euler step diverged");
    }
  } else {
    SpMat I(N, N);
    I.setIdentity();
    SpMat A = I - (dt / 2.0) * H;
    SpMat B = I + (dt / 2.0) * H;
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("evolve: Crank-Nicolson factorization failed");
    for (int s = 0; s < nsteps; ++s) {
      Eigen::VectorXcd rhs = B * u;
      u = lu.solve(rhs);
    }
  }
  GridSection out = initial;
  for (long k = 0; k < N; ++k) out.values[static_cast<size_t>(k)] = u[k];
  return out;
}

void grid_value(const GridSection& g, const BundleModel& model, const Irrep& irrep,
                const SigmaPoint& p, cplx* out, bool vector_bundle) {
  const GridIndex gi = build_index(g);
  int c = p.chart;
  double x = p.q[0], y = p.q[1];
  const int d = g.d;
  bool transition = false;
  if (g.ncharts == 1) {
    c = 0;
  } else {
    // convert into a chart where the 4x4 stencil is interior
    const double lim = g.x0 + (g.nx - 3) * g.h;
    if (std::hypot(x, y) > std::fabs(lim)) {
      const double w2 = x * x + y * y;
      const double xn = x / w2, yn = -y / w2;
      x = xn;
      y = yn;
      c = 1 - c;
      transition = true;
    }
  }
  double fx = (x - g.x0) / g.h, fy = (y - g.y0) / g.h;
  if (model.periodic()) {
    fx = std::fmod(fx, static_cast<double>(g.nx));
    if (fx < 0) fx += g.nx;
    fy = std::fmod(fy, static_cast<double>(g.ny));
    if (fy < 0) fy += g.ny;
  }
  const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
  double wx[4], wy[4];
  cubic_weights(fx - i0, wx);
  cubic_weights(fy - j0, wy);
  for (int k = 0; k < d; ++k) out[k] = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      int ii = i0 - 1 + a, jj = j0 - 1 + b;
      if (model.periodic()) {
        ii = (ii % g.nx + g.nx) % g.nx;
        jj = (jj % g.ny + g.ny) % g.ny;
      }
      const int idx = gi.at(c, ii, jj);
      if (idx < 0) throw std::runtime_error("grid_value: stencil outside grid");
      for (int k = 0; k < d; ++k)
        out[k] += wx[a] * wy[b] * g.values[static_cast<size_t>(idx) * d + static_cast<size_t>(k)];
    }
  if (transition) {
    // value interpolated in the other chart's trivialization; convert back
    CMat D = seam_matrix(irrep, p.q[0], p.q[1], vector_bundle);
    cplx tmp[kMaxIrr];
    for (int nnn = 0; nnn < d; ++nnn) {
      cplx s = 0;
      for (int mm = 0; mm < d; ++mm) s += D(mm, nnn) * out[mm];
      tmp[nnn] = s;
    }
    for (int k = 0; k < d; ++k) out[k] = tmp[k];
  }
}

cplx scalar_product(const GridSection& a, const GridSection& b, const BundleModel& model,
                    VolumeWeight w, DerivMode mode) {
  if (a.n_nodes() != b.n_nodes() || a.d != b.d)
    throw std::runtime_error("scalar_product: incompatible grids");
  cplx acc = 0;
  const auto freei = model.free_indices();
  const int nf = static_cast<int>(freei.size());
  for (long nn = 0; nn < a.n_nodes(); ++nn) {
    const SigmaPoint p = a.point_of(model, nn);
    if (a.ncharts > 1) {
      // partition of the sphere between the two charts at |w| = 1
      const double r = std::hypot(p.q[0], p.q[1]);
      if (p.chart == 0 && r > 1.0) continue;
      if (p.chart == 1 && r >= 1.0) continue;
    }
    FirstOrder E;
    first_order(model, p.chart, p.q, mode, E);
    Mat PGP = matmul(transpose(E.Pperp), matmul(E.GH, E.Pperp));
    Mat PGPf(nf, nf);
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j) PGPf(i, j) = PGP(freei[static_cast<size_t>(i)], freei[static_cast<size_t>(j)]);
    double dens = std::sqrt(std::fabs(determinant(PGPf)));
    if (w == VolumeWeight::eq33) dens *= std::sqrt(E.detgam);
    cplx dot = 0;
    for (int k = 0; k < a.d; ++k)
      dot += std::conj(a.values[static_cast<size_t>(nn * a.d + k)]) * b.values[static_cast<size_t>(nn * a.d + k)];
    acc += dot * dens;
  }
  return acc * (a.h * a.h);
}

}  // namespace bundlediff
