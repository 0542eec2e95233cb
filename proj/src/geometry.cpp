#include "bundlediff/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlediff/rng.hpp"

namespace bundlediff {

namespace {

// lowered Christoffel-type symbol from a metric derivative:
// L(E,A,B) = (dM(E,A,B) + dM(E,B,A) - dM(A,B,E)) / 2, raised with R
void raise_christoffel(const Mat& R, const Ten3& dM, int n, Ten3& out) {
  out.setZero(n, n, n);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0;
        for (int e = 0; e < n; ++e)
          s += R(c, e) * (dM(e, a, b) + dM(e, b, a) - dM(a, b, e));
        out(c, a, b) = 0.5 * s;
      }
}

}  // namespace

template <int CN, int CM>
void first_order_impl(const BundleModel& model, int chart, const Vec& Q, DerivMode mode,
                      FirstOrder& E, GeomLevel level) {
  const int n = CN > 0 ? CN : model.dim();
  const int m = CN > 0 ? CM : model.gdim();
  E.n = n;
  E.m = m;

  model.metric(chart, Q, E.G);
  if (mode == DerivMode::analytic) {
    model.dmetric(chart, Q, E.dG);
    model.dkilling(chart, Q, E.dK);
  } else {
    fd_dmetric(model, chart, Q, E.dG);
    fd_dkilling(model, chart, Q, E.dK);
  }
  model.killing(chart, Q, E.K);
  Mat dchi;
  Ten3 ddchi;
  model.dgauge(chart, Q, dchi);
  model.d2gauge(chart, Q, ddchi);

  E.detG = invert(E.G, E.Ginv);

  // gamma_{mn} = K^A_m G_AB K^B_n ; Kflat_{mB} = K^A_m G_AB
  E.Kflat.setZero(m, n);
  for (int mu = 0; mu < m; ++mu)
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int A = 0; A < n; ++A) s += E.K(A, mu) * E.G(A, B);
      E.Kflat(mu, B) = s;
    }
  E.gam.setZero(m, m);
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu) {
      double s = 0;
      for (int B = 0; B < n; ++B) s += E.Kflat(mu, B) * E.K(B, nu);
      E.gam(mu, nu) = s;
    }
  E.detgam = invert(E.gam, E.gaminv);
  if (E.detgam <= 0) throw std::runtime_error("SingularOrbitMetric: det gamma <= 0");

  // Phi^a_m = dchi^a_A K^A_m
  E.Phi.setZero(m, m);
  for (int a = 0; a < m; ++a)
    for (int mu = 0; mu < m; ++mu) {
      double s = 0;
      for (int A = 0; A < n; ++A) s += dchi(a, A) * E.K(A, mu);
      E.Phi(a, mu) = s;
    }
  const double detPhi = invert(E.Phi, E.Phiinv);
  {
    // crude condition estimate: max|Phi| * max|Phi^-1| * m
    const double c = max_abs(E.Phi) * max_abs(E.Phiinv) * m;
    E.cond_Phi = c;
    if (!(std::fabs(detPhi) > 0) || c > 1e8)
      throw std::runtime_error("GaugeNotTransversal: Faddeev-Popov matrix ill-conditioned");
  }

  // Lam^a_B = Phiinv^a_m dchi^m_B ; N = I - K Lam ; A = gaminv Kflat ; Pi = I - K A
  E.Lam = matmul(E.Phiinv, dchi);
  E.N.setIdentity(n);
  E.Pi.setIdentity(n);
  E.A = matmul(E.gaminv, E.Kflat);
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B) {
      double s1 = 0, s2 = 0;
      for (int mu = 0; mu < m; ++mu) {
        s1 += E.K(Aa, mu) * E.Lam(mu, B);
        s2 += E.K(Aa, mu) * E.A(mu, B);
      }
      E.N(Aa, B) -= s1;
      E.Pi(Aa, B) -= s2;
    }

  // GH = G - Kflat^T gaminv Kflat
  E.GH = E.G;
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int mu = 0; mu < m; ++mu)
        for (int nu = 0; nu < m; ++nu) s += E.Kflat(mu, Aa) * E.gaminv(mu, nu) * E.Kflat(nu, B);
      E.GH(Aa, B) -= s;
    }

  // chiT^A_m = G^{AB} gam_{mn} dchi^n_B ; Pperp = I - chiT (chi chiT)^{-1} dchi
  const bool want_proj = level != GeomLevel::step;
  if (want_proj) {
  E.chiT.setZero(n, m);
  for (int Aa = 0; Aa < n; ++Aa)
    for (int mu = 0; mu < m; ++mu) {
      double s = 0;
      for (int B = 0; B < n; ++B)
        for (int nu = 0; nu < m; ++nu) s += E.Ginv(Aa, B) * E.gam(mu, nu) * dchi(nu, B);
      E.chiT(Aa, mu) = s;
    }
  Mat cct(m, m), cctInv;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double s = 0;
      for (int B = 0; B < n; ++B) s += dchi(a, B) * E.chiT(B, b);
      cct(a, b) = s;
    }
  invert(cct, cctInv);
  E.Pperp.setIdentity(n);
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) s += E.chiT(Aa, a) * cctInv(a, b) * dchi(b, B);
      E.Pperp(Aa, B) -= s;
    }
  }

  // h^{FB} = N^F_S G^{SE} N^B_E
  E.h.setZero(n, n);
  for (int F = 0; F < n; ++F)
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int S = 0; S < n; ++S)
        for (int Ee = 0; Ee < n; ++Ee) s += E.N(F, S) * E.Ginv(S, Ee) * E.N(B, Ee);
      E.h(F, B) = s;
    }

  // Christoffels of G
  raise_christoffel(E.Ginv, E.dG, n, E.Gam);

  // derivative composites
  // dgam(m,n,Ee) = dK G K + K dG K + K G dK
  E.dgam.setZero(m, m, n);
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int A = 0; A < n; ++A)
          for (int B = 0; B < n; ++B)
            s += E.dK(A, mu, Ee) * E.G(A, B) * E.K(B, nu) + E.K(A, mu) * E.dG(A, B, Ee) * E.K(B, nu) +
                 E.K(A, mu) * E.G(A, B) * E.dK(B, nu, Ee);
        E.dgam(mu, nu, Ee) = s;
      }
  // dKflat(m,B,Ee)
  Ten3 dKflat;
  dKflat.setZero(m, n, n);
  for (int mu = 0; mu < m; ++mu)
    for (int B = 0; B < n; ++B)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int A = 0; A < n; ++A)
          s += E.dK(A, mu, Ee) * E.G(A, B) + E.K(A, mu) * E.dG(A, B, Ee);
        dKflat(mu, B, Ee) = s;
      }
  // dgaminv = -gaminv dgam gaminv
  Ten3 dgaminv;
  dgaminv.setZero(m, m, n);
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int p = 0; p < m; ++p)
          for (int q = 0; q < m; ++q) s += E.gaminv(mu, p) * E.dgam(p, q, Ee) * E.gaminv(q, nu);
        dgaminv(mu, nu, Ee) = -s;
      }
  // dA(a,P,Ee) = dgaminv Kflat + gaminv dKflat
  E.dA.setZero(m, n, n);
  for (int a = 0; a < m; ++a)
    for (int P = 0; P < n; ++P)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int mu = 0; mu < m; ++mu)
          s += dgaminv(a, mu, Ee) * E.Kflat(mu, P) + E.gaminv(a, mu) * dKflat(mu, P, Ee);
        E.dA(a, P, Ee) = s;
      }
  // curvature F(a,Ee,P) = d_E A_P - d_P A_E + c^a_{ns} A^n_E A^s_P
  const auto& grp = model.group();
  const bool want_full = level == GeomLevel::full;
  if (want_full) {
  E.Fcurv.setZero(m, n, n);
  for (int a = 0; a < m; ++a)
    for (int Ee = 0; Ee < n; ++Ee)
      for (int P = 0; P < n; ++P) {
        double s = E.dA(a, P, Ee) - E.dA(a, Ee, P);
        for (int nu = 0; nu < m; ++nu)
          for (int sg = 0; sg < m; ++sg)
            s += grp.structure(a, nu, sg) * E.A(nu, Ee) * E.A(sg, P);
        E.Fcurv(a, Ee, P) = s;
      }
  }
  // dGH(A,B,Ee) = dG - d(Kflat^T gaminv Kflat)
  Ten3 dGH;
  dGH.setZero(n, n, n);
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = E.dG(Aa, B, Ee);
        for (int mu = 0; mu < m; ++mu)
          for (int nu = 0; nu < m; ++nu)
            s -= dKflat(mu, Aa, Ee) * E.gaminv(mu, nu) * E.Kflat(nu, B) +
                 E.Kflat(mu, Aa) * dgaminv(mu, nu, Ee) * E.Kflat(nu, B) +
                 E.Kflat(mu, Aa) * E.gaminv(mu, nu) * dKflat(nu, B, Ee);
        dGH(Aa, B, Ee) = s;
      }
  // HGam: (sd6) resolved by raising with the full inverse metric
  raise_christoffel(E.Ginv, dGH, n, E.HGam);

  // dPhi(a,m,Ee) = ddchi K + dchi dK ; dPhiinv ; dLam = dPhiinv dchi + Phiinv ddchi
  Ten3 dPhi;
  dPhi.setZero(m, m, n);
  for (int a = 0; a < m; ++a)
    for (int mu = 0; mu < m; ++mu)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int A = 0; A < n; ++A)
          s += ddchi(a, A, Ee) * E.K(A, mu) + dchi(a, A) * E.dK(A, mu, Ee);
        dPhi(a, mu, Ee) = s;
      }
  Ten3 dPhiinv;
  dPhiinv.setZero(m, m, n);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int p = 0; p < m; ++p)
          for (int q = 0; q < m; ++q) s += E.Phiinv(a, p) * dPhi(p, q, Ee) * E.Phiinv(q, b);
        dPhiinv(a, b, Ee) = -s;
      }
  E.dLam.setZero(m, n, n);
  for (int a = 0; a < m; ++a)
    for (int B = 0; B < n; ++B)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int mu = 0; mu < m; ++mu)
          s += dPhiinv(a, mu, Ee) * dchi(mu, B) + E.Phiinv(a, mu) * ddchi(mu, B, Ee);
        E.dLam(a, B, Ee) = s;
      }
  // dN(A,B,Ee) = -(dK Lam + K dLam)
  E.dN.setZero(n, n, n);
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B)
      for (int Ee = 0; Ee < n; ++Ee) {
        double s = 0;
        for (int mu = 0; mu < m; ++mu)
          s += E.dK(Aa, mu, Ee) * E.Lam(mu, B) + E.K(Aa, mu) * E.dLam(mu, B, Ee);
        E.dN(Aa, B, Ee) = -s;
      }

  // j_II = -1/2 N^A_C [gaminv^{ab} (nabla_{K_a} K_b)^C]
  Vec& nkk = E.nkk;
  nkk.setZero(n);
  for (int C = 0; C < n; ++C) {
    double s = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double t = 0;
        for (int A = 0; A < n; ++A) {
          t += E.K(A, a) * E.dK(C, b, A);
          for (int B = 0; B < n; ++B) t += E.K(A, a) * E.K(B, b) * E.Gam(C, A, B);
        }
        s += E.gaminv(a, b) * t;
      }
    nkk[C] = s;
  }
  E.jII.setZero(n);
  for (int Aa = 0; Aa < n; ++Aa) {
    double s = 0;
    for (int C = 0; C < n; ++C) s += E.N(Aa, C) * nkk[C];
    E.jII[Aa] = -0.5 * s;
  }

  // j_I = 1/2 h^{LM} dN^A_{L,M} - 1/2 N^A_B HGam^B_{CD} h^{CD} + 1/2 h^{CB} HGam^A_{CB}
  E.jI.setZero(n);
  for (int Aa = 0; Aa < n; ++Aa) {
    double s = 0;
    for (int L = 0; L < n; ++L)
      for (int M = 0; M < n; ++M) s += E.h(L, M) * E.dN(Aa, L, M);
    for (int B = 0; B < n; ++B)
      for (int C = 0; C < n; ++C)
        for (int D = 0; D < n; ++D) s -= E.N(Aa, B) * E.HGam(B, C, D) * E.h(C, D);
    for (int C = 0; C < n; ++C)
      for (int B = 0; B < n; ++B) s += E.h(C, B) * E.HGam(Aa, C, B);
    E.jI[Aa] = 0.5 * s;
  }

  // projected second fundamental form and its square
  // Dg(Ee,a,b) = d_E gam_ab - c^s_{ma} A^m_E gam_sb - c^s_{mb} A^m_E gam_sa
  E.F2 = 0;
  E.RG = 0;
  E.jnorm2 = 0;
  if (want_full) {
  E.secff.setZero(n, m, m);
  for (int B = 0; B < n; ++B)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double s = 0;
        for (int Ee = 0; Ee < n; ++Ee) {
          double Dg = E.dgam(a, b, Ee);
          for (int sg = 0; sg < m; ++sg)
            for (int mu = 0; mu < m; ++mu)
              Dg -= grp.structure(sg, mu, a) * E.A(mu, Ee) * E.gam(sg, b) +
                    grp.structure(sg, mu, b) * E.A(mu, Ee) * E.gam(sg, a);
          s += E.h(B, Ee) * Dg;
        }
        E.secff(B, a, b) = -0.5 * s;
      }
  E.jnorm2 = 0;
  for (int Aa = 0; Aa < n; ++Aa)
    for (int B = 0; B < n; ++B) {
      double s = 0;
      for (int a = 0; a < m; ++a)
        for (int mu = 0; mu < m; ++mu)
          for (int b = 0; b < m; ++b)
            for (int nu = 0; nu < m; ++nu)
              s += E.gaminv(a, mu) * E.gaminv(b, nu) * E.secff(Aa, a, b) * E.secff(B, mu, nu);
      E.jnorm2 += E.GH(Aa, B) * s;
    }

  // F2 = h^{FB} h^{PA} gam_{mn} F^m_{PF} F^n_{AB}
  for (int P = 0; P < n; ++P)
    for (int F = 0; F < n; ++F)
      for (int Aa = 0; Aa < n; ++Aa)
        for (int B = 0; B < n; ++B) {
          double s = 0;
          for (int mu = 0; mu < m; ++mu)
            for (int nu = 0; nu < m; ++nu)
              s += E.gam(mu, nu) * E.Fcurv(mu, P, F) * E.Fcurv(nu, Aa, B);
          E.F2 += E.h(F, B) * E.h(P, Aa) * s;
        }

  // R_G = 1/2 g^{mn} c^s_{ma} c^a_{ns} + 1/4 g_{ms} g^{ap} g^{en} c^m_{ea} c^s_{np}
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu) {
      double s = 0;
      for (int sg = 0; sg < m; ++sg)
        for (int a = 0; a < m; ++a) s += grp.structure(sg, mu, a) * grp.structure(a, nu, sg);
      E.RG += 0.5 * E.gaminv(mu, nu) * s;
    }
  for (int mu = 0; mu < m; ++mu)
    for (int sg = 0; sg < m; ++sg)
      for (int a = 0; a < m; ++a)
        for (int p = 0; p < m; ++p)
          for (int e = 0; e < m; ++e)
            for (int nu = 0; nu < m; ++nu)
              E.RG += 0.25 * E.gam(mu, sg) * E.gaminv(a, p) * E.gaminv(e, nu) *
                      grp.structure(mu, e, a) * grp.structure(sg, nu, p);
  }

  // LmA = Lam - A ; t_drift^b = t1 + t2 - t3
  E.LmA = E.Lam - E.A;
  E.t_drift.setZero(m);
  for (int b = 0; b < m; ++b) {
    double t1 = 0, t2 = 0, t3 = 0;
    for (int R = 0; R < n; ++R)
      for (int S = 0; S < n; ++S) {
        double gs = E.Ginv(R, S);
        if (gs == 0) continue;
        for (int B = 0; B < n; ++B) t1 += gs * E.Gam(B, R, S) * E.Lam(b, B);
      }
    for (int R = 0; R < n; ++R)
      for (int P = 0; P < n; ++P) {
        const double gs = E.Ginv(R, P);
        if (gs == 0) continue;
        for (int s_ = 0; s_ < m; ++s_)
          for (int B = 0; B < n; ++B) t2 += gs * E.Lam(s_, R) * E.Lam(b, B) * E.dK(B, s_, P);
      }
    for (int C = 0; C < n; ++C)
      for (int Aa = 0; Aa < n; ++Aa) {
        const double gs = E.Ginv(C, Aa);
        if (gs == 0) continue;
        for (int M = 0; M < n; ++M) t3 += gs * E.N(M, C) * E.dLam(b, Aa, M);
      }
    E.t_drift[b] = t1 + t2 - t3;
  }
}

void first_order(const BundleModel& model, int chart, const Vec& Q, DerivMode mode, FirstOrder& E,
                 GeomLevel level) {
  const int n = model.dim(), m = model.gdim();
  if (n == 3 && m == 1)
    first_order_impl<3, 1>(model, chart, Q, mode, E, level);
  else if (n == 6 && m == 3)
    first_order_impl<6, 3>(model, chart, Q, mode, E, level);
  else
    first_order_impl<0, 0>(model, chart, Q, mode, E, level);
}

namespace {

void hgam_at(const BundleModel& model, int chart, const Vec& Q, DerivMode mode, Ten3& HGam,
             Ten3& Gam) {
  FirstOrder E;
  first_order(model, chart, Q, mode, E);
  HGam = E.HGam;
  Gam = E.Gam;
}

// bracket-contracted curvature of a Christoffel field:
// R = sum w(S,C) pr(Ee,M) [ d_S Gam^M_CEe - d_Ee Gam^M_CS + Gam^K_CEe Gam^M_KS - Gam^K_CS Gam^M_KEe ]
double contract_curvature(const Ten3& Gam, const Ten3 dGam[], const Mat& w, const Mat& pr, int n) {
  double R = 0;
  for (int S = 0; S < n; ++S)
    for (int C = 0; C < n; ++C) {
      const double ws = w(S, C);
      if (ws == 0) continue;
      for (int Ee = 0; Ee < n; ++Ee)
        for (int M = 0; M < n; ++M) {
          const double pm = pr(Ee, M);
          if (pm == 0) continue;
          double t = dGam[S](M, C, Ee) - dGam[Ee](M, C, S);
          for (int K = 0; K < n; ++K) t += Gam(K, C, Ee) * Gam(M, K, S) - Gam(K, C, S) * Gam(M, K, Ee);
          R += ws * pm * t;
        }
    }
  return R;
}

}  // namespace

CurvatureScalars curvature_scalars(const BundleModel& model, int chart, const Vec& Q,
                                   DerivMode mode, double h, bool richardson) {
  const int n = model.dim();
  FirstOrder E;
  first_order(model, chart, Q, mode, E);

  auto eval_at_h = [&](double hh, double& RP, double& HR) {
    // derivative tensors of Gam and HGam by central differences of the
    // first-order assembly
    Ten3 dG_[kMaxTen], dH_[kMaxTen];
    Ten3 Gp, Gm, Hp, Hm;
    for (int s = 0; s < n; ++s) {
      Vec qp = Q, qm = Q;
      qp[s] += hh;
      qm[s] -= hh;
      hgam_at(model, chart, qp, mode, Hp, Gp);
      hgam_at(model, chart, qm, mode, Hm, Gm);
      dG_[s].setZero(n, n, n);
      dH_[s].setZero(n, n, n);
      for (size_t i = 0; i < static_cast<size_t>(n * n * n); ++i) {
        dG_[s].a[i] = (Gp.a[i] - Gm.a[i]) / (2 * hh);
        dH_[s].a[i] = (Hp.a[i] - Hm.a[i]) / (2 * hh);
      }
    }
    Mat eye;
    eye.setIdentity(n);
    RP = contract_curvature(E.Gam, dG_, E.Ginv, eye, n);
    HR = contract_curvature(E.HGam, dH_, E.h, E.N, n);
  };

  CurvatureScalars sc;
  double RP1, HR1;
  eval_at_h(h, RP1, HR1);
  if (richardson) {
    double RP2, HR2;
    eval_at_h(h / 2, RP2, HR2);
    RP1 = (4 * RP2 - RP1) / 3.0;
    HR1 = (4 * HR2 - HR1) / 3.0;
  }
  sc.RP = RP1;
  sc.HR = HR1;
  sc.RG = E.RG;
  sc.F2 = E.F2;
  sc.jnorm2 = E.jnorm2;
  sc.Jtilde = sc.RP - sc.HR - sc.RG - 0.25 * sc.F2 - sc.jnorm2;
  return sc;
}

GeometryReport geometry_report(const BundleModel& model, const SigmaPoint& p, DerivMode mode,
                               bool with_scalars) {
  GeometryReport rep;
  rep.point = p;
  rep.mode = mode;
  {
    Vec q = p.q;
    Vec chi;
    model.gauge(p.chart, q, chi);
    for (int a = 0; a < model.gdim(); ++a)
      if (std::fabs(chi[a]) > 1e-10)
        throw std::runtime_error("geometry_report: point not on Sigma");
  }
  first_order(model, p.chart, p.q, mode, rep.fo);
  if (with_scalars) rep.sc = curvature_scalars(model, p.chart, p.q, mode);

  const FirstOrder& E = rep.fo;
  const int n = E.n, m = E.m;
  // projector identities
  Mat NN = matmul(E.N, E.N) - E.N;
  Mat NP = matmul(E.N, E.Pperp) - E.Pperp;
  Mat PN = matmul(E.Pperp, E.N) - E.N;
  Mat PiN = matmul(E.Pi, E.N) - E.Pi;
  Mat NPi = matmul(E.N, E.Pi) - E.N;
  Mat NK = matmul(E.N, E.K);
  Mat AK(m, m);
  for (int a = 0; a < m; ++a)
    for (int mu = 0; mu < m; ++mu) {
      double s = 0;
      for (int C = 0; C < n; ++C) s += E.A(a, C) * E.K(C, mu);
      AK(a, mu) = s - (a == mu ? 1.0 : 0.0);
    }
  rep.residuals["NN-N"] = max_abs(NN);
  rep.residuals["NK"] = max_abs(NK);
  rep.residuals["NPperp-Pperp"] = max_abs(NP);
  rep.residuals["PperpN-N"] = max_abs(PN);
  rep.residuals["PiN-Pi"] = max_abs(PiN);
  rep.residuals["NPi-N"] = max_abs(NPi);
  rep.residuals["AK-I"] = max_abs(AK);
  // GH annihilates K
  Mat GHK = matmul(E.GH, E.K);
  rep.residuals["GH.K"] = max_abs(GHK);
  return rep;
}

Mat metric_sqrt(const Mat& G) {
  Mat Ginv, L;
  invert(G, Ginv);
  cholesky(Ginv, L);
  return L;
}

MetricBlock metric_block(const BundleModel& model, const SigmaPoint& p, const GroupElement& a,
                         DerivMode mode) {
  FirstOrder E;
  first_order(model, p.chart, p.q, mode, E);
  const int n = E.n, m = E.m;
  Mat ubar, vbar;
  double det_ubar;
  model.group().frames(a, ubar, vbar, det_ubar);

  // embedding matrix Emb = [ Pperp | K ubar ]  (n x (n+m))
  Mat Emb(n, n + m);
  Emb.setZero(n, n + m);
  for (int A = 0; A < n; ++A) {
    for (int B = 0; B < n; ++B) Emb(A, B) = E.Pperp(A, B);
    for (int al = 0; al < m; ++al) {
      double s = 0;
      for (int mu = 0; mu < m; ++mu) s += E.K(A, mu) * ubar(mu, al);
      Emb(A, n + al) = s;
    }
  }
  MetricBlock out;
  // Gtilde = Emb^T G Emb
  out.Gtilde = matmul(transpose(Emb), matmul(E.G, Emb));

  // pseudoinverse blocks per the displayed formula
  out.GtildeInv.setZero(n + m, n + m);
  // TL = h
  for (int A = 0; A < n; ++A)
    for (int B = 0; B < n; ++B) out.GtildeInv(A, B) = E.h(A, B);
  // TR^{A sg} = (N Ginv Lam^T)^{A nu} vbar^sg_nu
  Mat NGL(n, m);
  for (int A = 0; A < n; ++A)
    for (int nu = 0; nu < m; ++nu) {
      double s = 0;
      for (int S = 0; S < n; ++S)
        for (int D = 0; D < n; ++D) s += E.N(A, S) * E.Ginv(S, D) * E.Lam(nu, D);
      NGL(A, nu) = s;
    }
  for (int A = 0; A < n; ++A)
    for (int sg = 0; sg < m; ++sg) {
      double s = 0;
      for (int nu = 0; nu < m; ++nu) s += NGL(A, nu) * vbar(sg, nu);
      out.GtildeInv(A, n + sg) = s;
      out.GtildeInv(n + sg, A) = s;
    }
  // BR^{al sg} = vbar^al_be (Lam Ginv Lam^T)^{be nu} vbar^sg_nu
  Mat LGL(m, m);
  for (int be = 0; be < m; ++be)
    for (int nu = 0; nu < m; ++nu) {
      double s = 0;
      for (int C = 0; C < n; ++C)
        for (int B = 0; B < n; ++B) s += E.Lam(be, C) * E.Ginv(C, B) * E.Lam(nu, B);
      LGL(be, nu) = s;
    }
  for (int al = 0; al < m; ++al)
    for (int sg = 0; sg < m; ++sg) {
      double s = 0;
      for (int be = 0; be < m; ++be)
        for (int nu = 0; nu < m; ++nu) s += vbar(al, be) * LGL(be, nu) * vbar(sg, nu);
      out.GtildeInv(n + al, n + sg) = s;
    }
  out.product = matmul(out.GtildeInv, out.Gtilde);

  // adapted-chart reduced determinant over (free, group) coordinates
  const auto freei = model.free_indices();
  const int nf = static_cast<int>(freei.size());
  Mat red(nf + m, nf + m);
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nf; ++j) red(i, j) = out.Gtilde(freei[static_cast<size_t>(i)], freei[static_cast<size_t>(j)]);
  for (int i = 0; i < nf; ++i)
    for (int al = 0; al < m; ++al) {
      red(i, nf + al) = out.Gtilde(freei[static_cast<size_t>(i)], n + al);
      red(nf + al, i) = out.Gtilde(n + al, freei[static_cast<size_t>(i)]);
    }
  for (int al = 0; al < m; ++al)
    for (int sg = 0; sg < m; ++sg) red(nf + al, nf + sg) = out.Gtilde(n + al, n + sg);
  out.det_reduced = determinant(red);

  // factorized: det(Pperp GH Pperp)|free x free * det gam * det(ubar)^2
  Mat PGP = matmul(transpose(E.Pperp), matmul(E.GH, E.Pperp));
  Mat PGPf(nf, nf);
  for (int i = 0; i < nf; ++i)
    for (int j = 0; j < nf; ++j) PGPf(i, j) = PGP(freei[static_cast<size_t>(i)], freei[static_cast<size_t>(j)]);
  out.det_factorized = determinant(PGPf) * E.detgam * det_ubar * det_ubar;

  return out;
}

double equivariance_check(const BundleModel& model, const Irrep& irrep,
                          const std::function<void(int, const Vec&, CMat&, int)>& section_total,
                          int n_samples, uint64_t seed) {
  double worst = 0;
  const auto& grp = model.group();
  for (int i = 0; i < n_samples; ++i) {
    SigmaPoint p = model.random_sigma_point(seed, static_cast<uint64_t>(i));
    GroupElement a = grp.random(seed ^ 0x5eC7u, static_cast<uint64_t>(i));
    GroupElement g = grp.random(seed ^ 0x9e11u, static_cast<uint64_t>(i) + 77777);
    Vec pq;
    model.act(p.chart, p.q, a, pq);
    Vec pg;
    model.act(p.chart, pq, g, pg);
    CMat psi_p, psi_pg;
    section_total(p.chart, pq, psi_p, irrep.dim());
    section_total(p.chart, pg, psi_pg, irrep.dim());
    // psi_n(pg) = D_mn(g) psi_m(p): column vectors stored in column 0
    CMat D = irrep.matrix(g);
    for (int nn = 0; nn < irrep.dim(); ++nn) {
      cplx s = 0;
      for (int mm = 0; mm < irrep.dim(); ++mm) s += D(mm, nn) * psi_p(mm, 0);
      worst = std::max(worst, std::abs(psi_pg(nn, 0) - s));
    }
  }
  return worst;
}

void step_coeffs(const BundleModel& model, int chart, const Vec& Q, DerivMode mode, Kernel kernel,
                 StepCoeffs& out) {
  FirstOrder E;
  // the f2 kernel also feeds the Girsanov density, which needs the projector
  first_order(model, chart, Q, mode, E,
              kernel == Kernel::f2 ? GeomLevel::step_density : GeomLevel::step);
  const int n = E.n, m = E.m;
  out.n = n;
  out.m = m;
  out.X = metric_sqrt(E.G);
  out.NX = matmul(E.N, out.X);
  out.gaminv = E.gaminv;
  out.detgam = E.detgam;
  out.V = model.potential(chart, Q);

  // SDE drift: -1/2 h^{CB} HGam^A_{CB} + j_I (+ j_II for the full variant)
  out.drift.setZero(n);
  for (int A = 0; A < n; ++A) {
    double s = 0;
    for (int C = 0; C < n; ++C)
      for (int B = 0; B < n; ++B) s += E.h(C, B) * E.HGam(A, C, B);
    out.drift[A] = -0.5 * s + E.jI[A];
    if (kernel == Kernel::f1) out.drift[A] += E.jII[A];
  }

  // holonomy noise rows rB(M, be) = [(Lam - A) X]^be_M and the Ito block BB
  out.rB.setZero(n, m);
  for (int M = 0; M < n; ++M)
    for (int be = 0; be < m; ++be) {
      double s = 0;
      for (int K = 0; K < n; ++K) s += E.LmA(be, K) * out.X(K, M);
      out.rB(M, be) = s;
    }
  out.BB.setZero(m, m);
  for (int be = 0; be < m; ++be)
    for (int sg = 0; sg < m; ++sg) {
      double s = 0;
      for (int K = 0; K < n; ++K)
        for (int B = 0; B < n; ++B) s += E.LmA(be, K) * E.Ginv(K, B) * E.LmA(sg, B);
      out.BB(be, sg) = s;
    }

  // holonomy drift coefficient per group index
  out.tJ.setZero(m);
  if (kernel == Kernel::f3) {
    // -(h^{EB} d_E(N^C_B A_C) - h^{AC} HGam^B_{AC} N^D_B A_D)
    for (int a = 0; a < m; ++a) {
      double hT = 0;
      for (int Ee = 0; Ee < n; ++Ee)
        for (int B = 0; B < n; ++B) {
          double dNA = 0;
          for (int C = 0; C < n; ++C)
            dNA += E.dN(C, B, Ee) * E.A(a, C) + E.N(C, B) * E.dA(a, C, Ee);
          hT += E.h(Ee, B) * dNA;
        }
      double hGN = 0;
      for (int Aa = 0; Aa < n; ++Aa)
        for (int C = 0; C < n; ++C) {
          const double w = E.h(Aa, C);
          if (w == 0) continue;
          for (int B = 0; B < n; ++B)
            for (int D = 0; D < n; ++D) hGN += w * E.HGam(B, Aa, C) * E.N(D, B) * E.A(a, D);
        }
      out.tJ[a] = -(hT - hGN);
    }
  } else {
    for (int a = 0; a < m; ++a) out.tJ[a] = -E.t_drift[a];
    if (kernel == Kernel::f2) {
      // -2 (Lam - A)^a_L j_II^L
      for (int a = 0; a < m; ++a) {
        double s = 0;
        for (int L = 0; L < n; ++L) s += E.LmA(a, L) * E.jII[L];
        out.tJ[a] += -2.0 * s;
      }
    }
  }

  // Jtilde for the scalar weight (f2/f3 kernels)
  if (kernel == Kernel::f2 || kernel == Kernel::f3) {
    if (!model.jtilde_fast(chart, Q, out.jt)) {
      CurvatureScalars sc = curvature_scalars(model, chart, Q, mode);
      out.jt = sc.Jtilde;
    }
  } else {
    out.jt = 0;
  }

  // girsanov density coefficients (projector available above step level)
  out.q = 0;
  out.gW.setZero(n);
  if (kernel == Kernel::f2) {
    Vec gvec;  // (GH Pperp j_II)_K
    gvec.setZero(n);
    Mat PGP = matmul(transpose(E.Pperp), matmul(E.GH, E.Pperp));
    for (int A = 0; A < n; ++A)
      for (int Ee = 0; Ee < n; ++Ee) out.q += PGP(A, Ee) * E.jII[A] * E.jII[Ee];
    for (int K = 0; K < n; ++K) {
      double s = 0;
      for (int L = 0; L < n; ++L)
        for (int A = 0; A < n; ++A) s += E.GH(L, K) * E.Pperp(L, A) * E.jII[A];
      gvec[K] = s;
    }
    for (int M = 0; M < n; ++M) {
      double s = 0;
      for (int K = 0; K < n; ++K) s += gvec[K] * out.X(K, M);
      out.gW[M] = s;
    }
  }

  // group process blocks
  out.drift_a.setZero(m);
  for (int b = 0; b < m; ++b) out.drift_a[b] = E.t_drift[b];
  out.LamX.setZero(m, n);
  for (int b = 0; b < m; ++b)
    for (int M = 0; M < n; ++M) {
      double s = 0;
      for (int B = 0; B < n; ++B) s += E.Lam(b, B) * out.X(B, M);
      out.LamX(b, M) = s;
    }
  out.LGL.setZero(m, m);
  for (int e = 0; e < m; ++e)
    for (int b = 0; b < m; ++b) {
      double s = 0;
      for (int M = 0; M < n; ++M)
        for (int B = 0; B < n; ++B) s += E.Lam(e, M) * E.Ginv(M, B) * E.Lam(b, B);
      out.LGL(e, b) = s;
    }
}

}  // namespace bundlediff
