#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bundlediff/geometry.hpp"
#include "bundlediff/models.hpp"
#include "bundlediff/rng.hpp"

using namespace bundlediff;

TEST_CASE("projector algebra over random points, analytic and fd") {
  for (const char* name : {"flat", "hopf", "warped", "biinv"}) {
    auto m = make_model(name);
    for (DerivMode mode : {DerivMode::analytic, DerivMode::fd}) {
      const double tol =
          (mode == DerivMode::analytic && m->has_analytic_derivatives()) ? 1e-10 : 1e-6;
      double worst = 0;
      for (int i = 0; i < 40; ++i) {
        SigmaPoint p = m->random_sigma_point(31, static_cast<uint64_t>(i));
        GeometryReport rep = geometry_report(*m, p, mode, false);
        for (auto& kv : rep.residuals) worst = std::max(worst, kv.second);
      }
      INFO(name, mode == DerivMode::fd ? " fd" : " analytic");
      CHECK(worst < tol);
    }
  }
}

TEST_CASE("metric_sqrt examples") {
  Mat I;
  I.setIdentity(3);
  Mat X = metric_sqrt(I);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(X(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
  Mat D(2, 2);
  D.setZero(2, 2);
  D(0, 0) = 4;
  D(1, 1) = 1;
  X = metric_sqrt(D);
  CHECK(X(0, 0) == doctest::Approx(0.5));
  CHECK(X(1, 1) == doctest::Approx(1.0));
  // random SPD: reconstruction is the oracle
  Mat A(3, 3);
  A.setZero(3, 3);
  double z[6];
  NoiseStream ns{77, 0};
  ns.gaussians(0, 6, z);
  for (int i = 0; i < 3; ++i) A(i, i) = 2.0 + std::tanh(z[i]);
  A(0, 1) = A(1, 0) = 0.4 * z[3];
  A(0, 2) = A(2, 0) = 0.3 * z[4];
  A(1, 2) = A(2, 1) = 0.2 * z[5];
  X = metric_sqrt(A);
  Mat Ainv;
  invert(A, Ainv);
  Mat R = matmul(X, transpose(X)) - Ainv;
  CHECK(max_abs(R) < 1e-12);
  Mat bad(2, 2);
  bad.setZero(2, 2);
  bad(0, 0) = -1;
  bad(1, 1) = 1;
  CHECK_THROWS(metric_sqrt(bad));
}

TEST_CASE("metric block: flat product structure") {
  auto m = make_model("flat");
  SigmaPoint p = m->random_sigma_point(3, 0);
  MetricBlock mb = metric_block(*m, p, GroupElement(0.0));
  // reduced (free + group) block is the 3x3 identity
  CHECK(mb.det_reduced == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mb.det_factorized == doctest::Approx(1.0).epsilon(1e-12));
  // full product contract: G~^{-} G~ = diag(Pperp, I)
  FirstOrder E;
  first_order(*m, p.chart, p.q, DerivMode::analytic, E);
  double worst = 0;
  for (int A = 0; A < 4; ++A)
    for (int B = 0; B < 4; ++B) {
      double want = (A < 3 && B < 3) ? E.Pperp(A, B) : ((A == B) ? 1.0 : 0.0);
      worst = std::max(worst, std::fabs(mb.product(A, B) - want));
    }
  CHECK(worst < 1e-12);
}

TEST_CASE("metric block: hopf pseudoinverse and determinant factorization") {
  auto m = make_model("hopf");
  auto grp = make_u1();
  double worstP = 0, worstD = 0;
  for (int i = 0; i < 25; ++i) {
    SigmaPoint p = m->random_sigma_point(41, static_cast<uint64_t>(i));
    GroupElement a = grp->random(42, static_cast<uint64_t>(i));
    MetricBlock mb = metric_block(*m, p, a);
    FirstOrder E;
    first_order(*m, p.chart, p.q, DerivMode::analytic, E);
    for (int A = 0; A < 4; ++A)
      for (int B = 0; B < 4; ++B) {
        double want = (A < 3 && B < 3) ? E.Pperp(A, B) : ((A == B) ? 1.0 : 0.0);
        worstP = std::max(worstP, std::fabs(mb.product(A, B) - want));
      }
    const double scale = std::max(std::fabs(mb.det_reduced), 1e-30);
    worstD = std::max(worstD, std::fabs(mb.det_reduced - mb.det_factorized) / scale);
  }
  CHECK(worstP < 1e-8);
  CHECK(worstD < 1e-8);
}

TEST_CASE("mechanical connection and frozen hopf tensors") {
  auto m = make_model("hopf");
  SigmaPoint p;
  p.q.setZero(3);
  p.q[0] = 0.5;
  p.q[1] = -0.3;
  FirstOrder E;
  first_order(*m, p.chart, p.q, DerivMode::analytic, E);
  const double rho2 = 1 + 0.25 + 0.09;
  // A = (-v/rho2, u/rho2, 1), gamma = 1, h = rho2^2 diag(1,1,0)
  CHECK(E.A(0, 0) == doctest::Approx(0.3 / rho2).epsilon(1e-12));
  CHECK(E.A(0, 1) == doctest::Approx(0.5 / rho2).epsilon(1e-12));
  CHECK(E.A(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(E.gam(0, 0) == doctest::Approx(1.0));
  CHECK(E.h(0, 0) == doctest::Approx(rho2 * rho2).epsilon(1e-10));
  CHECK(std::fabs(E.h(2, 2)) < 1e-12);
  // j_I = j_II = 0 and the sigma drift vanishes in conformal chart coordinates
  for (int k = 0; k < 3; ++k) {
    CHECK(std::fabs(E.jI[k]) < 1e-10);
    CHECK(std::fabs(E.jII[k]) < 1e-12);
  }
  StepCoeffs C;
  step_coeffs(*m, p.chart, p.q, DerivMode::analytic, Kernel::f2, C);
  for (int k = 0; k < 3; ++k) CHECK(std::fabs(C.drift[k]) < 1e-10);
  // holonomy noise row (Lam - A) = (-A_u, -A_v, 0)
  CHECK(E.LmA(0, 0) == doctest::Approx(-0.3 / rho2).epsilon(1e-12));
  CHECK(E.LmA(0, 1) == doctest::Approx(-0.5 / rho2).epsilon(1e-12));
  CHECK(std::fabs(E.LmA(0, 2)) < 1e-14);
  // Ito block (Lam - A) G^{-1} (Lam - A)^T = rho2 - 1
  CHECK(C.BB(0, 0) == doctest::Approx(rho2 - 1).epsilon(1e-10));
}

TEST_CASE("analytic and fd derivative paths agree") {
  for (const char* name : {"hopf", "warped"}) {
    auto m = make_model(name);
    SigmaPoint p = m->random_sigma_point(51, 4);
    FirstOrder Ea, Ef;
    first_order(*m, p.chart, p.q, DerivMode::analytic, Ea);
    first_order(*m, p.chart, p.q, DerivMode::fd, Ef);
    double worst = 0;
    for (int a = 0; a < 3; ++a) {
      worst = std::max(worst, std::fabs(Ea.jI[a] - Ef.jI[a]));
      worst = std::max(worst, std::fabs(Ea.jII[a] - Ef.jII[a]));
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::fabs(Ea.HGam(a, b, c) - Ef.HGam(a, b, c)));
    }
    INFO(name);
    CHECK(worst < 1e-7);
  }
}

TEST_CASE("equivariance check: exact section, broken section, hopf pullback") {
  auto flat = make_model("flat");
  auto irr = make_u1_irrep(2);
  // exact: psi(x,y,theta) = e^{2 i theta} f(x,y)
  auto exact = [](int, const Vec& q, CMat& out, int d) {
    out.setZero(d);
    out(0, 0) = std::exp(cplx(0, 2 * q[2])) * std::exp(-0.1 * (q[0] * q[0] + q[1] * q[1]));
  };
  CHECK(equivariance_check(*flat, *irr, exact, 100, 9) < 1e-12);
  // deliberately broken: linear theta dependence
  auto broken = [](int, const Vec& q, CMat& out, int d) {
    out.setZero(d);
    out(0, 0) = q[2] * std::exp(-0.1 * (q[0] * q[0] + q[1] * q[1]));
  };
  CHECK(equivariance_check(*flat, *irr, broken, 100, 9) > 1e-3);
  // hopf: section extended by the transformation law
  auto hopf = make_model("hopf");
  auto irr1 = make_u1_irrep(1);
  auto pullback = [](int, const Vec& q, CMat& out, int d) {
    out.setZero(d);
    const double rho = std::sqrt(1 + q[0] * q[0] + q[1] * q[1]);
    out(0, 0) = std::exp(cplx(0, q[2])) / rho;  // z2 written in bundle coordinates
  };
  CHECK(equivariance_check(*hopf, *irr1, pullback, 100, 9) < 1e-10);
}

TEST_CASE("gauge transversality guard") {
  // a gauge that degenerates: chi = theta but K tilted almost orthogonal is
  // not constructible with the builtin models, so exercise the guard through
  // the Phi condition bound directly
  auto m = make_model("hopf");
  SigmaPoint p = m->random_sigma_point(61, 0);
  FirstOrder E;
  first_order(*m, p.chart, p.q, DerivMode::analytic, E);
  CHECK(E.cond_Phi < 1e8);
}
