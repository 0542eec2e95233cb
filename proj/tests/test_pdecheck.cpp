#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bundlediff/models.hpp"
#include "bundlediff/pdecheck.hpp"

using namespace bundlediff;

TEST_CASE("operator identity: flat is exact, hopf within analytic tolerance") {
  {
    auto m = make_model("flat");
    for (int la : {0, 1}) {
      auto irr = make_u1_irrep(la);
      const double r = operator_identity_residual(*m, *irr, 10, 4, DerivMode::analytic, 3);
      CHECK(r < 1e-12);
    }
  }
  {
    auto m = make_model("hopf");
    for (int la : {0, 1}) {
      auto irr = make_u1_irrep(la);
      const double r = operator_identity_residual(*m, *irr, 15, 5, DerivMode::analytic, 3);
      INFO("lambda ", la);
      CHECK(r < 1e-8);
    }
    // fd derivatives: differentiation error dominates
    auto irr = make_u1_irrep(1);
    const double rfd = operator_identity_residual(*m, *irr, 8, 3, DerivMode::fd, 3);
    CHECK(rfd < 1e-4);
  }
}

TEST_CASE("operator identity holds for the non-abelian model (spin-1/2)") {
  auto m = make_model("biinv");
  for (int twoj : {0, 1}) {
    auto irr = make_su2_irrep(twoj);
    const double r = operator_identity_residual(*m, *irr, 6, 2, DerivMode::analytic, 5);
    INFO("twoj ", twoj);
    CHECK(r < 1e-8);
  }
}

TEST_CASE("lambda=0 collapse: h_kappa equals the scalar reduced generator") {
  auto m = make_model("hopf");
  auto irr0 = make_u1_irrep(0);
  SmoothSection s = random_trig_section(*m, 1, 17);
  for (int i = 0; i < 10; ++i) {
    SigmaPoint p = m->random_sigma_point(19, static_cast<uint64_t>(i));
    cplx a[1], b[1];
    apply_generator(OpLabel::h_kappa, *m, *irr0, s, p, DerivMode::analytic, 1, 1, 1, a);
    apply_generator(OpLabel::operator_2, *m, *irr0, s, p, DerivMode::analytic, 1, 1, 1, b);
    CHECK(std::abs(a[0] - b[0]) < 1e-8 * std::max(1.0, std::abs(a[0])));
  }
}

TEST_CASE("op2 differs from operator_2 by the j_II transport and Jtilde terms") {
  auto m = make_model("warped");  // j_II != 0 here
  auto irr0 = make_u1_irrep(0);
  SmoothSection s = random_trig_section(*m, 1, 23);
  SigmaPoint p = m->random_sigma_point(29, 0);
  cplx a[1], b[1];
  apply_generator(OpLabel::op2, *m, *irr0, s, p, DerivMode::analytic, 1, 1, 1, a);
  apply_generator(OpLabel::operator_2, *m, *irr0, s, p, DerivMode::analytic, 1, 1, 1, b);
  // difference = mu2k j_II . grad psi + 1/8 mu2k Jtilde psi
  FirstOrder E;
  first_order(*m, p.chart, p.q, DerivMode::analytic, E);
  double jt;
  m->jtilde_fast(p.chart, p.q, jt);
  cplx val[1], grad[3], hess[9];
  s.eval(p, val, grad, hess);
  cplx want = 0;
  for (int k = 0; k < 3; ++k) want += E.jII[k] * grad[k];
  want += 0.125 * jt * val[0];
  CHECK(std::abs((a[0] - b[0]) - want) < 1e-10);
}

TEST_CASE("flat grid evolution matches the closed-form heat solution") {
  ModelParams fp;
  fp.box = 8.0;
  auto m = make_flat_model(fp);
  auto irr = make_u1_irrep(1);
  const double width = 0.8, T = 0.25;
  GridSection g = make_grid(*m, 0.05, 0, 1);
  fill_grid(g, *m, [&](const SigmaPoint& p, cplx* out) {
    out[0] = std::exp(-(p.q[0] * p.q[0] + p.q[1] * p.q[1]) / (2 * width * width));
  });
  EvolveOptions opt;
  opt.t_span = T;
  opt.dt = 1e-3;
  GridSection gu = evolve(OpLabel::h_kappa, *m, *irr, g, opt);
  double num = 0, den = 0;
  const double s2 = width * width, vt = T;
  for (long nn = 0; nn < gu.n_nodes(); ++nn) {
    SigmaPoint p = gu.point_of(*m, nn);
    const double r2 = p.q[0] * p.q[0] + p.q[1] * p.q[1];
    const cplx ref =
        std::exp(-0.5 * T) * (s2 / (s2 + vt)) * std::exp(-r2 / (2 * (s2 + vt)));
    num += std::norm(gu.values[static_cast<size_t>(nn)] - ref);
    den += std::norm(ref);
  }
  CHECK(std::sqrt(num / den) < 1e-3);
  // zero span returns the data unchanged
  EvolveOptions z = opt;
  z.t_span = 0;
  GridSection g0 = evolve(OpLabel::h_kappa, *m, *irr, g, z);
  CHECK(g0.values == g.values);
}

TEST_CASE("explicit stepper flags instability at large dt") {
  ModelParams fp;
  fp.box = 4.0;
  auto m = make_flat_model(fp);
  auto irr = make_u1_irrep(0);
  GridSection g = make_grid(*m, 0.1, 0, 1);
  fill_grid(g, *m, [&](const SigmaPoint& p, cplx* out) {
    out[0] = std::exp(-(p.q[0] * p.q[0] + p.q[1] * p.q[1]));
  });
  EvolveOptions opt;
  opt.t_span = 0.5;
  opt.dt = 0.05;  // far beyond the diffusive stability bound h^2/4
  opt.stepper = Stepper::explicit_euler;
  CHECK_THROWS(evolve(OpLabel::h_kappa, *m, *irr, g, opt));
  opt.dt = 0.002;
  CHECK_NOTHROW(evolve(OpLabel::h_kappa, *m, *irr, g, opt));
}

TEST_CASE("hopf two-chart grid: overlap consistency and eigenmode decay") {
  auto m = make_model("hopf");
  auto irr = make_u1_irrep(1);
  const double h = 0.05;
  GridSection g = make_grid(*m, h, 2.2, 1);
  // lowest monopole section in both charts
  fill_grid(g, *m, [](const SigmaPoint& p, cplx* out) {
    const double w2 = p.q[0] * p.q[0] + p.q[1] * p.q[1];
    if (p.chart == 0)
      out[0] = 1.0 / std::sqrt(1 + w2);
    else
      out[0] = cplx(p.q[0], p.q[1]) / std::sqrt(1 + w2);
  });
  EvolveOptions opt;
  opt.t_span = 0.25;
  opt.dt = 2e-3;
  // the monopole is a covector-bundle section; evolve with the backward form
  GridSection gu = evolve(OpLabel::operator_3_casimir, *m, *irr, g, opt);
  double num = 0, den = 0;
  for (long nn = 0; nn < gu.n_nodes(); ++nn) {
    SigmaPoint p = gu.point_of(*m, nn);
    cplx ref;
    const double w2 = p.q[0] * p.q[0] + p.q[1] * p.q[1];
    if (p.chart == 0)
      ref = 1.0 / std::sqrt(1 + w2);
    else
      ref = cplx(p.q[0], p.q[1]) / std::sqrt(1 + w2);
    ref *= std::exp(-1.5 * opt.t_span);
    num += std::norm(gu.values[static_cast<size_t>(nn)] - ref);
    den += std::norm(ref);
  }
  CHECK(std::sqrt(num / den) < 2e-3);
  // the forward h_kappa operator evolves the conjugate (vector-bundle) data
  // at the same rate
  GridSection gc = g;
  for (auto& vvv : gc.values) vvv = std::conj(vvv);
  GridSection gv = evolve(OpLabel::h_kappa, *m, *irr, gc, opt);
  double num2 = 0, den2 = 0;
  for (long nn = 0; nn < gv.n_nodes(); ++nn) {
    const cplx ref = std::conj(g.values[static_cast<size_t>(nn)]) * std::exp(-1.5 * opt.t_span);
    num2 += std::norm(gv.values[static_cast<size_t>(nn)] - ref);
    den2 += std::norm(ref);
  }
  CHECK(std::sqrt(num2 / den2) < 2e-3);
  // overlap consistency: the two chart copies describe the same section
  double worst = 0;
  for (double x : {0.8, 1.0, 1.4}) {
    SigmaPoint p0;
    p0.chart = 0;
    p0.q.setZero(3);
    p0.q[0] = x;
    p0.q[1] = 0.3;
    cplx v0;
    grid_value(gu, *m, *irr, p0, &v0);
    // same point through the chart-1 representation
    const double w2 = x * x + 0.09;
    SigmaPoint p1;
    p1.chart = 1;
    p1.q.setZero(3);
    p1.q[0] = x / w2;
    p1.q[1] = -0.3 / w2;
    cplx v1;
    grid_value(gu, *m, *irr, p1, &v1);
    // psi0(w) = D(arg w)^T psi1(1/w)
    const cplx phase = std::exp(cplx(0, std::atan2(0.3, x)));
    worst = std::max(worst, std::abs(v0 - phase * v1));
  }
  CHECK(worst < 5e-4);
}

TEST_CASE("scalar products: symmetry, volumes, self-adjointness") {
  ModelParams fp;
  fp.box = 6.0;
  auto m = make_flat_model(fp);
  auto irr = make_u1_irrep(1);
  GridSection a = make_grid(*m, 0.1, 0, 1), b = a;
  fill_grid(a, *m, [](const SigmaPoint& p, cplx* out) {
    out[0] = cplx(std::exp(-p.q[0] * p.q[0] - p.q[1] * p.q[1]), 0.3 * p.q[0] * std::exp(-p.q[0] * p.q[0] - p.q[1] * p.q[1]));
  });
  fill_grid(b, *m, [](const SigmaPoint& p, cplx* out) {
    out[0] = std::exp(-(p.q[0] - 0.4) * (p.q[0] - 0.4) - p.q[1] * p.q[1]);
  });
  const cplx ab = scalar_product(a, b, *m, VolumeWeight::scal_product);
  const cplx ba = scalar_product(b, a, *m, VolumeWeight::scal_product);
  CHECK(std::abs(ab - std::conj(ba)) < 1e-14);
  // unit section on the cell: the flat volume is box^2
  GridSection one = make_grid(*m, 0.1, 0, 1);
  fill_grid(one, *m, [](const SigmaPoint&, cplx* out) { out[0] = 1.0; });
  CHECK(std::abs(scalar_product(one, one, *m, VolumeWeight::eq33) - 36.0) < 1e-9);

  // self-adjointness of h_kappa w.r.t. the scal_product density on compactly
  // supported sections (V = 0, flat: exact up to stencil error)
  EvolveOptions opt;
  GridSection Ha = apply_grid_operator(OpLabel::h_kappa, *m, *irr, a, opt);
  GridSection Hb = apply_grid_operator(OpLabel::h_kappa, *m, *irr, b, opt);
  const cplx x1 = scalar_product(Ha, b, *m, VolumeWeight::scal_product);
  const cplx x2 = scalar_product(a, Hb, *m, VolumeWeight::scal_product);
  CHECK(std::abs(x1 - x2) < 1e-6);
}

TEST_CASE("hopf self-adjointness picks out the scal_product density") {
  auto m = make_model("hopf");
  auto irr = make_u1_irrep(1);
  GridSection a = make_grid(*m, 0.04, 2.2, 1), b = a;
  // compact bumps well inside the chart-0 partition
  fill_grid(a, *m, [](const SigmaPoint& p, cplx* out) {
    if (p.chart != 0) { out[0] = 0; return; }
    const double r2 = p.q[0] * p.q[0] + p.q[1] * p.q[1];
    out[0] = (r2 < 0.64) ? std::pow(std::cos(3.14159265/2 * std::sqrt(r2) / 0.8), 4.0) : 0.0;
  });
  fill_grid(b, *m, [](const SigmaPoint& p, cplx* out) {
    if (p.chart != 0) { out[0] = 0; return; }
    const double dx = p.q[0] - 0.2, dy = p.q[1] + 0.1;
    const double r2 = dx * dx + dy * dy;
    out[0] = (r2 < 0.36) ? std::pow(std::cos(3.14159265/2 * std::sqrt(r2) / 0.6), 4.0) : 0.0;
  });
  EvolveOptions opt;
  GridSection Ha = apply_grid_operator(OpLabel::h_kappa, *m, *irr, a, opt);
  GridSection Hb = apply_grid_operator(OpLabel::h_kappa, *m, *irr, b, opt);
  const cplx x1 = scalar_product(Ha, b, *m, VolumeWeight::scal_product);
  const cplx x2 = scalar_product(a, Hb, *m, VolumeWeight::scal_product);
  const double scale = std::abs(scalar_product(a, a, *m, VolumeWeight::scal_product));
  CHECK(std::abs(x1 - x2) / scale < 1e-3);
}
