// Acceptance suite: one pass/fail line per criterion, exit code 0 iff all
// pass. Budgeted for a single desktop core; every tolerance is pinned here.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "../support/riemann_oracle.hpp"
#include "bundlediff/verify.hpp"

using namespace bundlediff;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void line(int crit, const std::string& what, bool pass, double measured, double tol,
          double secs) {
  std::printf("criterion %d %-4s  %-58s  measured %-12.4g tol %-10.3g  [%5.1f s]\n", crit,
              pass ? "PASS" : "FAIL", what.c_str(), measured, tol, secs);
  if (!pass) ++failures;
}

void from_verdict(int crit, const Verdict& v, double secs) {
  for (const auto& c : v.checks) {
    const bool ok = c.state == CheckState::pass;
    line(crit, v.suite + ": " + c.name, ok, c.measured, c.tolerance, secs);
  }
}

oracle::MetricFn metric_fn(const BundleModel& m, int chart) {
  return [&m, chart](const std::vector<double>& q, std::vector<double>& G) {
    Vec Q;
    Q.setZero(m.dim());
    for (int i = 0; i < m.dim(); ++i) Q[i] = q[static_cast<size_t>(i)];
    Mat GM;
    m.metric(chart, Q, GM);
    G.assign(static_cast<size_t>(m.dim() * m.dim()), 0.0);
    for (int i = 0; i < m.dim(); ++i)
      for (int j = 0; j < m.dim(); ++j) G[static_cast<size_t>(i * m.dim() + j)] = GM(i, j);
  };
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;
  const long scale = quick ? 10 : 1;

  // ---- criterion 1: geometry invariants, 1000 points, analytic + fd
  for (const char* name : {"flat", "hopf", "warped", "biinv"}) {
    Timer t;
    VerifySettings s;
    s.model = name;
    s.seed = 7;
    s.points = static_cast<int>(1000 / scale);
    Verdict va = verify_geometry(s);
    s.deriv = DerivMode::fd;
    s.points = static_cast<int>(200 / scale);
    Verdict vf = verify_geometry(s);
    double worst_a = 0, worst_f = 0;
    bool ok = true;
    for (const auto& c : va.checks) {
      if (c.name.rfind("projector", 0) == 0 || c.name.rfind("pseudoinverse", 0) == 0 ||
          c.name.rfind("determinant", 0) == 0)
        worst_a = std::max(worst_a, c.measured);
      ok = ok && c.state != CheckState::fail;
    }
    for (const auto& c : vf.checks) {
      if (c.name.rfind("projector", 0) == 0 || c.name.rfind("pseudoinverse", 0) == 0 ||
          c.name.rfind("determinant", 0) == 0)
        worst_f = std::max(worst_f, c.measured);
      ok = ok && c.state != CheckState::fail;
    }
    line(1, std::string(name) + " invariants analytic<1e-10 fd<1e-6", ok && worst_a < 1e-10 && worst_f < 1e-6,
         std::max(worst_a, worst_f * 1e-4), 1e-10, t.s());
  }

  // ---- criterion 2: reduction-Jacobian integrand
  {
    Timer t;
    auto flat = make_model("flat");
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
      SigmaPoint p = flat->random_sigma_point(2, static_cast<uint64_t>(i));
      CurvatureScalars sc = curvature_scalars(*flat, p.chart, p.q, DerivMode::analytic);
      worst = std::max(worst, std::fabs(sc.Jtilde));
    }
    line(2, "flat Jtilde == 0", worst < 1e-12, worst, 1e-12, t.s());
  }
  {
    Timer t;
    auto hopf = make_model("hopf");
    // independent oracles: total-space curvature from the raw metric closure,
    // base curvature from the round S^2(1/2) metric, F2 from the frozen
    // constant of the connection curvature
    const double RP_oracle = oracle::scalar_curvature(metric_fn(*hopf, 0), {0.31, -0.17, 0.0}, 3);
    oracle::MetricFn base = [](const std::vector<double>& q, std::vector<double>& G) {
      const double rho2 = 1 + q[0] * q[0] + q[1] * q[1];
      G = {1.0 / (rho2 * rho2), 0.0, 0.0, 1.0 / (rho2 * rho2)};
    };
    const double HR_oracle = oracle::scalar_curvature(base, {0.22, 0.41}, 2);
    const double F2_oracle = 8.0;
    double worst_match = 0, worst_const = 0, mean = 0, m2 = 0;
    const int NPTS = 100;
    for (int i = 0; i < NPTS; ++i) {
      SigmaPoint p = hopf->random_sigma_point(3, static_cast<uint64_t>(i));
      CurvatureScalars sc = curvature_scalars(*hopf, p.chart, p.q, DerivMode::analytic);
      worst_match = std::max({worst_match, std::fabs(sc.RP - RP_oracle),
                              std::fabs(sc.HR - HR_oracle), std::fabs(sc.F2 - F2_oracle)});
      const double jt_id = sc.RP - sc.HR - 0.25 * sc.F2;  // R_G = |j|^2 = 0 here
      worst_match = std::max(worst_match, std::fabs(sc.Jtilde - jt_id));
      mean += sc.Jtilde / NPTS;
      m2 += sc.Jtilde * sc.Jtilde / NPTS;
    }
    worst_const = std::sqrt(std::max(0.0, m2 - mean * mean));
    line(2, "hopf Jtilde constant over Sigma (std dev)", worst_const < 1e-6, worst_const, 1e-6, t.s());
    line(2, "hopf Jtilde = R_P - HR - F2/4, scalars vs oracle", worst_match < 1e-6, worst_match,
         1e-6, t.s());
    ModelParams p2;
    p2.radius = 2.0;
    auto hopf2 = make_model("hopf", p2);
    SigmaPoint q2 = hopf2->random_sigma_point(3, 5);
    CurvatureScalars s2 = curvature_scalars(*hopf2, q2.chart, q2.q, DerivMode::analytic);
    SigmaPoint q1 = hopf->random_sigma_point(3, 5);
    CurvatureScalars s1 = curvature_scalars(*hopf, q1.chart, q1.q, DerivMode::analytic);
    const double scaling = std::max(std::fabs(s2.Jtilde - s1.Jtilde / 4.0),
                                    std::fabs(s2.RP - s1.RP / 4.0));
    line(2, "hopf radius scaling 1/r^2 (Jtilde and R_P)", scaling < 1e-6, scaling, 1e-6, t.s());
  }

  // ---- criterion 3: section-4 operator identity
  {
    Timer t;
    auto hopf = make_model("hopf");
    double worst = 0;
    for (int la : {0, 1}) {
      auto irr = make_u1_irrep(la);
      worst = std::max(worst, operator_identity_residual(*hopf, *irr, 50, static_cast<int>(20 / scale) + 1,
                                                         DerivMode::analytic, 11));
    }
    line(3, "hopf operator identity, lambda in {0,1}", worst < 1e-8, worst, 1e-8, t.s());
    Timer t2;
    auto biinv = make_model("biinv");
    auto half = make_su2_irrep(1);
    const double r = operator_identity_residual(*biinv, *half, static_cast<int>(50 / scale) + 2,
                                                static_cast<int>(20 / scale) + 1, DerivMode::analytic, 11);
    line(3, "biinv operator identity, spin-1/2", r < 1e-8, r, 1e-8, t2.s());
  }

  // ---- criterion 4: girsanov factorization
  {
    Timer t;
    VerifySettings s;
    s.model = "flat";
    s.seed = 7;
    s.paths = 2000;
    s.steps = 50;
    from_verdict(4, verify_girsanov(s), t.s());
  }
  {
    Timer t;
    VerifySettings s;
    s.model = "hopf";
    s.seed = 7;
    s.paths = 100000 / scale;
    s.steps = 200;
    s.t_span = 0.5;
    from_verdict(4, verify_girsanov(s), t.s());
  }
  {
    Timer t;  // curved-fiber model: j_II != 0 exercises the full density
    VerifySettings s;
    s.model = "warped";
    s.seed = 7;
    s.paths = 50000 / scale;
    s.steps = 100;
    from_verdict(4, verify_girsanov(s), t.s());
  }

  // ---- criterion 5: reduction identity (smeared)
  {
    Timer t;
    VerifySettings s;
    s.model = "flat";
    s.seed = 9;
    s.reduction_paths = 100000 / scale;
    s.steps = 200;
    from_verdict(5, verify_reduction(s), t.s());
  }
  {
    Timer t;
    VerifySettings s;
    s.model = "hopf";
    s.seed = 9;
    s.reduction_paths = 200000 / scale;
    s.steps = 200;
    s.quad_order = 32;
    from_verdict(5, verify_reduction(s), t.s());
    // the literal Haar-quadrature group average at order 32 reproduces the
    // endpoint-decomposition route on the same ensemble
    auto m = make_model("hopf");
    auto irr = make_u1_irrep(1);
    SimConfig cfg;
    cfg.t_b = 0.5;
    cfg.n_steps = 200;
    cfg.n_paths = 20000 / scale;
    cfg.seed = 9;
    cfg.variant = ProcessVariant::original;
    cfg.start = m->random_sigma_point(9, 1);
    Vec c0;
    c0.setZero(3);
    TestSection psi0 = bump_section(*m, *irr, c0, 0.8, 0);
    TotalFunction phi = equivariant_extension(*m, *irr, psi0, 0);
    SemigroupEstimate quad = group_average_rhs(*m, *irr, phi, cfg, 32);
    // direct route with the same paths
    SemigroupEstimate direct = total_space_apply_mc(*m, [&]() {
      TotalFunction f;
      f.eval = [&m, &irr, psi0](int chart, const Vec& q) {
        SigmaPoint base;
        base.chart = chart;
        base.q = q;
        m->project_sigma(chart, base.q);
        GroupElement a = m->fiber_coordinate(chart, q);
        cplx v[kMaxIrr];
        psi0.eval(base, v);
        return irr->matrix(a)(0, 0) * v[0];
      };
      return f;
    }(), cfg);
    const double dd = std::abs(quad.value(0, 0) - direct.value(0, 0));
    line(5, "haar quadrature (order 32) == endpoint decomposition", dd < 1e-10, dd, 1e-10, t.s());
  }

  // ---- criterion 6: MC vs PDE cross-check
  {
    Timer t;
    VerifySettings s;
    s.model = "hopf";
    s.seed = 13;
    s.grid_h = quick ? 0.05 : 0.02;
    s.mcpde_paths = 100000 / scale;
    s.mcpde_points = 48;
    s.steps = 200;
    from_verdict(6, verify_mcpde(s), t.s());
  }

  // ---- criterion 7: convergence orders
  {
    Timer t;
    VerifySettings s;
    s.seed = 3;
    from_verdict(7, verify_convergence(s), t.s());
  }

  // ---- criterion 8: determinism across runs and thread counts
  {
    Timer t;
    VerifySettings s;
    s.model = "hopf";
    s.seed = 7;
    from_verdict(8, verify_determinism(s), t.s());
  }

  std::printf("%s (%d failing line%s)\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              failures, failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
