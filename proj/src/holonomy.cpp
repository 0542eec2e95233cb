#include "bundlediff/holonomy.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlediff/rng.hpp"

namespace bundlediff {

void holonomy_step(Kernel variant, PathState& state, const StepCoeffs& C, const Irrep& irrep,
                   const SimConfig& cfg, double dt, const double* dW, bool exp_mode) {
  const int d = irrep.dim();
  const int n = C.n, m = C.m;
  const auto& J = irrep.generators();
  const double mu2k = cfg.mu2k();
  const double musk = cfg.musqk();

  // A = 1/2 mu2k [ gaminv^{mn} J_m J_n + tJ^b J_b ]
  CMat A(d);
  A.setZero(d);
  for (int mu = 0; mu < m; ++mu)
    for (int nu = 0; nu < m; ++nu) {
      const double g = C.gaminv(mu, nu);
      if (g == 0) continue;
      CMat JJ = cmul(J[static_cast<size_t>(mu)], J[static_cast<size_t>(nu)]);
      A = cadd(A, cscale(g, JJ));
    }
  for (int b = 0; b < m; ++b)
    if (C.tJ[b] != 0) A = cadd(A, cscale(C.tJ[b], J[static_cast<size_t>(b)]));
  A = cscale(0.5 * mu2k, A);

  // B dW = musk sum_M (sum_b rB(M,b) J_b) dW^M
  CMat BdW(d);
  BdW.setZero(d);
  for (int b = 0; b < m; ++b) {
    double w = 0;
    for (int M = 0; M < n; ++M) w += C.rB(M, b) * dW[M];
    if (w != 0) BdW = cadd(BdW, cscale(musk * w, J[static_cast<size_t>(b)]));
  }

  CMat step(d);
  if (exp_mode) {
    CMat X = cadd(cscale(dt, A), BdW);
    step = cexpm(X);
  } else {
    // exp-consistent first-order multiplier: I + (A + 1/2 sum_M B_M^2) dt + B dW
    CMat halfBB(d);
    halfBB.setZero(d);
    for (int b = 0; b < m; ++b)
      for (int s = 0; s < m; ++s) {
        const double w = C.BB(b, s);
        if (w == 0) continue;
        halfBB = cadd(halfBB, cscale(w, cmul(J[static_cast<size_t>(b)], J[static_cast<size_t>(s)])));
      }
    step.setIdentity(d);
    step = cadd(step, cadd(cscale(dt, cadd(A, cscale(0.5 * mu2k, halfBB))), BdW));
  }
  state.M = cmul(state.M, step);
  if (cmax_abs(state.M) > 1e12) throw std::runtime_error("MatrixOverflow: holonomy weight blew up");

  state.logV += C.V / (cfg.mu2 * cfg.kappa * cfg.mass) * dt;
  if (variant == Kernel::f2 || variant == Kernel::f3) state.logJ += -0.125 * mu2k * C.jt * dt;
  state.t += dt;
}

double jacobian_prefactor(double det_gamma_a, double det_gamma_b) {
  if (!(det_gamma_a > 0) || !(det_gamma_b > 0))
    throw std::runtime_error("SingularOrbitMetric: nonpositive orbit determinant");
  return std::pow(det_gamma_b / det_gamma_a, 0.25);
}

ReducedPathResult run_reduced_path(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                   const SimConfig& cfg, long path_index, bool with_density) {
  const int n = model.dim();
  const double dt = cfg.dt();
  const double sdt = std::sqrt(dt);
  const double mu2k = cfg.mu2k();
  const double musk = cfg.musqk();
  const bool include_jII = (kernel == Kernel::f1);

  ReducedPathResult out;
  out.a_end = model.group().identity();
  PathState st;
  st.t = cfg.t_a;
  st.point = cfg.start;
  st.M.setIdentity(irrep.dim());

  NoiseStream ns{cfg.seed, static_cast<uint64_t>(path_index)};
  double z[kMaxDim], dW[kMaxDim];
  StepCoeffs C;
  try {
    for (int s = 0; s < cfg.n_steps; ++s) {
      ns.gaussians(static_cast<uint32_t>(s), n, z);
      for (int k = 0; k < n; ++k) dW[k] = z[k] * sdt;
      step_coeffs(model, st.point.chart, st.point.q, cfg.deriv, kernel, C);
      holonomy_step(kernel, st, C, irrep, cfg, dt, dW, cfg.holonomy_exp);
      if (with_density) {
        double gw = 0;
        for (int M = 0; M < n; ++M) gw += C.gW[M] * dW[M];
        out.lnD += -0.5 * mu2k * C.q * dt + musk * gw;
      }
      if (cfg.include_group) out.a_end = step_group(model, C, out.a_end, mu2k, dW, dt);
      // SDE move with the already-evaluated coefficients
      SigmaPoint p = st.point;
      for (int A = 0; A < n; ++A) {
        double diff = 0;
        for (int M = 0; M < n; ++M) diff += C.NX(A, M) * dW[M];
        p.q[A] += mu2k * C.drift[A] * dt + musk * diff;
      }
      const double res = model.project_sigma(p.chart, p.q);
      if (!(res < 0.5)) throw std::runtime_error("ProjectionFailure");
      model.normalize_base(p.chart, p.q);
      if (model.needs_switch(p.chart, p.q)) {
        SwitchResult sw = model.do_switch(p.chart, p.q);
        p.chart = sw.chart;
        p.q = sw.q;
        // weight transports with D(shift)^T on the right; group coordinate
        // gains the left factor
        st.M = cmul(st.M, ctranspose(irrep.matrix(sw.shift)));
        if (cfg.include_group) out.a_end = model.group().compose(sw.shift, out.a_end);
      }
      st.point = p;
    }
    StepCoeffs Cend;
    step_coeffs(model, st.point.chart, st.point.q, cfg.deriv, Kernel::none, Cend);
    out.detgam_end = Cend.detgam;
  } catch (const std::exception&) {
    out.ok = false;
  }
  out.end = st.point;
  out.M = st.M;
  out.logV = st.logV;
  out.logJ = st.logJ;
  return out;
}

OriginalPathResult run_original_path(const BundleModel& model, const SimConfig& cfg,
                                     long path_index) {
  const int n = model.dim();
  const double dt = cfg.dt();
  const double sdt = std::sqrt(dt);
  OriginalPathResult out;
  out.chart = cfg.start.chart;
  out.q = cfg.start.q;
  NoiseStream ns{cfg.seed, static_cast<uint64_t>(path_index)};
  double z[kMaxDim], dW[kMaxDim];
  try {
    for (int s = 0; s < cfg.n_steps; ++s) {
      ns.gaussians(static_cast<uint32_t>(s), n, z);
      for (int k = 0; k < n; ++k) dW[k] = z[k] * sdt;
      out.logW += model.potential(out.chart, out.q) / (cfg.mu2 * cfg.kappa * cfg.mass) * dt;
      OriginalStep st = step_original(model, out.chart, out.q, cfg.mu2k(), dW, dt, cfg.deriv);
      out.chart = st.chart;
      out.q = st.q;
    }
  } catch (const std::exception&) {
    out.ok = false;
  }
  return out;
}

GirsanovResult girsanov_residual(const BundleModel& model, const Irrep& irrep,
                                 const SimConfig& cfg) {
  cfg.validate();
  const int d = irrep.dim();
  StepCoeffs C0;
  step_coeffs(model, cfg.start.chart, cfg.start.q, cfg.deriv, Kernel::none, C0);
  const double gam_a = C0.detgam;

  struct Acc {
    long n = 0;
    long failed = 0;
    std::array<cplx, kMaxIrr * kMaxIrr> lhs{}, rhs{}, rhs2{}, diff{};
    std::array<double, kMaxIrr * kMaxIrr> diff2{};
  };
  auto per_path = [&](long i, Acc& acc) {
    ReducedPathResult a = run_reduced_path(model, irrep, Kernel::f1, cfg, i, false);
    ReducedPathResult b = run_reduced_path(model, irrep, Kernel::f2, cfg, i, true);
    if (!a.ok || !b.ok) {
      acc.failed++;
      return;
    }
    const double jac = jacobian_prefactor(gam_a, b.detgam_end) * std::exp(b.logW());
    const double wA = std::exp(a.logW());
    const double wB2 = std::exp(b.lnD + b.logV);  // stochastic density carries the V-term only
    acc.n++;
    for (int p = 0; p < d; ++p)
      for (int q = 0; q < d; ++q) {
        const size_t k = static_cast<size_t>(p * d + q);
        const cplx va = wA * a.M(p, q);
        const cplx vb = jac * b.M(p, q);
        acc.lhs[k] += va;
        acc.rhs[k] += vb;
        // V-term of the tilde path without the Jtilde piece:
        acc.rhs2[k] += wB2 * b.M(p, q);
        const cplx dd = va - vb;
        acc.diff[k] += dd;
        acc.diff2[k] += std::norm(dd);
      }
  };
  auto blocks = run_path_blocks<Acc>(cfg.n_paths, 2048, per_path);

  GirsanovResult R;
  R.lhs.setZero(d);
  R.rhs.setZero(d);
  R.rhs_stochastic.setZero(d);
  R.diff.setZero(d);
  R.sigma.setZero(d, d);
  long n = 0;
  std::array<cplx, kMaxIrr * kMaxIrr> sl{}, sr{}, sr2{}, sd{};
  std::array<double, kMaxIrr * kMaxIrr> sd2{};
  for (const auto& b : blocks) {
    n += b.n;
    for (size_t k = 0; k < static_cast<size_t>(d * d); ++k) {
      sl[k] += b.lhs[k];
      sr[k] += b.rhs[k];
      sr2[k] += b.rhs2[k];
      sd[k] += b.diff[k];
      sd2[k] += b.diff2[k];
    }
  }
  R.n_paths = n;
  R.max_z = 0;
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      const size_t k = static_cast<size_t>(p * d + q);
      R.lhs(p, q) = sl[k] / static_cast<double>(n);
      R.rhs(p, q) = sr[k] / static_cast<double>(n);
      R.rhs_stochastic(p, q) = sr2[k] / static_cast<double>(n);
      R.diff(p, q) = sd[k] / static_cast<double>(n);
      const double var = sd2[k] / n - std::norm(sd[k] / static_cast<double>(n));
      const double se = std::sqrt(std::max(var, 0.0) / n);
      R.sigma(p, q) = se;
      const double z = (se > 0) ? std::abs(R.diff(p, q)) / se : (std::abs(R.diff(p, q)) > 0 ? 1e30 : 0.0);
      R.max_z = std::max(R.max_z, z);
    }
  return R;
}

}  // namespace bundlediff
