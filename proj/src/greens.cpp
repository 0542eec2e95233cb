#include "bundlediff/greens.hpp"

#include <cmath>

namespace bundlediff {

namespace {

struct VecAcc {
  long n = 0, failed = 0;
  std::array<cplx, kMaxIrr> sum{};
  std::array<double, kMaxIrr> sum2{};
};

SemigroupEstimate finish(const std::vector<VecAcc>& blocks, int d) {
  SemigroupEstimate est;
  est.value.setZero(d);
  est.stderr_.setZero(d, 1);
  std::array<cplx, kMaxIrr> s{};
  std::array<double, kMaxIrr> s2{};
  for (const auto& b : blocks) {
    est.n_paths += b.n;
    est.n_failed += b.failed;
    for (int k = 0; k < d; ++k) {
      s[static_cast<size_t>(k)] += b.sum[static_cast<size_t>(k)];
      s2[static_cast<size_t>(k)] += b.sum2[static_cast<size_t>(k)];
    }
  }
  const double n = static_cast<double>(std::max<long>(est.n_paths, 1));
  for (int k = 0; k < d; ++k) {
    const cplx mean = s[static_cast<size_t>(k)] / n;
    est.value(k, 0) = mean;
    const double var = std::max(0.0, s2[static_cast<size_t>(k)] / n - std::norm(mean));
    est.stderr_(k, 0) = std::sqrt(var / n);
  }
  return est;
}

}  // namespace

TestSection constant_section(int d, cplx c) {
  TestSection s;
  s.d = d;
  s.eval = [d, c](const SigmaPoint&, cplx* out) {
    for (int k = 0; k < d; ++k) out[k] = c;
  };
  return s;
}

TestSection bump_section(const BundleModel& model, const Irrep& irrep, const Vec& center,
                         double width, int home_chart) {
  TestSection s;
  const int d = irrep.dim();
  s.d = d;
  const int nf = model.dim() - model.gdim();
  const bool two_charts = model.charts() > 1;
  auto base = [nf, center, width](const Vec& q) {
    double r2 = 0;
    for (int i = 0; i < nf; ++i) r2 += (q[i] - center[i]) * (q[i] - center[i]);
    return std::exp(-r2 / (2 * width * width));
  };
  if (!two_charts) {
    s.eval = [base, d](const SigmaPoint& p, cplx* out) {
      const double v = base(p.q);
      for (int k = 0; k < d; ++k) out[k] = v;
    };
    return s;
  }
  // two-chart (hopf) rule: home-chart component function psi(w); in the other
  // chart psi'(w') = D(g(arg w'))^T psi(1/w')
  auto irr = &irrep;
  s.eval = [base, d, home_chart, irr, &model](const SigmaPoint& p, cplx* out) {
    if (p.chart == home_chart) {
      const double v = base(p.q);
      for (int k = 0; k < d; ++k) out[k] = v;
      return;
    }
    const double u = p.q[0], vv = p.q[1];
    const double w2 = u * u + vv * vv;
    Vec q = p.q;
    q[0] = u / w2;
    q[1] = -vv / w2;
    const double val = base(q);
    CMat D = irr->matrix(GroupElement(std::atan2(vv, u)));
    // psi'_n = D_mn psi_m with psi_m = val * delta-profile (all components equal)
    for (int nn = 0; nn < d; ++nn) {
      cplx acc = 0;
      for (int mm = 0; mm < d; ++mm) acc += D(mm, nn) * val;
      out[nn] = acc;
    }
    (void)model;
  };
  return s;
}

TotalFunction equivariant_extension(const BundleModel& model, const Irrep& irrep,
                                    const TestSection& psi, int component) {
  TotalFunction f;
  const int d = irrep.dim();
  f.eval = [&model, &irrep, psi, component, d](int chart, const Vec& q) -> cplx {
    SigmaPoint base;
    base.chart = chart;
    base.q = q;
    model.project_sigma(chart, base.q);
    GroupElement a = model.fiber_coordinate(chart, q);
    cplx vals[kMaxIrr];
    psi.eval(base, vals);
    CMat D = irrep.matrix(a);
    cplx out = 0;
    for (int mm = 0; mm < d; ++mm) out += D(mm, component) * vals[mm];
    return out;
  };
  return f;
}

SemigroupEstimate semigroup_apply_mc(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                     const TestSection& psi0, const SimConfig& cfg,
                                     bool gamma_quarter_weights) {
  cfg.validate();
  const int d = irrep.dim();
  double gam_a = 1.0;
  if (gamma_quarter_weights) {
    StepCoeffs C0;
    step_coeffs(model, cfg.start.chart, cfg.start.q, cfg.deriv, Kernel::none, C0);
    gam_a = C0.detgam;
  }
  auto per_path = [&](long i, VecAcc& acc) {
    ReducedPathResult r = run_reduced_path(model, irrep, kernel, cfg, i, false);
    if (!r.ok) {
      acc.failed++;
      return;
    }
    cplx vals[kMaxIrr];
    psi0.eval(r.end, vals);
    double w = std::exp(r.logW());
    if (gamma_quarter_weights) w *= std::pow(gam_a * r.detgam_end, -0.25);
    acc.n++;
    for (int p = 0; p < d; ++p) {
      cplx v = 0;
      for (int q = 0; q < d; ++q) v += r.M(p, q) * vals[q];
      v *= w;
      acc.sum[static_cast<size_t>(p)] += v;
      acc.sum2[static_cast<size_t>(p)] += std::norm(v);
    }
  };
  auto blocks = run_path_blocks<VecAcc>(cfg.n_paths, 2048, per_path);
  return finish(blocks, d);
}

SemigroupEstimate total_space_apply_mc(const BundleModel& model, const TotalFunction& phi0,
                                       const SimConfig& cfg) {
  cfg.validate();
  auto per_path = [&](long i, VecAcc& acc) {
    OriginalPathResult r = run_original_path(model, cfg, i);
    if (!r.ok) {
      acc.failed++;
      return;
    }
    const cplx v = phi0.eval(r.chart, r.q) * std::exp(r.logW);
    acc.n++;
    acc.sum[0] += v;
    acc.sum2[0] += std::norm(v);
  };
  auto blocks = run_path_blocks<VecAcc>(cfg.n_paths, 2048, per_path);
  return finish(blocks, 1);
}

SemigroupEstimate group_average_rhs(const BundleModel& model, const Irrep& irrep,
                                    const TotalFunction& phi0_base, const SimConfig& cfg,
                                    int quad_order) {
  cfg.validate();
  const int d = irrep.dim();
  const auto nodes = model.group().haar(quad_order);
  std::vector<CMat> Dinv;
  Dinv.reserve(nodes.size());
  for (const auto& nd : nodes) Dinv.push_back(irrep.matrix(model.group().inverse(nd.g)));

  struct MatAcc {
    long n = 0, failed = 0;
    std::array<cplx, kMaxIrr * kMaxIrr> sum{};
    std::array<double, kMaxIrr * kMaxIrr> sum2{};
  };
  auto per_path = [&](long i, MatAcc& acc) {
    OriginalPathResult r = run_original_path(model, cfg, i);
    if (!r.ok) {
      acc.failed++;
      return;
    }
    const double w = std::exp(r.logW);
    CMat val(d);
    val.setZero(d);
    Vec qt;
    for (size_t k = 0; k < nodes.size(); ++k) {
      model.act(r.chart, r.q, nodes[k].g, qt);
      const cplx f = phi0_base.eval(r.chart, qt) * w * nodes[k].w;
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) val(q, p) += Dinv[k](q, p) * f;
    }
    acc.n++;
    for (int p = 0; p < d * d; ++p) {
      acc.sum[static_cast<size_t>(p)] += val.a[static_cast<size_t>(p)];
      acc.sum2[static_cast<size_t>(p)] += std::norm(val.a[static_cast<size_t>(p)]);
    }
  };
  auto blocks = run_path_blocks<MatAcc>(cfg.n_paths, 2048, per_path);

  SemigroupEstimate est;
  est.value.setZero(d);
  est.stderr_.setZero(d, d);
  std::array<cplx, kMaxIrr * kMaxIrr> s{};
  std::array<double, kMaxIrr * kMaxIrr> s2{};
  for (const auto& b : blocks) {
    est.n_paths += b.n;
    est.n_failed += b.failed;
    for (int k = 0; k < d * d; ++k) {
      s[static_cast<size_t>(k)] += b.sum[static_cast<size_t>(k)];
      s2[static_cast<size_t>(k)] += b.sum2[static_cast<size_t>(k)];
    }
  }
  const double n = static_cast<double>(std::max<long>(est.n_paths, 1));
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      const size_t k = static_cast<size_t>(p * d + q);
      const cplx mean = s[k] / n;
      est.value(p, q) = mean;
      est.stderr_(p, q) = std::sqrt(std::max(0.0, s2[k] / n - std::norm(mean)) / n);
    }
  return est;
}

ReductionResult reduction_residual(const BundleModel& model, const Irrep& irrep,
                                   const TestSection& psi0, const SimConfig& cfg, Kernel kernel) {
  const int d = irrep.dim();
  SimConfig lhs_cfg = cfg;
  lhs_cfg.variant = ProcessVariant::sigma_reduced;
  ReductionResult R;
  R.lhs = semigroup_apply_mc(model, irrep, kernel, psi0, lhs_cfg, /*gamma*/ true);

  // RHS: direct endpoint decomposition rhs_n = E[gam_e^{-1/2} D_mn(a_e) psi_m e^{int V}]
  SimConfig rhs_cfg = cfg;
  rhs_cfg.variant = ProcessVariant::original;
  rhs_cfg.seed = cfg.seed ^ 0x9E3779B97F4A7C15ull;
  auto per_path = [&](long i, VecAcc& acc) {
    OriginalPathResult r = run_original_path(model, rhs_cfg, i);
    if (!r.ok) {
      acc.failed++;
      return;
    }
    SigmaPoint base;
    base.chart = r.chart;
    base.q = r.q;
    model.project_sigma(base.chart, base.q);
    GroupElement a = model.fiber_coordinate(r.chart, r.q);
    StepCoeffs C;
    step_coeffs(model, base.chart, base.q, cfg.deriv, Kernel::none, C);
    cplx vals[kMaxIrr];
    psi0.eval(base, vals);
    CMat D = irrep.matrix(a);
    const double w = std::exp(r.logW) / std::sqrt(C.detgam);
    acc.n++;
    for (int nn = 0; nn < d; ++nn) {
      cplx v = 0;
      for (int mm = 0; mm < d; ++mm) v += D(mm, nn) * vals[mm];
      v *= w;
      acc.sum[static_cast<size_t>(nn)] += v;
      acc.sum2[static_cast<size_t>(nn)] += std::norm(v);
    }
  };
  auto blocks = run_path_blocks<VecAcc>(rhs_cfg.n_paths, 2048, per_path);
  R.rhs = finish(blocks, d);

  R.diff.setZero(d);
  R.sigma.setZero(d, 1);
  R.max_z = 0;
  for (int k = 0; k < d; ++k) {
    R.diff(k, 0) = R.lhs.value(k, 0) - R.rhs.value(k, 0);
    const double se = std::hypot(R.lhs.stderr_(k, 0), R.rhs.stderr_(k, 0));
    R.sigma(k, 0) = se;
    const double z = se > 0 ? std::abs(R.diff(k, 0)) / se : 0.0;
    R.max_z = std::max(R.max_z, z);
  }
  return R;
}

KernelHistogram kernel_histogram(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                 const SimConfig& cfg, int nx, int ny, double half_extent) {
  KernelHistogram H;
  H.nx = nx;
  H.ny = ny;
  H.x0 = -half_extent;
  H.y0 = -half_extent;
  H.hx = 2 * half_extent / nx;
  H.hy = 2 * half_extent / ny;
  H.density.assign(static_cast<size_t>(nx * ny), cplx(0, 0));
  struct HAcc {
    long n = 0;
    std::vector<cplx> bins;
  };
  auto per_path = [&](long i, HAcc& acc) {
    if (acc.bins.empty()) acc.bins.assign(static_cast<size_t>(nx * ny), cplx(0, 0));
    ReducedPathResult r = run_reduced_path(model, irrep, kernel, cfg, i, false);
    if (!r.ok || r.end.chart != cfg.start.chart) return;
    const int ix = static_cast<int>((r.end.q[0] - H.x0) / H.hx);
    const int iy = static_cast<int>((r.end.q[1] - H.y0) / H.hy);
    acc.n++;
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return;
    acc.bins[static_cast<size_t>(ix * ny + iy)] += std::exp(r.logW()) * r.M(0, 0);
  };
  auto blocks = run_path_blocks<HAcc>(cfg.n_paths, 8192, per_path);
  long n = 0;
  for (const auto& b : blocks) n += b.n;
  for (const auto& b : blocks)
    if (!b.bins.empty())
      for (size_t k = 0; k < b.bins.size(); ++k)
        H.density[k] += b.bins[k] / (static_cast<double>(std::max<long>(n, 1)) * H.hx * H.hy);
  return H;
}

}  // namespace bundlediff
