#include "bundlediff/sde.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bundlediff/rng.hpp"

namespace bundlediff {

void SimConfig::validate() const {
  if (!(t_b >= t_a)) throw std::runtime_error("config: t_b must not precede t_a");
  if (n_steps < 1) throw std::runtime_error("config: n_steps must be >= 1");
  if (!(kappa > 0)) throw std::runtime_error("config: kappa must be positive");
  if (!(mu2 > 0) || !(mass > 0)) throw std::runtime_error("config: mu2 and mass must be positive");
  if (n_paths < 1) throw std::runtime_error("config: n_paths must be >= 1");
}

OriginalStep step_original(const BundleModel& model, int chart, const Vec& q, double mu2k,
                           const double* dW, double dt, DerivMode mode) {
  const int n = model.dim();
  Mat G;
  Ten3 dG;
  model.metric(chart, q, G);
  if (mode == DerivMode::analytic)
    model.dmetric(chart, q, dG);
  else
    fd_dmetric(model, chart, q, dG);
  Mat Ginv;
  invert(G, Ginv);
  Mat X = metric_sqrt(G);
  // drift^A = 1/2 mu2k [ d_B G^{AB} + 1/2 G^{AB} G^{CD} d_B G_CD ]
  OriginalStep out;
  out.chart = chart;
  out.q = q;
  for (int A = 0; A < n; ++A) {
    double t1 = 0, t2 = 0;
    for (int B = 0; B < n; ++B) {
      // d_B G^{AB} = -(Ginv dG Ginv)
      double dAB = 0;
      for (int C = 0; C < n; ++C)
        for (int D = 0; D < n; ++D) dAB -= Ginv(A, C) * dG(C, D, B) * Ginv(D, B);
      t1 += dAB;
      double tr = 0;
      for (int C = 0; C < n; ++C)
        for (int D = 0; D < n; ++D) tr += Ginv(C, D) * dG(C, D, B);
      t2 += 0.5 * Ginv(A, B) * tr;
    }
    double diff = 0;
    for (int M = 0; M < n; ++M) diff += X(A, M) * dW[M];
    out.q[A] += 0.5 * mu2k * (t1 + t2) * dt + std::sqrt(mu2k) * diff;
  }
  model.normalize_base(out.chart, out.q);
  if (model.needs_switch(out.chart, out.q)) {
    SwitchResult s = model.do_switch(out.chart, out.q);
    // the fiber block gains the left factor `shift`
    GroupElement fib = model.fiber_coordinate(s.chart, s.q);
    GroupElement nf = model.group().compose(s.shift, fib);
    const auto pinned = model.pinned_indices();
    for (size_t k = 0; k < pinned.size(); ++k) s.q[pinned[k]] = nf.a[k];
    out.chart = s.chart;
    out.q = s.q;
    out.shift = s.shift;
    out.switched = true;
  }
  return out;
}

SigmaStep step_sigma(const BundleModel& model, const SigmaPoint& p, double mu2k, const double* dW,
                     double dt, bool include_jII, DerivMode mode) {
  StepCoeffs C;
  step_coeffs(model, p.chart, p.q, mode, include_jII ? Kernel::f1 : Kernel::none, C);
  SigmaStep out;
  out.point = p;
  const int n = model.dim();
  for (int A = 0; A < n; ++A) {
    double diff = 0;
    for (int M = 0; M < n; ++M) diff += C.NX(A, M) * dW[M];
    out.point.q[A] += mu2k * C.drift[A] * dt + std::sqrt(mu2k) * diff;
  }
  out.constraint_residual = model.project_sigma(out.point.chart, out.point.q);
  model.normalize_base(out.point.chart, out.point.q);
  if (model.needs_switch(out.point.chart, out.point.q)) {
    SwitchResult s = model.do_switch(out.point.chart, out.point.q);
    out.point.chart = s.chart;
    out.point.q = s.q;
    out.shift = s.shift;
    out.switched = true;
  }
  return out;
}

GroupElement step_group(const BundleModel& model, const StepCoeffs& C, const GroupElement& a,
                        double mu2k, const double* dW, double dt) {
  const int m = model.gdim();
  Mat ubar, vbar;
  double det_ubar;
  model.group().frames(a, ubar, vbar, det_ubar);
  Ten3 dvb;
  model.group().dvbar(a, dvb);
  GroupElement out = a;
  for (int al = 0; al < m; ++al) {
    double drift = 0;
    for (int b = 0; b < m; ++b) drift += C.drift_a[b] * vbar(al, b);
    // - G^{MB} Lam^e_M Lam^b_B vbar^n_e d_n vbar^al_b   (enters with +1/2 overall)
    double dv = 0;
    for (int e = 0; e < m; ++e)
      for (int b = 0; b < m; ++b)
        for (int nmu = 0; nmu < m; ++nmu)
          dv += C.LGL(e, b) * vbar(nmu, e) * dvb(al, b, nmu);
    double diff = 0;
    for (int b = 0; b < m; ++b)
      for (int M = 0; M < model.dim(); ++M) diff += vbar(al, b) * C.LamX(b, M) * dW[M];
    out.a[static_cast<size_t>(al)] += -0.5 * mu2k * (drift - dv) * dt + std::sqrt(mu2k) * diff;
  }
  // renormalize into the chart (U(1): wrap; SU(2): principal parameters)
  return model.group().compose(out, model.group().identity());
}

int worker_count() {
  if (const char* env = std::getenv("BUNDLEDIFF_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

void run_blocks_impl(long n_paths, long block_size, int workers,
                     const std::function<void(long, long, void*)>& body,
                     const std::function<void*(size_t)>& slot) {
  const long nblocks = (n_paths + block_size - 1) / block_size;
  std::atomic<long> next{0};
  auto work = [&]() {
    for (;;) {
      const long blk = next.fetch_add(1);
      if (blk >= nblocks) return;
      void* acc = slot(static_cast<size_t>(blk));
      const long lo = blk * block_size;
      const long hi = std::min(n_paths, lo + block_size);
      for (long i = lo; i < hi; ++i) body(i, blk, acc);
    }
  };
  const int k = std::max(1, std::min(workers, static_cast<int>(std::min<long>(nblocks, 1024))));
  if (k == 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(k));
  for (int t = 0; t < k; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace detail

EnsembleStats simulate_paths(const BundleModel& model, const SimConfig& cfg, const StepHook& hook) {
  cfg.validate();
  const int n = model.dim();
  const double dt = cfg.dt();
  const double sdt = std::sqrt(dt);

  struct Acc {
    long n = 0, failed = 0;
    std::array<double, kMaxDim> sum{};
    std::array<double, kMaxDim * kMaxDim> sum2{};
  };
  // hooks observe paths sequentially; force one block covering everything when
  // a hook is installed so invocation order is well-defined
  const long bs = hook ? cfg.n_paths : 4096;

  auto per_path = [&](long i, Acc& acc) {
    NoiseStream ns{cfg.seed, static_cast<uint64_t>(i)};
    double z[kMaxDim], dW[kMaxDim];
    try {
      if (cfg.variant == ProcessVariant::original) {
        int chart = cfg.start.chart;
        Vec q = cfg.start.q;
        for (int s = 0; s < cfg.n_steps; ++s) {
          ns.gaussians(static_cast<uint32_t>(s), n, z);
          for (int k = 0; k < n; ++k) dW[k] = z[k] * sdt;
          if (hook) hook(s, cfg.t_a + s * dt, chart, q, dt, dW);
          OriginalStep st = step_original(model, chart, q, cfg.mu2k(), dW, dt, cfg.deriv);
          chart = st.chart;
          q = st.q;
        }
        acc.n++;
        for (int k = 0; k < n; ++k) {
          acc.sum[static_cast<size_t>(k)] += q[k];
          for (int l = 0; l < n; ++l) acc.sum2[static_cast<size_t>(k * n + l)] += q[k] * q[l];
        }
      } else {
        SigmaPoint p = cfg.start;
        const bool jii = cfg.variant == ProcessVariant::sigma_full;
        GroupElement a = model.group().identity();
        for (int s = 0; s < cfg.n_steps; ++s) {
          ns.gaussians(static_cast<uint32_t>(s), n, z);
          for (int k = 0; k < n; ++k) dW[k] = z[k] * sdt;
          if (hook) hook(s, cfg.t_a + s * dt, p.chart, p.q, dt, dW);
          if (cfg.include_group) {
            StepCoeffs C;
            step_coeffs(model, p.chart, p.q, cfg.deriv, jii ? Kernel::f1 : Kernel::none, C);
            a = step_group(model, C, a, cfg.mu2k(), dW, dt);
          }
          SigmaStep st = step_sigma(model, p, cfg.mu2k(), dW, dt, jii, cfg.deriv);
          if (!(st.constraint_residual < 0.5)) throw std::runtime_error("ProjectionFailure");
          p = st.point;
          if (st.switched && cfg.include_group) a = model.group().compose(st.shift, a);
        }
        acc.n++;
        for (int k = 0; k < n; ++k) {
          acc.sum[static_cast<size_t>(k)] += p.q[k];
          for (int l = 0; l < n; ++l) acc.sum2[static_cast<size_t>(k * n + l)] += p.q[k] * p.q[l];
        }
        (void)a;
      }
    } catch (const std::exception&) {
      acc.failed++;
    }
  };
  auto blocks = run_path_blocks<Acc>(cfg.n_paths, bs, per_path);

  EnsembleStats st;
  st.mean.setZero(n);
  st.cov.setZero(n, n);
  double sum[kMaxDim] = {0}, sum2[kMaxDim * kMaxDim] = {0};
  for (const auto& b : blocks) {
    st.n_paths += b.n;
    st.n_failed += b.failed;
    for (int k = 0; k < n; ++k) sum[k] += b.sum[static_cast<size_t>(k)];
    for (int k = 0; k < n * n; ++k) sum2[k] += b.sum2[static_cast<size_t>(k)];
  }
  if (st.n_paths > 0) {
    for (int k = 0; k < n; ++k) st.mean[k] = sum[k] / st.n_paths;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        st.cov(k, l) = sum2[k * n + l] / st.n_paths - st.mean[k] * st.mean[l];
  }
  return st;
}

}  // namespace bundlediff
