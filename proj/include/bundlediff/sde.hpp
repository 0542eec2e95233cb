#ifndef BUNDLEDIFF_SDE_HPP
#define BUNDLEDIFF_SDE_HPP

#include <functional>
#include <string>

#include "bundlediff/geometry.hpp"
#include "bundlediff/model.hpp"

namespace bundlediff {

enum class ProcessVariant { original, sigma_full, sigma_reduced };

struct SimConfig {
  double mu2 = 1.0;    // hbar / m
  double kappa = 1.0;  // real positive diffusion parameter
  double mass = 1.0;
  double t_a = 0.0;
  double t_b = 0.5;
  int n_steps = 200;
  long n_paths = 100000;
  uint64_t seed = 1;
  ProcessVariant variant = ProcessVariant::sigma_reduced;
  bool include_group = false;   // carry the a_t process alongside the Sigma process
  SigmaPoint start;             // Sigma point; the original process starts on the section
  DerivMode deriv = DerivMode::analytic;
  bool holonomy_exp = false;    // exact matrix-exponential multipliers
  double constraint_tol = 1e-10;

  double mu2k() const { return mu2 * kappa; }
  double musqk() const { return std::sqrt(mu2 * kappa); }
  double dt() const { return (t_b - t_a) / n_steps; }
  void validate() const;
};

// one Euler-Maruyama move of the original process (Eq.-(3) form); returns the
// possibly chart-switched state and the fiber shift if a switch happened
struct OriginalStep {
  int chart;
  Vec q;
  GroupElement shift;
  bool switched = false;
};
OriginalStep step_original(const BundleModel& model, int chart, const Vec& q, double mu2k,
                           const double* dW_sqrtdt, double dt, DerivMode mode);

// one move of the Sigma process (with or without the j_II drift term)
struct SigmaStep {
  SigmaPoint point;
  GroupElement shift;
  bool switched = false;
  double constraint_residual = 0;
};
SigmaStep step_sigma(const BundleModel& model, const SigmaPoint& p, double mu2k,
                     const double* dW_sqrtdt, double dt, bool include_jII, DerivMode mode);

// one move of the group process (sde_a); coefficients at Q*, frames at a
GroupElement step_group(const BundleModel& model, const StepCoeffs& C, const GroupElement& a,
                        double mu2k, const double* dW_sqrtdt, double dt);

// per-step hook: (step index, time, chart, state vector, dt, dW)
using StepHook =
    std::function<void(int, double, int, const Vec&, double, const double*)>;

struct EnsembleStats {
  long n_paths = 0;
  long n_failed = 0;
  // endpoint mean / covariance over the free coordinates (reduced variants)
  // or all coordinates (original)
  Vec mean;
  Mat cov;
};

EnsembleStats simulate_paths(const BundleModel& model, const SimConfig& cfg,
                             const StepHook& hook = nullptr);

int worker_count();  // BUNDLEDIFF_THREADS, default std::thread::hardware_concurrency

namespace detail {
void run_blocks_impl(long n_paths, long block_size, int workers,
                     const std::function<void(long, long, void*)>& body,
                     const std::function<void*(size_t)>& slot);
}

// deterministic block-parallel driver: paths are split into fixed blocks, each
// block accumulates into its own Acc slot, and the caller reduces the slots in
// block order, so ensemble statistics are identical at every thread count.
template <class Acc>
std::vector<Acc> run_path_blocks(long n_paths, long block_size,
                                 const std::function<void(long, Acc&)>& per_path) {
  const long nblocks = (n_paths + block_size - 1) / block_size;
  std::vector<Acc> accs(static_cast<size_t>(nblocks));
  detail::run_blocks_impl(
      n_paths, block_size, worker_count(),
      [&per_path](long i, long blk, void* slot) { per_path(i, *static_cast<Acc*>(slot)); (void)blk; },
      [&accs](size_t blk) -> void* { return &accs[blk]; });
  return accs;
}

}  // namespace bundlediff

#endif
