#ifndef BUNDLEDIFF_HOLONOMY_HPP
#define BUNDLEDIFF_HOLONOMY_HPP

#include "bundlediff/sde.hpp"

namespace bundlediff {

// state of one path: time, position, time-ordered matrix weight, scalar log
// weight (potential term and, for f2/f3 kernels, the reduction-Jacobian term)
struct PathState {
  double t = 0;
  SigmaPoint point;
  CMat M;
  double logV = 0;  // accumulated potential exponent
  double logJ = 0;  // accumulated -1/8 mu2k Jtilde exponent (f2/f3)
  double logW() const { return logV + logJ; }
};

// multiply the accumulated weight by one multiplier; later factors multiply on
// the right (the time-order arrow points at greater times). The default
// multiplier is the first-order expansion of exp(A dt + B dW); set exp_mode
// for the exact matrix exponential.
void holonomy_step(Kernel variant, PathState& state, const StepCoeffs& C, const Irrep& irrep,
                   const SimConfig& cfg, double dt, const double* dW, bool exp_mode);

// boundary prefactor (gamma_b / gamma_a)^{1/4} of the geometric Jacobian
double jacobian_prefactor(double det_gamma_a, double det_gamma_b);

// one complete reduced path with holonomy accumulation; dW noise is shared
// across kernel variants through the counter-based stream.
struct ReducedPathResult {
  SigmaPoint end;
  GroupElement a_end;      // group process endpoint when cfg.include_group
  CMat M;
  double logV = 0;
  double logJ = 0;
  double logW() const { return logV + logJ; }
  double lnD = 0;          // stochastic Girsanov density along the path
  double detgam_end = 0;
  bool ok = true;
};
ReducedPathResult run_reduced_path(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                   const SimConfig& cfg, long path_index,
                                   bool with_density = false);

// endpoint of one total-space path together with the accumulated V-weight
struct OriginalPathResult {
  int chart = 0;
  Vec q;                   // includes the fiber coordinate
  double logW = 0;         // V-term
  bool ok = true;
};
OriginalPathResult run_original_path(const BundleModel& model, const SimConfig& cfg,
                                     long path_index);

// Girsanov check: expectation of the f1 weight over the full-drift process
// against the factorized f2 weight times the geometric Jacobian over the
// reduced-drift process, with common random numbers.
struct GirsanovResult {
  CMat lhs, rhs, rhs_stochastic;
  CMat diff;          // lhs - rhs (geometric form)
  Mat sigma;          // std error of the difference, entrywise
  double max_z = 0;   // max |diff| / sigma
  long n_paths = 0;
};
GirsanovResult girsanov_residual(const BundleModel& model, const Irrep& irrep,
                                 const SimConfig& cfg);

}  // namespace bundlediff

#endif
