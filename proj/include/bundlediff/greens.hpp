#ifndef BUNDLEDIFF_GREENS_HPP
#define BUNDLEDIFF_GREENS_HPP

#include "bundlediff/holonomy.hpp"

namespace bundlediff {

// complex matrix-valued Monte-Carlo estimate with per-entry standard errors
struct SemigroupEstimate {
  CMat value;
  Mat stderr_;   // combined std error of real and imaginary parts
  long n_paths = 0;
  long n_failed = 0;
};

// section of the associated covector bundle over Sigma, evaluated in the
// chart's trivialization (the builder applies transition factors)
struct TestSection {
  int d = 1;
  std::function<void(const SigmaPoint&, cplx*)> eval;  // writes d components
};

// scalar function on the total space, in bundle coordinates (chart, Q + fiber)
struct TotalFunction {
  std::function<cplx(int, const Vec&)> eval;
};

// constant section psi = c
TestSection constant_section(int d, cplx c);
// Gaussian bump (times the transition factor on the other chart for hopf-like
// two-chart models); center/width in home-chart free coordinates
TestSection bump_section(const BundleModel& model, const Irrep& irrep, const Vec& center,
                         double width, int home_chart = 0);
// equivariant extension phi(p) = sum_m D_mn(a(p)) psi_m(Q*(p)) contracted with
// a fixed weight vector (scalar initial data for the total-space side)
TotalFunction equivariant_extension(const BundleModel& model, const Irrep& irrep,
                                    const TestSection& psi, int component);

// (U(t_b,t_a) psi0)(start): mean over paths of exp(logW) M psi0(endpoint)
SemigroupEstimate semigroup_apply_mc(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                     const TestSection& psi0, const SimConfig& cfg,
                                     bool gamma_quarter_weights = false);

// E[phi0(eta(t_b)) exp(int V)] for a function on the total space
SemigroupEstimate total_space_apply_mc(const BundleModel& model, const TotalFunction& phi0,
                                       const SimConfig& cfg);

// int_G (smeared G_P)(p_b theta; p_a) D(theta^{-1})_{qp} dmu(theta) by Haar
// quadrature over one frozen ensemble, translation applied to the endpoint's
// group coordinate
SemigroupEstimate group_average_rhs(const BundleModel& model, const Irrep& irrep,
                                    const TotalFunction& phi0_base, const SimConfig& cfg,
                                    int quad_order);

// the two sides of the reduction identity applied to smooth initial data
struct ReductionResult {
  SemigroupEstimate lhs;       // gamma-prefactored reduced estimate (f2/f3 kernel)
  SemigroupEstimate rhs;       // group-averaged total-space estimate
  CMat diff;
  Mat sigma;
  double max_z = 0;
};
ReductionResult reduction_residual(const BundleModel& model, const Irrep& irrep,
                                   const TestSection& psi0, const SimConfig& cfg,
                                   Kernel kernel = Kernel::f3);

// histogram-binned pointwise kernel estimate (visualization only)
struct KernelHistogram {
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, hx = 0, hy = 0;
  std::vector<cplx> density;  // row-major nx*ny, d=1 sector
};
KernelHistogram kernel_histogram(const BundleModel& model, const Irrep& irrep, Kernel kernel,
                                 const SimConfig& cfg, int nx, int ny, double half_extent);

}  // namespace bundlediff

#endif
