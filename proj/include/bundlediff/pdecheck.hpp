#ifndef BUNDLEDIFF_PDECHECK_HPP
#define BUNDLEDIFF_PDECHECK_HPP

#include <vector>

#include "bundlediff/geometry.hpp"
#include "bundlediff/group.hpp"

namespace bundlediff {

enum class OpLabel {
  op2,                    // generator of the f1 (full-drift) matrix semigroup
  operator_2,             // generator of the transformed (f2) semigroup
  operator_3_casimir,     // horizontal Laplacian form + Casimir + potentials
  h_kappa,                // forward operator on the associated vector bundle
  total_space             // scalar generator on P (acts on total functions)
};

// generator in coefficient form: L psi = sum_AB h2(A,B) d2_AB psi
//   + sum_A [c1I(A) I + c1J[A]] d_A psi + c0 psi
struct OpCoeffs {
  int n = 0, d = 1;
  Mat h2;
  Vec c1I;
  std::vector<CMat> c1J;  // n entries
  CMat c0;
};

// assemble the labelled operator's coefficients at a Sigma point
OpCoeffs assemble_operator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                           const SigmaPoint& p, DerivMode mode,
                           double mu2, double kappa, double mass);

// smooth section with analytic derivatives (free coordinates only; constant in
// the pinned directions)
struct SmoothSection {
  int d = 1;
  // val[d], grad[d*n], hess[d*n*n] row-major over (component, A, B)
  std::function<void(const SigmaPoint&, cplx*, cplx*, cplx*)> eval;
};

SmoothSection random_trig_section(const BundleModel& model, int d, uint64_t seed, int n_modes = 3);

// apply the labelled generator to a smooth section at a point
void apply_generator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                     const SmoothSection& s, const SigmaPoint& p, DerivMode mode, double mu2,
                     double kappa, double mass, cplx* out);

// max relative residual of (operator_2) against the horizontal-Laplacian form
double operator_identity_residual(const BundleModel& model, const Irrep& irrep, int n_points,
                                  int n_sections, DerivMode mode, uint64_t seed,
                                  double mu2 = 1, double kappa = 1, double mass = 1);

// ---- grids -----------------------------------------------------------------

// chart-aligned rectangular lattice over the free coordinates; one or two
// charts (two-chart grids couple through cubic interpolation with the irrep
// transition factor)
struct GridSection {
  int d = 1;
  int ncharts = 1;
  int nx = 0, ny = 0;        // per-chart lattice
  double x0 = 0, y0 = 0, h = 0;
  std::vector<int> node_chart;          // chart of each node
  std::vector<int> node_ix, node_iy;
  std::vector<cplx> values;             // node-major, d components each
  long n_nodes() const { return static_cast<long>(node_chart.size()); }
  SigmaPoint point_of(const BundleModel& model, long node) const;
};

GridSection make_grid(const BundleModel& model, double h, double extent, int d);

// fill values from a pointwise section evaluator
void fill_grid(GridSection& g, const BundleModel& model,
               const std::function<void(const SigmaPoint&, cplx*)>& f);

enum class Stepper { crank_nicolson, explicit_euler };

struct EvolveOptions {
  double t_span = 0.25;
  double dt = 2.5e-3;
  Stepper stepper = Stepper::crank_nicolson;
  double mu2 = 1, kappa = 1, mass = 1;
  DerivMode mode = DerivMode::analytic;
};

GridSection evolve(OpLabel label, const BundleModel& model, const Irrep& irrep,
                   const GridSection& initial, const EvolveOptions& opt);

// apply the assembled grid operator once (second-order stencils)
GridSection apply_grid_operator(OpLabel label, const BundleModel& model, const Irrep& irrep,
                                const GridSection& u, const EvolveOptions& opt);

// interpolate the grid section at a Sigma point (bicubic); vector_bundle
// selects the seam transition rule (forward h_kappa sections vs covector ones)
void grid_value(const GridSection& g, const BundleModel& model, const Irrep& irrep,
                const SigmaPoint& p, cplx* out, bool vector_bundle = false);

enum class VolumeWeight { eq33, scal_product };

// quadrature of <a, b> against the selected volume density
cplx scalar_product(const GridSection& a, const GridSection& b, const BundleModel& model,
                    VolumeWeight w, DerivMode mode = DerivMode::analytic);

}  // namespace bundlediff

#endif
