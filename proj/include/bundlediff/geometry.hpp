#ifndef BUNDLEDIFF_GEOMETRY_HPP
#define BUNDLEDIFF_GEOMETRY_HPP

#include <functional>
#include <map>
#include <string>

#include "bundlediff/model.hpp"

namespace bundlediff {

// Every first-derivative-level tensor of the reduction at one Sigma point.
// Mixed tensors are stored row = upper index, column = lower index; rank-3
// derivative tensors carry the derivative direction in the last slot.
struct FirstOrder {
  int n = 0, m = 0;
  Mat G, Ginv, K, gam, gaminv, Phi, Phiinv, Lam, N, A, Pi, GH, Pperp, h, Kflat, chiT, LmA;
  Ten3 dG, dK, Gam, HGam, dN, dA, dgam, dLam, Fcurv, secff;
  Vec jI, jII;
  Vec nkk;           // gamma^{ab} (nabla_{K_a} K_b)^C
  Vec t_drift;       // per group index: t1 + t2 - t3 (the Lambda drift block)
  double F2 = 0, RG = 0, jnorm2 = 0;
  double detG = 0, detgam = 0, cond_Phi = 0;
};

struct CurvatureScalars {
  double RP = 0, HR = 0, RG = 0, F2 = 0, jnorm2 = 0, Jtilde = 0;
};

struct GeometryReport {
  SigmaPoint point;
  DerivMode mode = DerivMode::analytic;
  FirstOrder fo;
  CurvatureScalars sc;
  // max-abs residuals of the projector algebra at this point
  std::map<std::string, double> residuals;
};

// how much of the tensor set to assemble: the Monte-Carlo step needs the
// drift/holonomy blocks only; the Girsanov density additionally needs the
// orthogonal projector; reports need everything
enum class GeomLevel { step, step_density, full };

// assemble first-derivative tensors at Q (chart coordinates, on Sigma)
void first_order(const BundleModel& model, int chart, const Vec& Q, DerivMode mode,
                 FirstOrder& out, GeomLevel level = GeomLevel::full);

// curvature scalars; R_P and HR contract the derivative of the (horizontal)
// Christoffels by one further central difference of step h
CurvatureScalars curvature_scalars(const BundleModel& model, int chart, const Vec& Q,
                                   DerivMode mode, double h = 1e-4, bool richardson = false);

GeometryReport geometry_report(const BundleModel& model, const SigmaPoint& p,
                               DerivMode mode = DerivMode::analytic, bool with_scalars = true);

// bundle metric at (Q*, a): the (n+m)^2 matrix of Eq-(8) type, its
// pseudoinverse, the block product, and the determinant factorization in the
// adapted-chart reduced form.
struct MetricBlock {
  Mat Gtilde;        // (n+m) x (n+m)
  Mat GtildeInv;     // (n+m) x (n+m)
  Mat product;       // GtildeInv * Gtilde, should equal diag(Pperp, I_m)
  double det_reduced = 0;        // det of the (free + group) sub-block
  double det_factorized = 0;     // det(Pperp G^H Pperp)|free * det gamma * (det ubar)^2
};

MetricBlock metric_block(const BundleModel& model, const SigmaPoint& p, const GroupElement& a,
                         DerivMode mode = DerivMode::analytic);

// lower-triangular X with X X^T = G^{-1}
Mat metric_sqrt(const Mat& G);

// max residual of psi(p g) = D(g)^T psi(p) over random samples
double equivariance_check(const BundleModel& model, const Irrep& irrep,
                          const std::function<void(int, const Vec&, CMat&, int)>& section_total,
                          int n_samples, uint64_t seed);

// ---- Monte-Carlo hot path ------------------------------------------------

enum class Kernel { none, f1, f2, f3 };

// everything one Euler-Maruyama + holonomy step consumes at the current point
struct StepCoeffs {
  int n = 0, m = 0;
  Vec drift;          // SDE drift vector (without the mu^2 kappa factor)
  Mat NX;             // N * X diffusion matrix (without mu sqrt(kappa))
  Mat X;              // metric sqrt
  Mat gaminv;         // orbit metric inverse
  Mat rB;             // (n x m): rB(M, be) = [(Lam - A) X]^be_M, noise row per group index
  Mat BB;             // (m x m): (Lam - A) G^{-1} (Lam - A)^T, the Ito correction block
  Vec tJ;             // drift coefficient per group index multiplying J_beta
  double jt = 0;      // Jtilde
  double V = 0;
  double detgam = 0;
  // girsanov density: d ln D = -1/2 mu2k q dt + mu sqrt(kappa) gW . dW
  double q = 0;
  Vec gW;
  // group process (sde_a): drift block per group index (before vbar factors)
  Vec drift_a;
  Mat LamX;           // (m x n): Lambda X rows for the sde_a diffusion
  Mat LGL;            // (m x m): Lambda G^{-1} Lambda^T for the dvbar drift term
};

void step_coeffs(const BundleModel& model, int chart, const Vec& Q, DerivMode mode,
                 Kernel kernel, StepCoeffs& out);

}  // namespace bundlediff

#endif
