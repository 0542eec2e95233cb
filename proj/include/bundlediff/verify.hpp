#ifndef BUNDLEDIFF_VERIFY_HPP
#define BUNDLEDIFF_VERIFY_HPP

#include "bundlediff/greens.hpp"
#include "bundlediff/models.hpp"
#include "bundlediff/pdecheck.hpp"
#include "bundlediff/report.hpp"

namespace bundlediff {

struct VerifySettings {
  std::string model = "hopf";
  ModelParams params;
  uint64_t seed = 1;
  DerivMode deriv = DerivMode::analytic;
  int points = 1000;          // geometry suite sample size
  int op_points = 50;         // operator identity points
  int op_sections = 20;       // operator identity sections
  long paths = 100000;        // girsanov paths
  long reduction_paths = 200000;
  int steps = 200;
  int quad_order = 32;
  double grid_h = 0.02;
  long mcpde_paths = 100000;
  int mcpde_points = 48;
  double t_span = 0.5;
  double mu2 = 1.0, kappa = 1.0, mass = 1.0;
};

Verdict verify_geometry(const VerifySettings& s);
Verdict verify_operators(const VerifySettings& s);
Verdict verify_girsanov(const VerifySettings& s);
Verdict verify_reduction(const VerifySettings& s);
Verdict verify_mcpde(const VerifySettings& s);
Verdict verify_convergence(const VerifySettings& s);
Verdict verify_determinism(const VerifySettings& s);
Verdict verify_error_scaling(const VerifySettings& s);

// union of the suites appropriate for the model (exit gate for `verify all`)
std::vector<Verdict> verify_all(const VerifySettings& s);

}  // namespace bundlediff

#endif
