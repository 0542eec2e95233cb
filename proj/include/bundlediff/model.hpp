#ifndef BUNDLEDIFF_MODEL_HPP
#define BUNDLEDIFF_MODEL_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bundlediff/group.hpp"
#include "bundlediff/smallmat.hpp"

namespace bundlediff {

// Point of the gauge surface in a chart (adapted coordinates: the last n_G
// coordinates are the gauge functions and vanish on Sigma).
struct SigmaPoint {
  int chart = 0;
  Vec q;
};

struct SwitchResult {
  bool switched = false;
  int chart = 0;
  Vec q;
  GroupElement shift;  // fiber/group coordinate gains this left factor
};

enum class DerivMode { analytic, fd };

// Geometric input of the reduction problem: charts, metric, free isometric
// right group action with Killing fields, and the gauge functions chi.
class BundleModel {
 public:
  virtual ~BundleModel() = default;
  virtual std::string name() const = 0;
  virtual int dim() const = 0;   // N_P
  virtual int gdim() const = 0;  // N_G
  virtual int charts() const { return 1; }
  virtual const CompactGroup& group() const = 0;
  virtual bool has_analytic_derivatives() const = 0;

  virtual void metric(int chart, const Vec& Q, Mat& G) const = 0;
  virtual void dmetric(int chart, const Vec& Q, Ten3& dG) const = 0;   // dG(a,b,c) = d_c G_ab
  virtual void killing(int chart, const Vec& Q, Mat& K) const = 0;    // K(A,mu)
  virtual void dkilling(int chart, const Vec& Q, Ten3& dK) const = 0; // dK(A,mu,c)
  virtual void gauge(int chart, const Vec& Q, Vec& chi) const = 0;
  virtual void dgauge(int chart, const Vec& Q, Mat& dchi) const = 0;      // (al, B)
  virtual void d2gauge(int chart, const Vec& Q, Ten3& ddchi) const = 0;   // (al, B, E)
  virtual double potential(int chart, const Vec& Q) const { (void)chart; (void)Q; return 0.0; }

  // fiber translation p -> p.g in bundle coordinates (the fiber block carries
  // exponential group coordinates in every built-in chart)
  virtual void act(int chart, const Vec& Q, const GroupElement& g, Vec& out) const;
  virtual GroupElement fiber_coordinate(int chart, const Vec& Q) const;

  virtual std::vector<int> free_indices() const;
  virtual std::vector<int> pinned_indices() const;

  // reset the pinned coordinates (one Newton step degenerates to a coordinate
  // reset in adapted charts); returns the pre-projection constraint residual
  virtual double project_sigma(int chart, Vec& Q) const;
  // wrap periodic coordinates; identity by default
  virtual void normalize_base(int chart, Vec& Q) const { (void)chart; (void)Q; }

  virtual bool needs_switch(int chart, const Vec& Q) const { (void)chart; (void)Q; return false; }
  virtual SwitchResult do_switch(int chart, const Vec& Q) const;

  // closed-form Jtilde for the Monte-Carlo weight accumulation where known;
  // always cross-checked against the generic assembly in the test suite
  virtual bool jtilde_fast(int chart, const Vec& Q, double& jt) const {
    (void)chart; (void)Q; (void)jt;
    return false;
  }

  virtual SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const = 0;
  virtual std::map<std::string, double> known_constants() const { return {}; }

  // half-extent of the chart's free-coordinate domain (grids, histograms)
  virtual double chart_extent(int chart) const { (void)chart; return 2.0; }
  virtual bool periodic() const { return false; }
};

// finite-difference fallbacks used by DerivMode::fd and by file-backed models
void fd_dmetric(const BundleModel& m, int chart, const Vec& Q, Ten3& dG, double h = 1e-5);
void fd_dkilling(const BundleModel& m, int chart, const Vec& Q, Ten3& dK, double h = 1e-5);
void fd_dgauge(const BundleModel& m, int chart, const Vec& Q, Mat& dchi, double h = 1e-5);
void fd_d2gauge(const BundleModel& m, int chart, const Vec& Q, Ten3& dd, double h = 1e-4);

}  // namespace bundlediff

#endif
