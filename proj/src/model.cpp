#include "bundlediff/model.hpp"

#include <cmath>
#include <stdexcept>

namespace bundlediff {

void BundleModel::act(int chart, const Vec& Q, const GroupElement& g, Vec& out) const {
  out = Q;
  GroupElement a = fiber_coordinate(chart, Q);
  GroupElement ag = group().compose(a, g);
  const auto pinned = pinned_indices();
  for (size_t k = 0; k < pinned.size(); ++k) out[pinned[k]] = ag.a[k];
}

GroupElement BundleModel::fiber_coordinate(int chart, const Vec& Q) const {
  (void)chart;
  GroupElement a;
  a.m = gdim();
  const auto pinned = pinned_indices();
  for (size_t k = 0; k < pinned.size(); ++k) a.a[k] = Q[pinned[k]];
  return a;
}

std::vector<int> BundleModel::free_indices() const {
  std::vector<int> v;
  for (int i = 0; i < dim() - gdim(); ++i) v.push_back(i);
  return v;
}

std::vector<int> BundleModel::pinned_indices() const {
  std::vector<int> v;
  for (int i = dim() - gdim(); i < dim(); ++i) v.push_back(i);
  return v;
}

double BundleModel::project_sigma(int chart, Vec& Q) const {
  Vec chi;
  gauge(chart, Q, chi);
  double r = 0;
  for (int a = 0; a < gdim(); ++a) r = std::max(r, std::fabs(chi[a]));
  for (int idx : pinned_indices()) Q[idx] = 0.0;
  return r;
}

SwitchResult BundleModel::do_switch(int chart, const Vec& Q) const {
  SwitchResult s;
  s.chart = chart;
  s.q = Q;
  s.shift = group().identity();
  return s;
}

void fd_dmetric(const BundleModel& m, int chart, const Vec& Q, Ten3& dG, double h) {
  const int n = m.dim();
  dG.setZero(n, n, n);
  Mat Gp, Gm;
  for (int c = 0; c < n; ++c) {
    Vec qp = Q, qm = Q;
    qp[c] += h;
    qm[c] -= h;
    m.metric(chart, qp, Gp);
    m.metric(chart, qm, Gm);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dG(a, b, c) = (Gp(a, b) - Gm(a, b)) / (2 * h);
  }
}

void fd_dkilling(const BundleModel& m, int chart, const Vec& Q, Ten3& dK, double h) {
  const int n = m.dim(), ng = m.gdim();
  dK.setZero(n, ng, n);
  Mat Kp, Km;
  for (int c = 0; c < n; ++c) {
    Vec qp = Q, qm = Q;
    qp[c] += h;
    qm[c] -= h;
    m.killing(chart, qp, Kp);
    m.killing(chart, qm, Km);
    for (int a = 0; a < n; ++a)
      for (int mu = 0; mu < ng; ++mu) dK(a, mu, c) = (Kp(a, mu) - Km(a, mu)) / (2 * h);
  }
}

void fd_dgauge(const BundleModel& m, int chart, const Vec& Q, Mat& dchi, double h) {
  const int n = m.dim(), ng = m.gdim();
  dchi.setZero(ng, n);
  Vec cp, cm;
  for (int b = 0; b < n; ++b) {
    Vec qp = Q, qm = Q;
    qp[b] += h;
    qm[b] -= h;
    m.gauge(chart, qp, cp);
    m.gauge(chart, qm, cm);
    for (int a = 0; a < ng; ++a) dchi(a, b) = (cp[a] - cm[a]) / (2 * h);
  }
}

void fd_d2gauge(const BundleModel& m, int chart, const Vec& Q, Ten3& dd, double h) {
  const int n = m.dim(), ng = m.gdim();
  dd.setZero(ng, n, n);
  Mat dp, dm;
  for (int e = 0; e < n; ++e) {
    Vec qp = Q, qm = Q;
    qp[e] += h;
    qm[e] -= h;
    m.dgauge(chart, qp, dp);
    m.dgauge(chart, qm, dm);
    for (int a = 0; a < ng; ++a)
      for (int b = 0; b < n; ++b) dd(a, b, e) = (dp(a, b) - dm(a, b)) / (2 * h);
  }
}

}  // namespace bundlediff
