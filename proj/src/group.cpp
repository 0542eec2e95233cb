#include "bundlediff/group.hpp"

#include <cmath>
#include <stdexcept>

#include "bundlediff/rng.hpp"

namespace bundlediff {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double wrap_angle(double t) {
  t = std::fmod(t, 2 * kPi);
  if (t > kPi) t -= 2 * kPi;
  if (t <= -kPi) t += 2 * kPi;
  return t;
}

// ---------------------------------------------------------------- U(1)

class U1 final : public CompactGroup {
 public:
  int dim() const override { return 1; }
  std::string name() const override { return "U(1)"; }
  bool semisimple() const override { return false; }  // abelian; every c-term vanishes
  GroupElement identity() const override { return GroupElement(0.0); }
  GroupElement compose(const GroupElement& g, const GroupElement& h) const override {
    return GroupElement(wrap_angle(g.a[0] + h.a[0]));
  }
  GroupElement inverse(const GroupElement& g) const override {
    return GroupElement(wrap_angle(-g.a[0]));
  }
  double structure(int, int, int) const override { return 0.0; }
  void frames(const GroupElement&, Mat& ubar, Mat& vbar, double& det_ubar) const override {
    ubar.setIdentity(1);
    vbar.setIdentity(1);
    det_ubar = 1.0;
  }
  void dvbar(const GroupElement&, Ten3& d) const override { d.setZero(1, 1, 1); }
  void dubar(const GroupElement&, Ten3& d) const override { d.setZero(1, 1, 1); }
  std::vector<HaarNode> haar(int order) const override {
    std::vector<HaarNode> nodes;
    nodes.reserve(static_cast<size_t>(order));
    for (int i = 0; i < order; ++i) {
      const double th = -kPi + 2 * kPi * (i + 0.5) / order;
      nodes.push_back({GroupElement(th), 1.0 / order});
    }
    return nodes;
  }
  GroupElement random(uint64_t seed, uint64_t idx) const override;
};

// ---------------------------------------------------------------- SU(2)

struct Quat {
  double w = 1, x = 0, y = 0, z = 0;
};

Quat qmul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

// exp coords -> unit quaternion, q = exp(a^mu e_mu), e_mu = -(i/2) sigma_mu
Quat q_from_params(const GroupElement& g) {
  const double phi = g.norm();
  Quat q;
  q.w = std::cos(phi / 2);
  const double s = (phi > 1e-12) ? std::sin(phi / 2) / phi : 0.5 * (1 - phi * phi / 24.0);
  q.x = s * g.a[0];
  q.y = s * g.a[1];
  q.z = s * g.a[2];
  return q;
}

GroupElement params_from_q(const Quat& q) {
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  const double phi = 2.0 * std::atan2(vn, q.w);  // in [0, 2*pi]
  double s;
  if (vn > 1e-12) {
    s = phi / vn;
  } else {
    // near identity (or near -1, where the chart is singular)
    s = (q.w >= 0) ? 2.0 : 0.0;
    if (q.w < 0) throw std::runtime_error("SU(2): chart overflow at -identity");
  }
  return GroupElement(s * q.x, s * q.y, s * q.z);
}

// (ad_a)^s_n = eps_{s m n} a^m  (cross-product matrix)
void ad_matrix(const GroupElement& g, Mat& ad) {
  ad.setZero(3, 3);
  ad(0, 1) = -g.a[2]; ad(0, 2) = g.a[1];
  ad(1, 0) = g.a[2];  ad(1, 2) = -g.a[0];
  ad(2, 0) = -g.a[1]; ad(2, 1) = g.a[0];
}

class SU2 final : public CompactGroup {
 public:
  int dim() const override { return 3; }
  std::string name() const override { return "SU(2)"; }
  bool semisimple() const override { return true; }
  GroupElement identity() const override { return GroupElement(0, 0, 0); }
  GroupElement compose(const GroupElement& g, const GroupElement& h) const override {
    return params_from_q(qmul(q_from_params(g), q_from_params(h)));
  }
  GroupElement inverse(const GroupElement& g) const override {
    return GroupElement(-g.a[0], -g.a[1], -g.a[2]);
  }
  double structure(int a, int b, int g) const override {
    // eps_{abg}
    if (a == b || b == g || a == g) return 0.0;
    const bool even = (a == 0 && b == 1 && g == 2) || (a == 1 && b == 2 && g == 0) ||
                      (a == 2 && b == 0 && g == 1);
    return even ? 1.0 : -1.0;
  }
  void frames(const GroupElement& g, Mat& ubar, Mat& vbar, double& det_ubar) const override {
    // ubar = (1 - e^{-ad_a})/ad_a = I - c1 ad + c2 ad^2,
    // c1 = (1-cos phi)/phi^2, c2 = (phi - sin phi)/phi^3
    Mat ad;
    ad_matrix(g, ad);
    const double phi = g.norm();
    double c1, c2;
    if (phi < 1e-4) {
      c1 = 0.5 - phi * phi / 24.0;
      c2 = 1.0 / 6.0 - phi * phi / 120.0;
    } else {
      c1 = (1 - std::cos(phi)) / (phi * phi);
      c2 = (phi - std::sin(phi)) / (phi * phi * phi);
    }
    Mat ad2 = matmul(ad, ad);
    ubar.setIdentity(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ubar(i, j) += -c1 * ad(i, j) + c2 * ad2(i, j);
    det_ubar = invert(ubar, vbar);
  }
  void dubar(const GroupElement& g, Ten3& d) const override {
    // analytic derivative of ubar = I - c1 ad + c2 ad^2:
    // d ubar = -dc1 ad - c1 d(ad) + dc2 ad^2 + c2 (d(ad) ad + ad d(ad))
    Mat ad;
    ad_matrix(g, ad);
    Mat ad2 = matmul(ad, ad);
    const double phi = g.norm();
    double c1, c2, c1p, c2p;  // c'(phi)
    if (phi < 1e-3) {
      c1 = 0.5 - phi * phi / 24.0;
      c2 = 1.0 / 6.0 - phi * phi / 120.0;
      c1p = -phi / 12.0;
      c2p = -phi / 60.0;
    } else {
      const double p2 = phi * phi;
      c1 = (1 - std::cos(phi)) / p2;
      c2 = (phi - std::sin(phi)) / (p2 * phi);
      c1p = std::sin(phi) / p2 - 2 * (1 - std::cos(phi)) / (p2 * phi);
      c2p = (1 - std::cos(phi)) / (p2 * phi) - 3 * (phi - std::sin(phi)) / (p2 * p2);
    }
    d.setZero(3, 3, 3);
    for (int nu = 0; nu < 3; ++nu) {
      GroupElement e_nu;
      e_nu.m = 3;
      e_nu.a[static_cast<size_t>(nu)] = 1.0;
      Mat dad;
      ad_matrix(e_nu, dad);
      const double dphi = (phi > 1e-12) ? g.a[static_cast<size_t>(nu)] / phi : 0.0;
      Mat cross = matmul(dad, ad) + matmul(ad, dad);
      for (int al = 0; al < 3; ++al)
        for (int be = 0; be < 3; ++be)
          d(al, be, nu) = -c1p * dphi * ad(al, be) - c1 * dad(al, be) +
                          c2p * dphi * ad2(al, be) + c2 * cross(al, be);
    }
  }
  void dvbar(const GroupElement& g, Ten3& d) const override {
    // d vbar = -vbar (d ubar) vbar
    Mat ub, vb;
    double det;
    frames(g, ub, vb, det);
    Ten3 du;
    dubar(g, du);
    d.setZero(3, 3, 3);
    for (int nu = 0; nu < 3; ++nu)
      for (int al = 0; al < 3; ++al)
        for (int be = 0; be < 3; ++be) {
          double s = 0;
          for (int p = 0; p < 3; ++p)
            for (int q = 0; q < 3; ++q) s += vb(al, p) * du(p, q, nu) * vb(q, be);
          d(al, be, nu) = -s;
        }
  }
  std::vector<HaarNode> haar(int order) const override;
  GroupElement random(uint64_t seed, uint64_t idx) const override;
};

// Gauss-Legendre nodes on [-1,1]
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(static_cast<size_t>(n));
  w.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      const double dp = n * (t * p0 - p1) / (t * t - 1.0);
      const double dt = p0 / dp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
    }
    const double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[static_cast<size_t>(i)] = t;
    w[static_cast<size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

std::vector<HaarNode> SU2::haar(int order) const {
  // ZYZ Euler product rule: alpha in [0,2pi), beta via Gauss in cos(beta),
  // gamma in [0,4pi) (double cover); unit total mass.
  std::vector<double> xb, wb;
  gauss_legendre(order, xb, wb);
  std::vector<HaarNode> nodes;
  nodes.reserve(static_cast<size_t>(order * order * 2 * order));
  for (int ia = 0; ia < order; ++ia) {
    const double alpha = 2 * kPi * (ia + 0.5) / order;
    const double wa = 1.0 / order;
    for (int ib = 0; ib < order; ++ib) {
      const double beta = std::acos(xb[static_cast<size_t>(ib)]);
      const double wbeta = wb[static_cast<size_t>(ib)] / 2.0;
      for (int ig = 0; ig < 2 * order; ++ig) {
        const double gamma = 4 * kPi * (ig + 0.5) / (2 * order);
        const double wg = 1.0 / (2 * order);
        const Quat qa{std::cos(alpha / 2), 0, 0, std::sin(alpha / 2)};
        const Quat qb{std::cos(beta / 2), 0, std::sin(beta / 2), 0};
        const Quat qg{std::cos(gamma / 2), 0, 0, std::sin(gamma / 2)};
        Quat q = qmul(qmul(qa, qb), qg);
        if (q.w < -0.999999999999) continue;  // chart boundary, weight ~0 set
        nodes.push_back({params_from_q(q), wa * wbeta * wg});
      }
    }
  }
  return nodes;
}

}  // namespace

std::shared_ptr<CompactGroup> make_u1() { return std::make_shared<U1>(); }
std::shared_ptr<CompactGroup> make_su2() { return std::make_shared<SU2>(); }

// random elements via the shared Philox stream
GroupElement U1::random(uint64_t seed, uint64_t idx) const {
  double z0, z1;
  normal_pair(seed, idx, 0x75310000u, 0, z0, z1);
  return GroupElement(wrap_angle(std::atan2(z0, z1) * 2.0));
}

GroupElement SU2::random(uint64_t seed, uint64_t idx) const {
  double z0, z1, z2, z3;
  normal_pair(seed, idx, 0x75320000u, 0, z0, z1);
  normal_pair(seed, idx, 0x75320000u, 1, z2, z3);
  Quat q{z0, z1, z2, z3};
  const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  q.w /= n; q.x /= n; q.y /= n; q.z /= n;
  if (q.w < -0.999999999999) q.w = -q.w;
  return params_from_q(q);
}

// ---------------------------------------------------------------- irreps

namespace {

class U1Irrep final : public Irrep {
 public:
  explicit U1Irrep(int lambda) : lambda_(lambda) {
    CMat J(1);
    J.setZero(1);
    J(0, 0) = cplx(0.0, static_cast<double>(lambda));
    gens_ = {J};
  }
  int dim() const override { return 1; }
  std::string label() const override { return "u1:" + std::to_string(lambda_); }
  CMat matrix(const GroupElement& g) const override {
    CMat D(1);
    D(0, 0) = std::exp(cplx(0.0, lambda_ * g.a[0]));
    return D;
  }
  const std::vector<CMat>& generators() const override { return gens_; }

 private:
  int lambda_;
  std::vector<CMat> gens_;
};

class SU2Irrep final : public Irrep {
 public:
  explicit SU2Irrep(int twoj) : twoj_(twoj), d_(twoj + 1) {
    // spin matrices in the |j, m> basis, m = j..-j; J_mu = -i S_mu so that
    // D(a) = exp(a^mu J_mu) is unitary and [J_a, J_b] = eps_{abc} J_c
    const double j = twoj / 2.0;
    CMat Sz(d_), Sp(d_), Sm(d_);
    Sz.setZero(d_); Sp.setZero(d_); Sm.setZero(d_);
    for (int k = 0; k < d_; ++k) {
      const double m = j - k;
      Sz(k, k) = m;
      if (k + 1 < d_) {
        const double mp = j - (k + 1);
        const double amp = std::sqrt(j * (j + 1) - mp * (mp + 1));
        Sp(k, k + 1) = amp;  // S+ |j,mp> = amp |j,mp+1>
      }
      if (k > 0) {
        const double mm = j - (k - 1);
        const double amm = std::sqrt(j * (j + 1) - mm * (mm - 1));
        Sm(k, k - 1) = amm;
      }
    }
    CMat Sx(d_), Sy(d_);
    Sx.setZero(d_); Sy.setZero(d_);
    for (int a = 0; a < d_; ++a)
      for (int b = 0; b < d_; ++b) {
        Sx(a, b) = 0.5 * (Sp(a, b) + Sm(a, b));
        Sy(a, b) = cplx(0, -0.5) * (Sp(a, b) - Sm(a, b));
      }
    gens_.resize(3);
    gens_[0] = cscale(cplx(0, -1), Sx);
    gens_[1] = cscale(cplx(0, -1), Sy);
    gens_[2] = cscale(cplx(0, -1), Sz);
  }
  int dim() const override { return d_; }
  std::string label() const override { return "su2:j=" + std::to_string(twoj_) + "/2"; }
  CMat matrix(const GroupElement& g) const override {
    CMat X(d_);
    X.setZero(d_);
    for (int mu = 0; mu < 3; ++mu)
      for (int i = 0; i < d_ * d_; ++i)
        X.a[static_cast<size_t>(i)] += g.a[static_cast<size_t>(mu)] * gens_[static_cast<size_t>(mu)].a[static_cast<size_t>(i)];
    return cexpm(X);
  }
  const std::vector<CMat>& generators() const override { return gens_; }

 private:
  int twoj_, d_;
  std::vector<CMat> gens_;
};

}  // namespace

std::shared_ptr<Irrep> make_u1_irrep(int lambda) { return std::make_shared<U1Irrep>(lambda); }
std::shared_ptr<Irrep> make_su2_irrep(int twoj) { return std::make_shared<SU2Irrep>(twoj); }

CMat casimir(const Irrep& irrep, const Mat& gamma_inv) {
  const auto& J = irrep.generators();
  CMat C(irrep.dim());
  C.setZero(irrep.dim());
  for (int m = 0; m < gamma_inv.r; ++m)
    for (int n = 0; n < gamma_inv.c; ++n) {
      if (gamma_inv(m, n) == 0.0) continue;
      CMat JJ = cmul(J[static_cast<size_t>(m)], J[static_cast<size_t>(n)]);
      C = cadd(C, cscale(gamma_inv(m, n), JJ));
    }
  return C;
}

}  // namespace bundlediff
