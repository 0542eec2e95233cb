#include "bundlediff/models.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bundlediff/rng.hpp"
#include <nlohmann/json.hpp>

namespace bundlediff {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// fiber coordinate is the last slot, chi = that coordinate, K = d/dtheta
class U1AdaptedModel : public BundleModel {
 public:
  U1AdaptedModel() : grp_(make_u1()) {}
  int gdim() const override { return 1; }
  const CompactGroup& group() const override { return *grp_; }
  void killing(int, const Vec&, Mat& K) const override {
    K.setZero(dim(), 1);
    K(dim() - 1, 0) = 1.0;
  }
  void dkilling(int, const Vec&, Ten3& dK) const override { dK.setZero(dim(), 1, dim()); }
  void gauge(int, const Vec& Q, Vec& chi) const override {
    chi.setZero(1);
    chi[0] = Q[dim() - 1];
  }
  void dgauge(int, const Vec&, Mat& dchi) const override {
    dchi.setZero(1, dim());
    dchi(0, dim() - 1) = 1.0;
  }
  void d2gauge(int, const Vec&, Ten3& dd) const override { dd.setZero(1, dim(), dim()); }

 protected:
  std::shared_ptr<CompactGroup> grp_;
};

// ------------------------------------------------------------------ flat

class FlatModel final : public U1AdaptedModel {
 public:
  explicit FlatModel(const ModelParams& p) : L_(p.box), vq_(p.vquad) {}
  std::string name() const override { return "flat"; }
  int dim() const override { return 3; }
  bool has_analytic_derivatives() const override { return true; }
  void metric(int, const Vec&, Mat& G) const override { G.setIdentity(3); }
  void dmetric(int, const Vec&, Ten3& dG) const override { dG.setZero(3, 3, 3); }
  double potential(int, const Vec& Q) const override {
    if (vq_ == 0.0) return 0.0;
    const double k = 2 * kPi / L_;
    return vq_ * std::cos(k * Q[0]) * std::cos(k * Q[1]);
  }
  void normalize_base(int, Vec& Q) const override {
    for (int i = 0; i < 2; ++i) {
      Q[i] = std::fmod(Q[i] + 0.5 * L_, L_);
      if (Q[i] < 0) Q[i] += L_;
      Q[i] -= 0.5 * L_;
    }
  }
  bool jtilde_fast(int, const Vec&, double& jt) const override {
    jt = 0.0;
    return true;
  }
  SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const override {
    double z0, z1;
    normal_pair(seed, idx, 0xF1A7u, 0, z0, z1);
    SigmaPoint s;
    s.q.setZero(3);
    s.q[0] = 0.15 * L_ * std::tanh(z0);
    s.q[1] = 0.15 * L_ * std::tanh(z1);
    return s;
  }
  std::map<std::string, double> known_constants() const override {
    return {{"R_P", 0.0}, {"HR", 0.0}, {"R_G", 0.0}, {"F2", 0.0}, {"jnorm2", 0.0}, {"Jtilde", 0.0}};
  }
  double chart_extent(int) const override { return 0.5 * L_; }
  bool periodic() const override { return true; }

 private:
  double L_, vq_;
};

// ------------------------------------------------------------------ hopf

// radius-r S^3 fibered over S^2(r/2); two stereographic charts (w and 1/w)
// with fiber shift arg(w) at the seam.
class HopfModel final : public U1AdaptedModel {
 public:
  explicit HopfModel(const ModelParams& p) : r_(p.radius), vq_(p.vquad) {}
  std::string name() const override { return "hopf"; }
  int dim() const override { return 3; }
  int charts() const override { return 2; }
  bool has_analytic_derivatives() const override { return true; }

  void metric(int, const Vec& Q, Mat& G) const override {
    const double u = Q[0], v = Q[1];
    const double rho2 = 1 + u * u + v * v;
    const double Au = -v / rho2, Av = u / rho2;
    const double gb = 1.0 / (rho2 * rho2);
    G.setZero(3, 3);
    G(0, 0) = gb + Au * Au;
    G(0, 1) = G(1, 0) = Au * Av;
    G(1, 1) = gb + Av * Av;
    G(0, 2) = G(2, 0) = Au;
    G(1, 2) = G(2, 1) = Av;
    G(2, 2) = 1.0;
    const double r2 = r_ * r_;
    for (int i = 0; i < 9; ++i) G.a[static_cast<size_t>(i)] *= r2;
  }
  void dmetric(int, const Vec& Q, Ten3& dG) const override {
    const double u = Q[0], v = Q[1];
    const double rho2 = 1 + u * u + v * v;
    const double Au = -v / rho2, Av = u / rho2;
    const double r4 = rho2 * rho2;
    double dAu[2], dAv[2], drho[2];
    drho[0] = 2 * u;
    drho[1] = 2 * v;
    dAu[0] = 2 * u * v / r4;
    dAu[1] = (-rho2 + 2 * v * v) / r4;
    dAv[0] = (rho2 - 2 * u * u) / r4;
    dAv[1] = -2 * u * v / r4;
    const double dgb = -2.0 / (rho2 * rho2 * rho2);
    dG.setZero(3, 3, 3);
    for (int c = 0; c < 2; ++c) {
      dG(0, 0, c) = dgb * drho[c] + 2 * Au * dAu[c];
      dG(1, 1, c) = dgb * drho[c] + 2 * Av * dAv[c];
      dG(0, 1, c) = dG(1, 0, c) = dAu[c] * Av + Au * dAv[c];
      dG(0, 2, c) = dG(2, 0, c) = dAu[c];
      dG(1, 2, c) = dG(2, 1, c) = dAv[c];
    }
    const double r2 = r_ * r_;
    for (size_t i = 0; i < 27; ++i) dG.a[i] *= r2;
  }
  double potential(int chart, const Vec& Q) const override {
    if (vq_ == 0.0) return 0.0;
    // invariant height function n3 on the base sphere
    const double w2 = Q[0] * Q[0] + Q[1] * Q[1];
    double n3 = (w2 - 1) / (w2 + 1);
    if (chart == 1) n3 = -n3;
    return vq_ * n3;
  }
  bool needs_switch(int, const Vec& Q) const override {
    return Q[0] * Q[0] + Q[1] * Q[1] > 4.0;
  }
  SwitchResult do_switch(int chart, const Vec& Q) const override {
    SwitchResult s;
    s.switched = true;
    s.chart = chart ^ 1;
    const double u = Q[0], v = Q[1];
    const double w2 = u * u + v * v;
    s.q = Q;
    s.q[0] = u / w2;
    s.q[1] = -v / w2;
    s.shift = GroupElement(std::atan2(v, u));
    return s;
  }
  bool jtilde_fast(int, const Vec&, double& jt) const override {
    jt = 0.0;
    return true;
  }
  SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const override {
    // uniform on the base sphere via a random quaternion-free construction,
    // mapped into whichever chart keeps |w| <= 1 (so the report never sits on
    // a chart seam)
    double z0, z1, z2, z3;
    normal_pair(seed, idx, 0x40F0u, 0, z0, z1);
    normal_pair(seed, idx, 0x40F0u, 1, z2, z3);
    double x = z0, y = z1, z = z2;
    const double nn = std::sqrt(x * x + y * y + z * z) + 1e-300;
    x /= nn; y /= nn; z /= nn;
    SigmaPoint s;
    s.q.setZero(3);
    // chart 0: w = (x + i y)/(1 - z); chart 1 mirrors z -> -z
    if (z <= 0) {
      s.chart = 0;
      s.q[0] = x / (1 - z);
      s.q[1] = y / (1 - z);
    } else {
      s.chart = 1;
      s.q[0] = x / (1 + z);
      s.q[1] = -y / (1 + z);
    }
    return s;
  }
  std::map<std::string, double> known_constants() const override {
    const double r2 = r_ * r_;
    return {{"R_P", -6.0 / r2}, {"HR", -8.0 / r2}, {"R_G", 0.0},
            {"F2", 8.0 / r2},   {"jnorm2", 0.0},   {"Jtilde", 0.0}};
  }
  double chart_extent(int) const override { return 2.2; }

 private:
  double r_, vq_;
};

// ------------------------------------------------------------------ warped

// R^2 x_f U(1) on a periodic box, f = 1 + amp sin(kx) cos(ky): the one model
// with curved fibers (j_II != 0), so the Girsanov weight is exercised for real
class WarpedModel final : public U1AdaptedModel {
 public:
  explicit WarpedModel(const ModelParams& p)
      : L_(p.box), amp_(p.warp_amp), k_(2 * kPi / p.box), vq_(p.vquad) {}
  std::string name() const override { return "warped"; }
  int dim() const override { return 3; }
  bool has_analytic_derivatives() const override { return true; }

  double f(const Vec& Q) const { return 1.0 + amp_ * std::sin(k_ * Q[0]) * std::cos(k_ * Q[1]); }
  double fx(const Vec& Q) const { return amp_ * k_ * std::cos(k_ * Q[0]) * std::cos(k_ * Q[1]); }
  double fy(const Vec& Q) const { return -amp_ * k_ * std::sin(k_ * Q[0]) * std::sin(k_ * Q[1]); }
  double lap_f(const Vec& Q) const { return -2 * k_ * k_ * (f(Q) - 1.0); }

  void metric(int, const Vec& Q, Mat& G) const override {
    G.setIdentity(3);
    const double ff = f(Q);
    G(2, 2) = ff * ff;
  }
  void dmetric(int, const Vec& Q, Ten3& dG) const override {
    dG.setZero(3, 3, 3);
    const double ff = f(Q);
    dG(2, 2, 0) = 2 * ff * fx(Q);
    dG(2, 2, 1) = 2 * ff * fy(Q);
  }
  double potential(int, const Vec& Q) const override {
    if (vq_ == 0.0) return 0.0;
    return vq_ * std::cos(k_ * Q[0]) * std::cos(k_ * Q[1]);
  }
  void normalize_base(int, Vec& Q) const override {
    for (int i = 0; i < 2; ++i) {
      Q[i] = std::fmod(Q[i] + 0.5 * L_, L_);
      if (Q[i] < 0) Q[i] += L_;
      Q[i] -= 0.5 * L_;
    }
  }
  bool jtilde_fast(int, const Vec& Q, double& jt) const override {
    const double ff = f(Q), gx = fx(Q), gy = fy(Q);
    const double grad2 = gx * gx + gy * gy;
    const double lap_lnf = lap_f(Q) / ff - grad2 / (ff * ff);
    jt = 2 * lap_lnf + grad2 / (ff * ff);
    return true;
  }
  SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const override {
    double z0, z1;
    normal_pair(seed, idx, 0xAE2Fu, 0, z0, z1);
    SigmaPoint s;
    s.q.setZero(3);
    s.q[0] = 0.25 * L_ * std::tanh(z0);
    s.q[1] = 0.25 * L_ * std::tanh(z1);
    return s;
  }
  double chart_extent(int) const override { return 0.5 * L_; }
  bool periodic() const override { return true; }

 private:
  double L_, amp_, k_, vq_;
};

// ------------------------------------------------------------------ biinv

// S^3(r1) x SU(2)(r2) with the right action on the second factor. The gauge
// slice z = 0 keeps Phi = identity; a single exponential chart covers the
// geometry checks (the model is shipped for pointwise verification, not for
// long Monte-Carlo runs).
class BiInvariantModel final : public BundleModel {
 public:
  explicit BiInvariantModel(const ModelParams& p)
      : grp_(make_su2()), r1_(p.radius), r2_(p.radius2) {}
  std::string name() const override { return "biinv"; }
  int dim() const override { return 6; }
  int gdim() const override { return 3; }
  const CompactGroup& group() const override { return *grp_; }
  bool has_analytic_derivatives() const override { return true; }

  // bi-invariant metric block r^2 ubar(z)^T ubar(z)
  static void block_metric(const CompactGroup& g, const double* z, double r, Mat& out) {
    GroupElement a(z[0], z[1], z[2]);
    Mat ub, vb;
    double det;
    g.frames(a, ub, vb, det);
    Mat ut = transpose(ub);
    out = matmul(ut, ub);
    for (int i = 0; i < 9; ++i) out.a[static_cast<size_t>(i)] *= r * r;
  }

  void metric(int, const Vec& Q, Mat& G) const override {
    Mat b1, b2;
    double x[3] = {Q[0], Q[1], Q[2]};
    double z[3] = {Q[3], Q[4], Q[5]};
    block_metric(*grp_, x, r1_, b1);
    block_metric(*grp_, z, r2_, b2);
    G.setZero(6, 6);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        G(i, j) = b1(i, j);
        G(i + 3, j + 3) = b2(i, j);
      }
  }
  void dmetric(int, const Vec& Q, Ten3& dG) const override {
    // d(r^2 ubar^T ubar) via the analytic frame derivative, blockwise
    dG.setZero(6, 6, 6);
    for (int blk = 0; blk < 2; ++blk) {
      const double r = blk == 0 ? r1_ : r2_;
      GroupElement a(Q[3 * blk], Q[3 * blk + 1], Q[3 * blk + 2]);
      Mat ub, vb;
      double det;
      grp_->frames(a, ub, vb, det);
      Ten3 du;
      grp_->dubar(a, du);
      for (int nu = 0; nu < 3; ++nu)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += du(k, i, nu) * ub(k, j) + ub(k, i) * du(k, j, nu);
            dG(3 * blk + i, 3 * blk + j, 3 * blk + nu) = r * r * s;
          }
    }
  }
  void killing(int, const Vec& Q, Mat& K) const override {
    // left-invariant frame on the second factor: K^al_mu(z) = vbar(z)^al_mu
    GroupElement a(Q[3], Q[4], Q[5]);
    Mat ub, vb;
    double det;
    grp_->frames(a, ub, vb, det);
    K.setZero(6, 3);
    for (int al = 0; al < 3; ++al)
      for (int mu = 0; mu < 3; ++mu) K(al + 3, mu) = vb(al, mu);
  }
  void dkilling(int, const Vec& Q, Ten3& dK) const override {
    // K-block = vbar(z); d vbar analytic
    GroupElement a(Q[3], Q[4], Q[5]);
    Ten3 dv;
    grp_->dvbar(a, dv);
    dK.setZero(6, 3, 6);
    for (int al = 0; al < 3; ++al)
      for (int mu = 0; mu < 3; ++mu)
        for (int nu = 0; nu < 3; ++nu) dK(al + 3, mu, 3 + nu) = dv(al, mu, nu);
  }
  void gauge(int, const Vec& Q, Vec& chi) const override {
    chi.setZero(3);
    for (int a = 0; a < 3; ++a) chi[a] = Q[a + 3];
  }
  void dgauge(int, const Vec&, Mat& dchi) const override {
    dchi.setZero(3, 6);
    for (int a = 0; a < 3; ++a) dchi(a, a + 3) = 1.0;
  }
  void d2gauge(int, const Vec&, Ten3& dd) const override { dd.setZero(3, 6, 6); }
  SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const override {
    double z0, z1, z2, z3;
    normal_pair(seed, idx, 0xB114u, 0, z0, z1);
    normal_pair(seed, idx, 0xB114u, 1, z2, z3);
    SigmaPoint s;
    s.q.setZero(6);
    s.q[0] = 1.1 * std::tanh(z0);
    s.q[1] = 1.1 * std::tanh(z1);
    s.q[2] = 1.1 * std::tanh(z2);
    return s;
  }
  std::map<std::string, double> known_constants() const override {
    return {{"Jtilde", 0.0}, {"F2", 0.0}, {"jnorm2", 0.0}};
  }
  double chart_extent(int) const override { return 1.5; }

 private:
  std::shared_ptr<CompactGroup> grp_;
  double r1_, r2_;
};

// ------------------------------------------------------------------ file

// Coefficient-table model: metric/killing entries are sums of
// coeff * prod(x_i^{p_i}) * prod(sin/cos(freq * x_axis)) terms; U(1) fiber in
// the last coordinate; derivatives via central differences.
struct TermTable {
  struct Term {
    double coeff = 0;
    std::vector<int> powers;                       // per coordinate
    std::vector<std::array<double, 3>> trig;       // {axis, 0=sin/1=cos, freq}
  };
  std::vector<Term> terms;
  double eval(const Vec& Q, int n) const {
    double s = 0;
    for (const auto& t : terms) {
      double v = t.coeff;
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < (i < static_cast<int>(t.powers.size()) ? t.powers[static_cast<size_t>(i)] : 0); ++p) v *= Q[i];
      for (const auto& tr : t.trig) {
        const double arg = tr[2] * Q[static_cast<int>(tr[0])];
        v *= (tr[1] == 0.0) ? std::sin(arg) : std::cos(arg);
      }
      s += v;
    }
    return s;
  }
};

class FileModel final : public U1AdaptedModel {
 public:
  explicit FileModel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("file model: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("group", "u1") != std::string("u1"))
      throw std::runtime_error("file model: only U(1) fiber models are supported");
    n_ = j.at("dim").get<int>();
    if (n_ < 2 || n_ > kMaxTen) throw std::runtime_error("file model: bad dim");
    gee_.resize(static_cast<size_t>(n_ * n_));
    for (const auto& e : j.at("metric")) {
      const int a = e.at("i").get<int>(), b = e.at("j").get<int>();
      TermTable tt;
      for (const auto& te : e.at("terms")) {
        TermTable::Term t;
        t.coeff = te.at("coeff").get<double>();
        if (te.contains("powers")) t.powers = te.at("powers").get<std::vector<int>>();
        if (te.contains("trig"))
          for (const auto& tr : te.at("trig"))
            t.trig.push_back({tr.at("axis").get<double>(),
                              tr.at("fn").get<std::string>() == "cos" ? 1.0 : 0.0,
                              tr.at("freq").get<double>()});
        tt.terms.push_back(std::move(t));
      }
      gee_[static_cast<size_t>(a * n_ + b)] = tt;
      gee_[static_cast<size_t>(b * n_ + a)] = tt;
    }
    name_ = j.value("name", std::string("file"));
  }
  std::string name() const override { return name_; }
  int dim() const override { return n_; }
  bool has_analytic_derivatives() const override { return false; }
  void metric(int, const Vec& Q, Mat& G) const override {
    G.setZero(n_, n_);
    for (int a = 0; a < n_; ++a)
      for (int b = 0; b < n_; ++b) G(a, b) = gee_[static_cast<size_t>(a * n_ + b)].eval(Q, n_);
  }
  void dmetric(int chart, const Vec& Q, Ten3& dG) const override {
    fd_dmetric(*this, chart, Q, dG);
  }
  SigmaPoint random_sigma_point(uint64_t seed, uint64_t idx) const override {
    double z0, z1;
    normal_pair(seed, idx, 0xF17Eu, 0, z0, z1);
    SigmaPoint s;
    s.q.setZero(n_);
    s.q[0] = std::tanh(z0);
    s.q[1] = std::tanh(z1);
    return s;
  }

 private:
  int n_ = 3;
  std::string name_;
  std::vector<TermTable> gee_;
};

}  // namespace

std::shared_ptr<BundleModel> make_flat_model(const ModelParams& p) {
  return std::make_shared<FlatModel>(p);
}
std::shared_ptr<BundleModel> make_hopf_model(const ModelParams& p) {
  return std::make_shared<HopfModel>(p);
}
std::shared_ptr<BundleModel> make_warped_model(const ModelParams& p) {
  return std::make_shared<WarpedModel>(p);
}
std::shared_ptr<BundleModel> make_biinvariant_model(const ModelParams& p) {
  return std::make_shared<BiInvariantModel>(p);
}
std::shared_ptr<BundleModel> make_file_model(const std::string& path) {
  return std::make_shared<FileModel>(path);
}

std::shared_ptr<BundleModel> make_model(const std::string& name, const ModelParams& p) {
  if (name == "flat") return make_flat_model(p);
  if (name == "hopf") return make_hopf_model(p);
  if (name == "warped") return make_warped_model(p);
  if (name == "biinv") return make_biinvariant_model(p);
  if (name.rfind("file:", 0) == 0) return make_file_model(name.substr(5));
  throw std::runtime_error("unknown model '" + name + "'");
}

}  // namespace bundlediff
