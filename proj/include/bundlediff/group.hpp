#ifndef BUNDLEDIFF_GROUP_HPP
#define BUNDLEDIFF_GROUP_HPP

#include <memory>
#include <string>
#include <vector>

#include "bundlediff/smallmat.hpp"

namespace bundlediff {

// Group element in exponential (canonical) coordinates.
struct GroupElement {
  int m = 0;
  std::array<double, 3> a{};
  GroupElement() = default;
  explicit GroupElement(double theta) : m(1) { a[0] = theta; }
  GroupElement(double x, double y, double z) : m(3) { a = {x, y, z}; }
  double norm() const {
    double s = 0;
    for (int i = 0; i < m; ++i) s += a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
    return std::sqrt(s);
  }
};

struct HaarNode {
  GroupElement g;
  double w;
};

class CompactGroup {
 public:
  virtual ~CompactGroup() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool semisimple() const = 0;
  virtual GroupElement identity() const = 0;
  virtual GroupElement compose(const GroupElement& g, const GroupElement& h) const = 0;
  virtual GroupElement inverse(const GroupElement& g) const = 0;
  // structure constants c^a_{bg} of the Lie algebra basis; Killing fields of
  // the right action satisfy [K_b, K_g] = c^a_{bg} K_a (left-invariant frame).
  virtual double structure(int a, int b, int g) const = 0;
  // invariant frames in exponential coordinates: ubar appears in the bundle
  // metric (coordinate frame -> left-invariant frame), vbar = ubar^{-1};
  // det(ubar) is the Haar density.
  virtual void frames(const GroupElement& g, Mat& ubar, Mat& vbar, double& det_ubar) const = 0;
  // d vbar^al_be / d a^nu  -> T(al, be, nu)
  virtual void dvbar(const GroupElement& g, Ten3& d) const = 0;
  // d ubar^al_be / d a^nu  -> T(al, be, nu)
  virtual void dubar(const GroupElement& g, Ten3& d) const = 0;
  // quadrature with unit total mass, exact on matrix elements up to the
  // order's band limit
  virtual std::vector<HaarNode> haar(int order) const = 0;
  virtual GroupElement random(uint64_t seed, uint64_t idx) const = 0;
};

class Irrep {
 public:
  virtual ~Irrep() = default;
  virtual int dim() const = 0;
  virtual std::string label() const = 0;
  virtual CMat matrix(const GroupElement& g) const = 0;
  // J_mu = dD/da^mu at e
  virtual const std::vector<CMat>& generators() const = 0;
  CMat identity() const {
    CMat I;
    I.setIdentity(dim());
    return I;
  }
};

std::shared_ptr<CompactGroup> make_u1();
std::shared_ptr<CompactGroup> make_su2();

// U(1): integer winding lambda; SU(2): label = twoj (dimension twoj+1).
std::shared_ptr<Irrep> make_u1_irrep(int lambda);
std::shared_ptr<Irrep> make_su2_irrep(int twoj);

// Casimir sum_{mn} gam^{mn} J_m J_n for a constant bi-invariant gam.
CMat casimir(const Irrep& irrep, const Mat& gamma_inv);

}  // namespace bundlediff

#endif
