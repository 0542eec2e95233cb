#ifndef BUNDLEDIFF_MODELS_HPP
#define BUNDLEDIFF_MODELS_HPP

#include <memory>
#include <string>

#include "bundlediff/model.hpp"

namespace bundlediff {

struct ModelParams {
  double radius = 1.0;     // hopf / biinv factor radii
  double radius2 = 1.0;    // biinv second factor
  double box = 20.0;       // flat / warped periodic box side
  double warp_amp = 0.3;   // warped: f = 1 + amp sin(kx) cos(ky), k = 2*pi/box
  double vquad = 0.0;      // invariant potential strength (0 disables)
};

// name in {"flat", "hopf", "warped", "biinv"} or "file:<path>"
std::shared_ptr<BundleModel> make_model(const std::string& name, const ModelParams& p = {});

std::shared_ptr<BundleModel> make_flat_model(const ModelParams& p = {});
std::shared_ptr<BundleModel> make_hopf_model(const ModelParams& p = {});
std::shared_ptr<BundleModel> make_warped_model(const ModelParams& p = {});
std::shared_ptr<BundleModel> make_biinvariant_model(const ModelParams& p = {});
std::shared_ptr<BundleModel> make_file_model(const std::string& path);

}  // namespace bundlediff

#endif
