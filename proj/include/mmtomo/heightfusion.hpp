#ifndef MMTOMO_HEIGHTFUSION_HPP
#define MMTOMO_HEIGHTFUSION_HPP

#include <vector>

#include "mmtomo/common.hpp"
#include "mmtomo/inversion.hpp"
#include "mmtomo/raster.hpp"

namespace mmt::fusion {

enum class LossKind { squared, huber, tukey };

struct RobustLossSpec {
  LossKind kind = LossKind::huber;
  double scale = 2.0;  // m
  int max_iterations = 100;
  double tolerance = 1e-6;  // m

  void validate() const {
    require(scale > 0.0, ErrorKind::config, "loss scale must be positive");
    require(max_iterations >= 1, ErrorKind::config, "need at least one iteration");
    require(tolerance > 0.0, ErrorKind::config, "tolerance must be positive");
  }
};

struct HeightSample {
  int x = -1;
  int y = -1;
  double value = 0.0;   // m
  int source_order = 0; // model order of the contributing pixel
  double weight = 0.0;  // final IRLS weight, filled by robust_fuse
};

struct ObjectHeight {
  int object_id = 0;
  double height = 0.0;  // m
  int sample_count = 0;
  double robust_std = 0.0;  // normalized MAD about the fused value
  bool converged = true;
  bool estimated = true;  // false: no usable samples for this object
};

struct FusionConfig {
  RobustLossSpec loss;
  double incidence_deg = 40.0;
  int ground_ring = 4;  // px searched around a footprint for local ground
};

/// Iteratively reweighted location estimate minimizing sum rho(sample - s),
/// weights w(x) = rho'(x)/x. Median start; median fallback (flagged) when a
/// redescending loss zeroes every weight. Final weights are written back
/// into the samples.
ObjectHeight robust_fuse(std::vector<HeightSample>& samples,
                         const RobustLossSpec& loss);

/// Loss value, for objective-descent checks and tests.
double loss_value(LossKind kind, double scale, double x);

/// Per labeled footprint: topmost scatterer elevation of each member pixel,
/// local ground from a ring around the footprint, conversion to height via
/// sin(incidence), then robust fusion.
std::vector<ObjectHeight> fuse_objects(const inv::ScattererRaster& scatterers,
                                       const Image<int>& footprints,
                                       const FusionConfig& config);

}  // namespace mmt::fusion

#endif
