#ifndef MMTOMO_VALIDATION_HPP
#define MMTOMO_VALIDATION_HPP

#include <map>
#include <string>
#include <vector>

#include "mmtomo/common.hpp"
#include "mmtomo/heightfusion.hpp"

namespace mmt::val {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct Shift3 {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

/// Per-object reference heights, or a dense reference point set that gets
/// co-registered and rasterized onto the footprints first.
struct ReferenceModel {
  enum class Kind { objects, points };
  Kind kind = Kind::objects;
  std::map<int, double> object_heights;  // id -> height (m)
  std::vector<Point3> points;
  std::string provenance = "simulator truth";
};

struct CoregistrationConfig {
  double max_shift = 20.0;       // m, bounded search
  int max_iterations = 60;
  double tolerance = 1e-4;       // m
  double huber_scale = 1.0;      // m, residual downweighting
  double overlap_threshold = 5.0;  // m, median NN distance accepted as overlap
  double coarse_step = 2.0;      // m, grid for the coarse search
};

/// Rigid 3-D translation (reference - estimated) minimizing a Huber
/// point-to-nearest-reference distance. Coarse bounded grid search followed
/// by robust ICP iterations; deterministic.
Shift3 coregister(const std::vector<Point3>& estimated,
                  const std::vector<Point3>& reference,
                  const CoregistrationConfig& config = {});

struct ComparisonReport {
  int compared = 0;   // objects with both estimate and reference
  int retained = 0;   // |diff| <= truncation
  int dropped = 0;
  int unestimated = 0;  // estimates flagged no-estimate, excluded from compare
  double within_1m_fraction = 0.0;  // over all compared (pre-truncation)
  double within_2m_fraction = 0.0;
  double std_retained = 0.0;  // sample std of retained diffs
  double truncation = 15.0;
  double bin_width = 0.5;
  std::vector<double> bin_edges;  // size bins + 1, spanning [-trunc, trunc]
  std::vector<int> histogram;     // retained diffs only
  std::vector<std::pair<int, double>> diffs;  // object id -> estimate - reference
};

/// Per-object height comparison with truncation, the within-1 m / within-2 m
/// fractions computed before truncation, and a fixed-width histogram.
ComparisonReport compare_heights(const std::vector<fusion::ObjectHeight>& estimates,
                                 const ReferenceModel& reference,
                                 double truncation, double bin_width = 0.5);

/// Object-based raster step for dense references: bins points into footprints
/// (x/y in metres, pixel spacings given) and robust-fuses a height per object.
ReferenceModel rasterize_reference(const std::vector<Point3>& points,
                                   const Image<int>& footprints,
                                   double pixel_spacing_x, double pixel_spacing_y,
                                   const fusion::RobustLossSpec& loss);

}  // namespace mmt::val

#endif
