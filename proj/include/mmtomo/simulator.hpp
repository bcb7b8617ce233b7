#ifndef MMTOMO_SIMULATOR_HPP
#define MMTOMO_SIMULATOR_HPP

#include <cstdint>
#include <vector>

#include "mmtomo/common.hpp"
#include "mmtomo/geometry.hpp"
#include "mmtomo/raster.hpp"

namespace mmt::sim {

/// Ground-truth scatterer inside one resolution cell. The phase is the
/// deterministic reflectivity phase used for point-scatterer pixels; it is
/// drawn once per scene seed.
struct TruthScatterer {
  double elevation = 0.0;  // m
  double power = 0.0;      // linear sigma0
  double phase = 0.0;      // rad
};

struct PixelTruth {
  std::vector<TruthScatterer> scatterers;  // K in {0,1,2}
  bool point_scatterer = false;            // deterministic reflectivity if true
};

/// Axis-aligned building footprint; `x` grows toward far range (the sensor
/// looks from the low-x side).
struct Building {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double height_m = 0.0;
  double roof_power = 1.0;  // <= 0 means "draw from the configured range"
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  std::vector<Building> buildings;  // explicit placements (tests, demos)
  int building_count = 0;           // random placements when list is empty
  double height_min_m = 5.0;
  double height_max_m = 60.0;
  int side_min = 8;
  int side_max = 20;
  int margin = 2;            // clear border and inter-building gap, px
  int layover_depth = 2;     // px of ground+roof mixture on the near-range side
  double ground_power = 1.0;
  double roof_power_min = 0.5;
  double roof_power_max = 3.0;
  bool point_scatterers = false;
  double incidence_deg = 40.0;  // maps building height to elevation
  double pixel_spacing_range = 1.2;
  double pixel_spacing_azimuth = 3.3;
};

struct ObjectTruth {
  int id = 0;
  double height_m = 0.0;
};

/// Synthetic urban scene: per-pixel scatterer truth plus building-footprint
/// labels (0 = ground).
class Scene {
public:
  Scene(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  PixelTruth& truth(int x, int y) { return truth_[index(x, y)]; }
  const PixelTruth& truth(int x, int y) const { return truth_[index(x, y)]; }

  Image<int>& footprints() { return footprints_; }
  const Image<int>& footprints() const { return footprints_; }

  std::vector<ObjectTruth>& objects() { return objects_; }
  const std::vector<ObjectTruth>& objects() const { return objects_; }

  double incidence_deg = 40.0;
  double pixel_spacing_range = 1.2;
  double pixel_spacing_azimuth = 3.3;

  /// Power nonnegativity, elevation range, and footprint connectivity
  /// (flood fill per label). Throws on violation.
  void validate(double elevation_min, double elevation_max) const;

  double mean_signal_power() const;  // over pixels with K >= 1

private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_;
  int height_;
  std::vector<PixelTruth> truth_;
  Image<int> footprints_;
  std::vector<ObjectTruth> objects_;
};

struct NoiseSpec {
  bool enabled = true;
  double snr_db = 3.0;  // mean signal power over per-pixel noise variance
};

struct ComplexImagePair {
  Image<cplxf> master;
  Image<cplxf> slave;
};

struct StackLayer {
  Image<cplxf> interferogram;  // slave * conj(master), or its filtered mean
  Image<float> intensity1;     // |master|^2 side
  Image<float> intensity2;     // |slave|^2 side
};

/// N single-look bistatic interferograms plus the two intensity channels.
class InterferogramStack {
public:
  InterferogramStack(std::vector<StackLayer> layers,
                     geometry::AcquisitionGeometry geometry);

  int count() const { return static_cast<int>(layers_.size()); }
  int width() const { return layers_.front().interferogram.width(); }
  int height() const { return layers_.front().interferogram.height(); }
  const StackLayer& layer(int n) const { return layers_[n]; }
  StackLayer& layer(int n) { return layers_[n]; }
  const std::vector<StackLayer>& layers() const { return layers_; }
  const geometry::AcquisitionGeometry& geometry() const { return geometry_; }

  double pixel_spacing_range = 1.2;
  double pixel_spacing_azimuth = 3.3;
  double incidence_deg = 40.0;

private:
  std::vector<StackLayer> layers_;
  geometry::AcquisitionGeometry geometry_;
};

struct SimulationResult {
  std::vector<ComplexImagePair> pairs;
  InterferogramStack stack;
};

/// Coherent spectrum sample at an absolute sensor position: the sum of
/// a_i * exp(-j k(position) s_i) with a_i = sqrt(power) * exp(j phase).
cplx sample_spectrum(const std::vector<TruthScatterer>& scatterers,
                     double position, const geometry::AcquisitionGeometry& geometry);

Scene make_urban_scene(const SceneSpec& spec, std::uint64_t seed);

/// Full bistatic stack synthesis: master sampled at b_n, slave at
/// b_n + delta_b_n; speckle redrawn per pair for distributed pixels,
/// deterministic reflectivity for point pixels; additive circular Gaussian
/// noise per image at the configured SNR. Deterministic given the seed for
/// any worker count.
SimulationResult simulate_stack(const Scene& scene,
                                const geometry::AcquisitionGeometry& geometry,
                                const NoiseSpec& noise, std::uint64_t seed,
                                double elevation_min, double elevation_max,
                                int workers = 1);

}  // namespace mmt::sim

#endif
