#ifndef MMTOMO_CONFIG_HPP
#define MMTOMO_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mmtomo/geometry.hpp"
#include "mmtomo/heightfusion.hpp"
#include "mmtomo/inversion.hpp"
#include "mmtomo/nonlocal.hpp"
#include "mmtomo/simulator.hpp"

namespace mmt::config {

/// Parsed pipeline configuration. The file format is INI-style: `[section]`
/// headers, `key = value` lines, `#`/`;` comments. Unknown sections or keys
/// are rejected.
struct PipelineConfig {
  // [geometry]
  double wavelength = 0.031;
  double slant_range = 600000.0;
  double incidence_deg = 40.0;
  std::vector<geometry::Acquisition> acquisitions;  // default set when empty

  // [scene]
  sim::SceneSpec scene;

  // [noise]
  sim::NoiseSpec noise;

  // [filter]
  nonlocal::FilterConfig filter;

  // [inversion]
  double elevation_min = -15.0;
  double elevation_max = 110.0;
  double grid_spacing = 0.0;  // 0: rayleigh resolution / 16
  inv::SelectionConfig selection;
  double prior_variance = 1.0;
  double condition_limit = 1e12;
  std::uint64_t matrix_cap = geometry::kDefaultMatrixCap;

  // [fusion]
  fusion::RobustLossSpec loss;
  double loss_scale_override = 0.0;  // 0: 2 x grid spacing
  int ground_ring = 4;

  // [validation]
  double truncation = 15.0;
  double bin_width = 0.5;
  std::string reference_path;  // empty: <out>/truth.json
  double coregister_max_shift = 20.0;

  // [run]
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = "out";

  geometry::AcquisitionGeometry make_geometry() const;
  geometry::ElevationGrid make_grid() const;
  fusion::RobustLossSpec effective_loss() const;

  void validate() const;

  /// Canonical serialization of every data-affecting value (worker count and
  /// paths excluded). Identical configs hash identically.
  std::string canonical_text() const;
  std::string hash() const;
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config(const std::string& path);

}  // namespace mmt::config

#endif
