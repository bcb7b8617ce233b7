#ifndef MMTOMO_INVERSION_HPP
#define MMTOMO_INVERSION_HPP

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "mmtomo/common.hpp"
#include "mmtomo/geometry.hpp"
#include "mmtomo/nonlocal.hpp"
#include "mmtomo/raster.hpp"

namespace mmt::inv {

/// One pixel's filtered measurement vector plus its noise variance estimate
/// (per layer, from the ENL map).
struct MeasurementVector {
  Eigen::VectorXcd values;
  double noise_level = 0.0;
};

enum class ProfileMethod { svd, cs };

struct ProfileEstimate {
  Eigen::VectorXd profile;    // nonnegative power per grid sample
  Eigen::VectorXcd solution;  // complex solution before projection
  ProfileMethod method = ProfileMethod::svd;
  double residual_norm = 0.0;
  double objective = 0.0;  // cs only: final Eq-style objective value
  int iterations = 0;
  bool converged = true;
};

struct RegularizationSpec {
  double prior_variance = 1.0;     // diagonal of C_XX
  double condition_limit = 1e12;   // reject solves beyond this
};

struct Scatterer {
  double elevation = 0.0;  // m
  double power = 0.0;      // linear
};

/// Per-pixel discrete-scatterer estimate, model order K in {0, 1, 2}.
struct ScattererSet {
  int order = 0;
  std::array<Scatterer, 2> scatterers{};
  double score = 0.0;  // margin of the chosen order's criterion over the runner-up
  bool used_cs = false;
  bool converged = true;
  bool failed = false;
};

struct SelectionConfig {
  int max_order = 2;
  double penalty_multiplier = 1.0;
  double lambda_scale = 1.0;   // scales the default L1 weight
  double lambda_reg = -1.0;    // >= 0 overrides the noise-derived default
  double peak_fraction = 0.1;  // peak extraction threshold, fraction of max
  // A two-scatterer fit whose weaker component falls below this fraction of
  // the stronger one's power is demoted to a single scatterer: at high ENL
  // the structured residual of the filter exceeds the white-noise floor and
  // shows up as weak sidelobe-aligned secondaries.
  double min_power_fraction = 0.2;
  int cs_max_iterations = 5000;
  double cs_tolerance = 1e-8;

  void validate() const {
    require(max_order >= 0 && max_order <= 2, ErrorKind::config,
            "model order cap must be in {0, 1, 2}");
    require(penalty_multiplier > 0.0, ErrorKind::config,
            "penalty multiplier must be positive");
    require(peak_fraction >= 0.0 && peak_fraction < 1.0, ErrorKind::config,
            "peak fraction must be in [0, 1)");
    require(min_power_fraction >= 0.0 && min_power_fraction < 1.0,
            ErrorKind::config, "min power fraction must be in [0, 1)");
  }
};

/// Regularized linear estimate (R^H C^-1 R + C_XX^-1)^-1 R^H C^-1 g with
/// C = noise_level * I and C_XX = prior_variance * I, solved through the
/// N x N dual system and projected to nonnegative power by magnitude.
ProfileEstimate svd_estimate(const MeasurementVector& g,
                             const geometry::SensingMatrix& R,
                             const RegularizationSpec& prior);

/// L1-regularized least squares via accelerated proximal gradient with
/// monotone restart; the objective sequence is non-increasing.
ProfileEstimate cs_estimate(const MeasurementVector& g,
                            const geometry::SensingMatrix& R, double lambda_reg,
                            int max_iterations = 5000, double tolerance = 1e-8);

/// Matched-filter (beamforming) amplitude profile |r_l^H g| / N.
Eigen::VectorXd beamform_profile(const MeasurementVector& g,
                                 const geometry::SensingMatrix& R);

/// Indices of local maxima above frac * max, greedily separated by at least
/// min_separation_cells, strongest first.
std::vector<int> extract_peaks(const Eigen::VectorXd& profile, double frac,
                               int min_separation_cells, int max_peaks);

/// Two-stage order selection: beamforming + nonlinear least squares per
/// hypothesis, an information criterion over K in {0..max_order}, then a
/// compressive-sensing refinement for multi-scatterer pixels.
ScattererSet select_model(const MeasurementVector& g,
                          const geometry::SensingMatrix& R,
                          const geometry::ElevationGrid& grid,
                          const SelectionConfig& config);

using ScattererRaster = Image<ScattererSet>;

struct InversionReport {
  std::array<int, 3> order_counts{0, 0, 0};
  int cs_pixels = 0;
  int cs_nonconverged = 0;
  int failed_pixels = 0;
  std::vector<std::string> errors;  // first few messages with coordinates
};

/// Per-pixel select_model over a filtered stack. Per-pixel failures are
/// collected in the report, never fatal. Deterministic for any worker count.
ScattererRaster invert_stack(const nonlocal::FilteredStack& filtered,
                             const geometry::ElevationGrid& grid,
                             const SelectionConfig& config, int workers = 1,
                             InversionReport* report = nullptr);

}  // namespace mmt::inv

#endif
