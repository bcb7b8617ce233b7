#ifndef MMTOMO_NONLOCAL_HPP
#define MMTOMO_NONLOCAL_HPP

#include <vector>

#include "mmtomo/common.hpp"
#include "mmtomo/raster.hpp"
#include "mmtomo/simulator.hpp"

namespace mmt::nonlocal {

/// Per-pixel parameter triple estimated by the weighted ML step.
struct FilterParams {
  double psi = 0.0;       // interferometric phase, (-pi, pi]
  double mu = 0.0;        // mean intensity (average of the two channels)
  double sigma_sq = 0.0;  // weighted variance of the interferogram samples
};

struct FilterConfig {
  int patch_radius = 3;    // 7x7 patches
  int search_radius = 10;  // 21x21 search window
  double bandwidth = 2.5;  // weight = exp(-dissimilarity / bandwidth)
  double phase_weight = 0.5;
  int iterations = 3;
  // Refinement passes (iteration >= 2) recompute weights on the previous
  // pass's low-variance output, where a small patch and a tight bandwidth
  // separate regions that single-look statistics cannot.
  int refine_patch_radius = 0;
  double refine_bandwidth = 0.5;

  void validate() const {
    require(patch_radius >= 0, ErrorKind::config, "patch radius must be >= 0");
    require(search_radius >= 1, ErrorKind::config, "search radius must be >= 1");
    require(bandwidth > 0.0, ErrorKind::config, "bandwidth must be positive");
    require(phase_weight >= 0.0, ErrorKind::config, "phase weight must be >= 0");
    require(iterations >= 1, ErrorKind::config, "iteration count must be >= 1");
    require(refine_patch_radius >= 0, ErrorKind::config,
            "refine patch radius must be >= 0");
    require(refine_bandwidth > 0.0, ErrorKind::config,
            "refine bandwidth must be positive");
  }
};

struct WeightEntry {
  int x = 0;
  int y = 0;
  double w = 0.0;
};

/// Sparse weights for one target pixel over its clipped search window.
class WeightMap {
public:
  WeightMap(int cx, int cy, int search_radius, int patch_radius,
            std::vector<WeightEntry> entries);

  int center_x() const { return cx_; }
  int center_y() const { return cy_; }
  int search_radius() const { return search_radius_; }
  int patch_radius() const { return patch_radius_; }
  const std::vector<WeightEntry>& entries() const { return entries_; }

  double sum() const;
  double sum_squares() const;
  double enl() const;  // (sum w)^2 / sum w^2

private:
  int cx_, cy_, search_radius_, patch_radius_;
  std::vector<WeightEntry> entries_;
};

class FilteredStack {
public:
  FilteredStack(sim::InterferogramStack stack, Image<float> enl);

  const sim::InterferogramStack& stack() const { return stack_; }
  sim::InterferogramStack& stack() { return stack_; }
  const Image<float>& enl() const { return enl_; }
  Image<float>& enl() { return enl_; }

private:
  sim::InterferogramStack stack_;
  Image<float> enl_;
};

/// Patch dissimilarity between the patches centered at c and s for one layer:
/// mean over patch offsets of a pointwise likelihood-ratio statistic on the
/// (I1, I2, phase) triple. Symmetric, zero for identical patches. Patches are
/// mirror-padded at image borders.
double patch_similarity(const sim::InterferogramStack& stack, int layer, int cx,
                        int cy, int sx, int sy, int patch_radius,
                        double phase_weight = 0.5);

/// exp(-D/h) weights over the search window around (cx, cy), D summed over
/// layers. The self weight is always 1, the maximum.
WeightMap compute_weights(const sim::InterferogramStack& stack, int cx, int cy,
                          const FilterConfig& config);

struct PixelEstimate {
  cplx interferogram{0.0, 0.0};
  double intensity1 = 0.0;
  double intensity2 = 0.0;
  double enl = 1.0;
};

/// Weighted ML estimate for one pixel/layer under the single-look complex
/// Gaussian pair model (closed form: weighted sample means).
PixelEstimate apply_weights(const sim::InterferogramStack& stack, int layer,
                            const WeightMap& weights);

FilterParams estimate_params(const sim::InterferogramStack& stack, int layer,
                             const WeightMap& weights);

/// Whole-stack weighted-ML filter. Weights are computed once from all layers
/// jointly and applied to every layer. Deterministic for any worker count.
FilteredStack wmle_filter(const sim::InterferogramStack& stack,
                          const FilterConfig& config, int workers = 1);

}  // namespace mmt::nonlocal

#endif
