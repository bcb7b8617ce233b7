#ifndef MMTOMO_PLOT_HPP
#define MMTOMO_PLOT_HPP

#include <filesystem>

namespace mmt::plot {

namespace fs = std::filesystem;

/// Histogram of height differences from a comparison report (JSON) as a
/// deterministic SVG with the truncation bounds marked.
void plot_histogram_svg(const fs::path& report_path, const fs::path& out_path);

/// Topmost-scatterer height raster from a scatterer artifact as a binary PPM
/// with a fixed color ramp.
void plot_height_raster_ppm(const fs::path& scatterer_base_path,
                            const fs::path& out_path);

}  // namespace mmt::plot

#endif
