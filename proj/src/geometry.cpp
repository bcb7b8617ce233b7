#include "mmtomo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mmtomo/hash.hpp"

namespace mmt::geometry {

AcquisitionGeometry::AcquisitionGeometry(double wavelength, double slant_range,
                                         std::vector<Acquisition> acquisitions)
    : wavelength_(wavelength),
      slant_range_(slant_range),
      acquisitions_(std::move(acquisitions)) {
  require(wavelength_ > 0.0, ErrorKind::validation, "wavelength must be positive");
  require(slant_range_ > 0.0, ErrorKind::validation, "slant range must be positive");
  require(!acquisitions_.empty(), ErrorKind::validation,
          "at least one acquisition required");
  for (const auto& a : acquisitions_) {
    require(std::isfinite(a.b_master) && std::isfinite(a.delta_b),
            ErrorKind::validation, "acquisition positions must be finite");
  }
  if (acquisitions_.size() >= 2) {
    bool all_identical = true;
    for (std::size_t n = 1; n < acquisitions_.size(); ++n) {
      if (acquisitions_[n].delta_b != acquisitions_[0].delta_b) {
        all_identical = false;
        break;
      }
    }
    require(!all_identical, ErrorKind::validation,
            "all bistatic baselines identical: stack is rank-deficient");
  }
}

double AcquisitionGeometry::baseline_span() const {
  double lo = acquisitions_.front().delta_b;
  double hi = lo;
  for (const auto& a : acquisitions_) {
    lo = std::min(lo, a.delta_b);
    hi = std::max(hi, a.delta_b);
  }
  return hi - lo;
}

ElevationGrid::ElevationGrid(std::vector<double> samples)
    : samples_(std::move(samples)) {
  require(!samples_.empty(), ErrorKind::validation, "elevation grid is empty");
  if (samples_.size() == 1) {
    spacing_ = 0.0;
    return;
  }
  spacing_ = samples_[1] - samples_[0];
  require(spacing_ > 0.0, ErrorKind::validation,
          "elevation grid must be strictly increasing");
  for (std::size_t l = 1; l < samples_.size(); ++l) {
    double step = samples_[l] - samples_[l - 1];
    require(step > 0.0, ErrorKind::validation,
            "elevation grid must be strictly increasing");
    require(std::abs(step - spacing_) <= 1e-9 * std::abs(spacing_),
            ErrorKind::validation, "elevation grid spacing is not uniform");
  }
}

ElevationGrid ElevationGrid::regular(double start, double spacing, int count) {
  require(count >= 1, ErrorKind::validation, "grid needs at least one sample");
  require(spacing > 0.0 || count == 1, ErrorKind::validation,
          "grid spacing must be positive");
  std::vector<double> s(static_cast<std::size_t>(count));
  for (int l = 0; l < count; ++l) s[l] = start + spacing * l;
  return ElevationGrid(std::move(s));
}

double elevation_wavenumber(const AcquisitionGeometry& geometry, double position) {
  return -4.0 * std::numbers::pi * position /
         (geometry.wavelength() * geometry.slant_range());
}

SensingMatrix build_sensing_matrix(const AcquisitionGeometry& geometry,
                                   const ElevationGrid& grid,
                                   std::size_t max_elements) {
  const int n = geometry.count();
  const int l = grid.size();
  std::size_t elems = static_cast<std::size_t>(n) * static_cast<std::size_t>(l);
  if (elems > max_elements) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "sensing matrix %d x %d exceeds element cap %zu", n, l,
                  max_elements);
    fail(ErrorKind::sizing, buf);
  }
  if (grid.size() < n) {
    // Overdetermined stacks are unusual here; allowed, but worth a trace.
    std::fprintf(stderr, "mmtomo: grid has fewer samples (%d) than acquisitions (%d)\n",
                 l, n);
  }

  Eigen::MatrixXcd entries(n, l);
  Eigen::VectorXd delta_k(n);
  for (int row = 0; row < n; ++row) {
    double dk = elevation_wavenumber(geometry, geometry.acquisitions()[row].delta_b);
    delta_k(row) = dk;
    for (int col = 0; col < l; ++col) {
      double phase = -dk * grid.sample(col);
      entries(row, col) = cplx(std::cos(phase), std::sin(phase));
    }
  }
  return SensingMatrix(std::move(entries), std::move(delta_k),
                       geometry_content_hash(geometry, grid));
}

Eigen::VectorXcd SensingMatrix::steering(double elevation) const {
  Eigen::VectorXcd r(delta_k_.size());
  for (int n = 0; n < delta_k_.size(); ++n) {
    double phase = -delta_k_(n) * elevation;
    r(n) = cplx(std::cos(phase), std::sin(phase));
  }
  return r;
}

double rayleigh_resolution(const AcquisitionGeometry& geometry) {
  require(geometry.count() >= 2, ErrorKind::validation,
          "rayleigh resolution needs at least two acquisitions");
  double span = geometry.baseline_span();
  require(span > 0.0, ErrorKind::validation,
          "degenerate aperture: baseline span is zero");
  return geometry.wavelength() * geometry.slant_range() / (2.0 * span);
}

std::uint64_t geometry_content_hash(const AcquisitionGeometry& geometry,
                                    const ElevationGrid& grid) {
  Fnv1a h;
  h.update(geometry.wavelength());
  h.update(geometry.slant_range());
  for (const auto& a : geometry.acquisitions()) h.update(a.delta_b);
  for (double s : grid.samples()) h.update(s);
  return h.digest();
}

}  // namespace mmt::geometry
