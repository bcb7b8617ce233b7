#ifndef MMTOMO_GEOMETRY_HPP
#define MMTOMO_GEOMETRY_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mmtomo/common.hpp"

namespace mmt::geometry {

/// One bistatic pass: master phase-center cross-range position and the
/// effective bistatic baseline to the slave.
struct Acquisition {
  double b_master = 0.0;
  double delta_b = 0.0;
};

/// Immutable stack geometry: wavelength, representative slant range and the
/// per-pass sensor positions. All wavenumbers derive from here.
class AcquisitionGeometry {
public:
  AcquisitionGeometry(double wavelength, double slant_range,
                      std::vector<Acquisition> acquisitions);

  double wavelength() const { return wavelength_; }
  double slant_range() const { return slant_range_; }
  int count() const { return static_cast<int>(acquisitions_.size()); }
  const std::vector<Acquisition>& acquisitions() const { return acquisitions_; }

  double baseline_span() const;  // max - min of bistatic baselines

private:
  double wavelength_;
  double slant_range_;
  std::vector<Acquisition> acquisitions_;
};

/// Uniformly spaced elevation axis s_1 < s_2 < ... < s_L.
class ElevationGrid {
public:
  explicit ElevationGrid(std::vector<double> samples);
  static ElevationGrid regular(double start, double spacing, int count);

  int size() const { return static_cast<int>(samples_.size()); }
  double spacing() const { return spacing_; }
  double sample(int l) const { return samples_[l]; }
  double front() const { return samples_.front(); }
  double back() const { return samples_.back(); }
  const std::vector<double>& samples() const { return samples_; }

  /// True when the construction saw fewer grid samples than a stack of
  /// `n_acquisitions` rows would need for an overdetermined system.
  bool underdetermined(int n_acquisitions) const { return size() >= n_acquisitions; }

private:
  std::vector<double> samples_;
  double spacing_ = 0.0;
};

/// N x L steering matrix R_nl = exp(-j dk_n s_l), bound to the geometry and
/// grid that produced it via a content hash.
class SensingMatrix {
public:
  SensingMatrix(Eigen::MatrixXcd entries, Eigen::VectorXd delta_k,
                std::uint64_t geometry_hash)
      : entries_(std::move(entries)),
        delta_k_(std::move(delta_k)),
        geometry_hash_(geometry_hash) {}

  const Eigen::MatrixXcd& entries() const { return entries_; }
  /// Baseline wavenumbers dk_n, one per row.
  const Eigen::VectorXd& delta_k() const { return delta_k_; }
  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }
  std::uint64_t geometry_hash() const { return geometry_hash_; }

  /// Steering vector at an arbitrary (off-grid) elevation.
  Eigen::VectorXcd steering(double elevation) const;

private:
  Eigen::MatrixXcd entries_;
  Eigen::VectorXd delta_k_;
  std::uint64_t geometry_hash_;
};

inline constexpr std::size_t kDefaultMatrixCap = 4u * 1000u * 1000u;

/// Elevation wavenumber for a cross-range position: -4*pi*b / (lambda * r).
double elevation_wavenumber(const AcquisitionGeometry& geometry, double position);

/// Steering matrix over the grid, rows ordered as acquisitions. Uses the
/// bistatic baselines delta_b, never the absolute master positions.
SensingMatrix build_sensing_matrix(const AcquisitionGeometry& geometry,
                                   const ElevationGrid& grid,
                                   std::size_t max_elements = kDefaultMatrixCap);

/// lambda * r / (2 * span(delta_b)).
double rayleigh_resolution(const AcquisitionGeometry& geometry);

/// Content hash of (wavelength, slant range, baselines, grid samples).
std::uint64_t geometry_content_hash(const AcquisitionGeometry& geometry,
                                    const ElevationGrid& grid);

}  // namespace mmt::geometry

#endif
