#ifndef MMTOMO_IO_HPP
#define MMTOMO_IO_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mmtomo/heightfusion.hpp"
#include "mmtomo/inversion.hpp"
#include "mmtomo/nonlocal.hpp"
#include "mmtomo/simulator.hpp"
#include "mmtomo/validation.hpp"

namespace mmt::io {

namespace fs = std::filesystem;

/// Writes bytes to `path` atomically (temp file + rename).
void atomic_write(const fs::path& path, const std::string& bytes);

std::string read_file(const fs::path& path);

// ---------------------------------------------------------------------------
// Stack file: JSON sidecar (<name>.json) + raw payload (<name>.bin).
// Payload layout, row-major, little-endian float32:
//   for each layer n in 0..N-1:
//     interferogram, interleaved (re, im) per pixel
//     intensity1 plane
//     intensity2 plane
// Payload length is exactly width*height*N*(2+1+1)*4 bytes. The sidecar
// embeds an FNV-1a hash of the payload, verified on read.
// ---------------------------------------------------------------------------

struct StackMeta {
  std::string kind = "stack";  // or "filtered_stack"
  std::uint64_t seed = 0;
  std::string config_hash;
};

void write_stack(const fs::path& base_path, const sim::InterferogramStack& stack,
                 const StackMeta& meta);
sim::InterferogramStack read_stack(const fs::path& base_path,
                                   StackMeta* meta = nullptr);

/// ENL map raster: <name>.bin (float32 plane) + sidecar.
void write_enl(const fs::path& base_path, const Image<float>& enl,
               const std::string& config_hash);
Image<float> read_enl(const fs::path& base_path,
                      std::string* config_hash = nullptr);

// ---------------------------------------------------------------------------
// Scatterer raster: per-pixel fixed-size record, row-major:
//   int32 order
//   float32 elevation[2], float32 power[2]   (unused slots zero)
//   float32 score
//   int32 flags (bit0 used_cs, bit1 converged, bit2 failed)
// ---------------------------------------------------------------------------

struct ScattererMeta {
  std::string config_hash;
  double incidence_deg = 40.0;
  double grid_min = 0.0;
  double grid_spacing = 1.0;
  int grid_count = 0;
  double pixel_spacing_range = 1.2;
  double pixel_spacing_azimuth = 3.3;
  inv::InversionReport report;
};

void write_scatterers(const fs::path& base_path, const inv::ScattererRaster& raster,
                      const ScattererMeta& meta);
inv::ScattererRaster read_scatterers(const fs::path& base_path,
                                     ScattererMeta* meta = nullptr);

// ---------------------------------------------------------------------------
// Scene truth: truth.json (objects, dims, seed) + footprints.bin (int32).
// ---------------------------------------------------------------------------

struct TruthData {
  Image<int> footprints;
  std::vector<sim::ObjectTruth> objects;
  double incidence_deg = 40.0;
  double pixel_spacing_range = 1.2;
  double pixel_spacing_azimuth = 3.3;
  std::uint64_t seed = 0;
  std::string config_hash;
};

void write_truth(const fs::path& json_path, const TruthData& truth);
TruthData read_truth(const fs::path& json_path);

// ---------------------------------------------------------------------------
// Object heights CSV: object_id,height,sample_count,robust_std,flag
// ---------------------------------------------------------------------------

void write_heights_csv(const fs::path& path,
                       const std::vector<fusion::ObjectHeight>& heights,
                       const std::string& config_hash);
std::vector<fusion::ObjectHeight> read_heights_csv(const fs::path& path,
                                                   std::string* config_hash = nullptr);

// ---------------------------------------------------------------------------
// Comparison report (JSON) and histogram (CSV).
// ---------------------------------------------------------------------------

void write_report(const fs::path& path, const val::ComparisonReport& report,
                  const std::string& config_hash, const std::string& provenance);
void write_histogram_csv(const fs::path& path, const val::ComparisonReport& report);

/// Reference model from a JSON file: {"objects": [{"id":..,"height":..},..]}
/// or {"points": [[x,y,z],..]}. Truth files also parse as object references.
val::ReferenceModel read_reference(const fs::path& path);

// ---------------------------------------------------------------------------
// Run manifest: config hash, per-stage wall time and artifact list.
// ---------------------------------------------------------------------------

struct Manifest {
  std::string config_hash;
  std::string tool_version;
  struct StageEntry {
    std::string name;
    double wall_time_s = 0.0;
    std::vector<std::string> artifacts;
  };
  std::vector<StageEntry> stages;
};

void write_manifest(const fs::path& path, const Manifest& manifest);
std::optional<Manifest> read_manifest(const fs::path& path);

}  // namespace mmt::io

#endif
