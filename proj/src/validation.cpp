#include "mmtomo/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mmt::val {

namespace {

/// Uniform hash-grid nearest-neighbour index over 3-D points.
class PointIndex {
public:
  PointIndex(const std::vector<Point3>& points, double cell)
      : points_(points), cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i)
      cells_[key(points[i])].push_back(i);
  }

  /// Nearest point within `cutoff`; returns false when none qualifies.
  bool nearest(const Point3& query, double cutoff, Point3* out) const {
    int qx = coord(query.x), qy = coord(query.y), qz = coord(query.z);
    int max_ring = static_cast<int>(cutoff / cell_) + 1;
    double best = cutoff * cutoff;
    const Point3* best_point = nullptr;
    for (int ring = 0; ring <= max_ring; ++ring) {
      // Cells in this shell are at least (ring-1)*cell away.
      double ring_min = (ring - 1) * cell_;
      if (ring_min > 0.0 && ring_min * ring_min > best) break;
      scan_ring(qx, qy, qz, ring, query, &best, &best_point);
    }
    if (!best_point) return false;
    *out = *best_point;
    return true;
  }

private:
  void scan_ring(int qx, int qy, int qz, int ring, const Point3& query,
                 double* best, const Point3** best_point) const {
    for (int dz = -ring; dz <= ring; ++dz)
      for (int dy = -ring; dy <= ring; ++dy)
        for (int dx = -ring; dx <= ring; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring)
            continue;  // shell only
          auto it = cells_.find(pack(qx + dx, qy + dy, qz + dz));
          if (it == cells_.end()) continue;
          for (std::size_t i : it->second) {
            const Point3& p = points_[i];
            double d2 = (p.x - query.x) * (p.x - query.x) +
                        (p.y - query.y) * (p.y - query.y) +
                        (p.z - query.z) * (p.z - query.z);
            if (d2 < *best) {
              *best = d2;
              *best_point = &p;
            }
          }
        }
  }

  int coord(double v) const { return static_cast<int>(std::floor(v / cell_)); }
  std::int64_t key(const Point3& p) const {
    return pack(coord(p.x), coord(p.y), coord(p.z));
  }
  static std::int64_t pack(int x, int y, int z) {
    return (static_cast<std::int64_t>(x & 0x1fffff) << 42) |
           (static_cast<std::int64_t>(y & 0x1fffff) << 21) |
           static_cast<std::int64_t>(z & 0x1fffff);
  }

  const std::vector<Point3>& points_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

double robust_cost(const PointIndex& index, const std::vector<Point3>& sample,
                   const Shift3& shift, double cutoff, double huber_scale) {
  double total = 0.0;
  for (const auto& p : sample) {
    Point3 q{p.x + shift.dx, p.y + shift.dy, p.z + shift.dz};
    Point3 nn;
    double d = cutoff;
    if (index.nearest(q, cutoff, &nn))
      d = std::sqrt((nn.x - q.x) * (nn.x - q.x) + (nn.y - q.y) * (nn.y - q.y) +
                    (nn.z - q.z) * (nn.z - q.z));
    // Huber cost on the distance.
    total += d <= huber_scale ? 0.5 * d * d
                              : huber_scale * d - 0.5 * huber_scale * huber_scale;
  }
  return total;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Shift3 coregister(const std::vector<Point3>& estimated,
                  const std::vector<Point3>& reference,
                  const CoregistrationConfig& config) {
  require(estimated.size() >= 10 && reference.size() >= 10, ErrorKind::validation,
          "co-registration needs at least 10 points per cloud");

  PointIndex index(reference, std::max(1.0, config.coarse_step));
  const double cutoff = std::max(2.0 * config.overlap_threshold,
                                 4.0 * config.huber_scale);

  // Deterministic subsample for the coarse stage.
  std::vector<Point3> sample;
  std::size_t stride = std::max<std::size_t>(1, estimated.size() / 512);
  for (std::size_t i = 0; i < estimated.size(); i += stride)
    sample.push_back(estimated[i]);

  // Median-difference initialization, clamped to the bounded search range,
  // then a local coarse grid around it.
  auto median_axis = [](const std::vector<Point3>& pts, int axis) {
    std::vector<double> v;
    v.reserve(pts.size());
    for (const auto& p : pts) v.push_back(axis == 0 ? p.x : axis == 1 ? p.y : p.z);
    return median(std::move(v));
  };
  Shift3 init{median_axis(reference, 0) - median_axis(estimated, 0),
              median_axis(reference, 1) - median_axis(estimated, 1),
              median_axis(reference, 2) - median_axis(estimated, 2)};
  init.dx = std::clamp(init.dx, -config.max_shift, config.max_shift);
  init.dy = std::clamp(init.dy, -config.max_shift, config.max_shift);
  init.dz = std::clamp(init.dz, -config.max_shift, config.max_shift);

  Shift3 best_shift = init;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int iz = -2; iz <= 2; ++iz)
    for (int iy = -2; iy <= 2; ++iy)
      for (int ix = -2; ix <= 2; ++ix) {
        Shift3 s{init.dx + ix * config.coarse_step,
                 init.dy + iy * config.coarse_step,
                 init.dz + iz * config.coarse_step};
        double c = robust_cost(index, sample, s, cutoff, config.huber_scale);
        if (c < best_cost) {
          best_cost = c;
          best_shift = s;
        }
      }

  // Robust ICP refinement on the full estimated cloud.
  Shift3 shift = best_shift;
  for (int it = 0; it < config.max_iterations; ++it) {
    double sw = 0.0, sx = 0.0, sy = 0.0, sz = 0.0;
    for (const auto& p : estimated) {
      Point3 q{p.x + shift.dx, p.y + shift.dy, p.z + shift.dz};
      Point3 nn;
      if (!index.nearest(q, cutoff, &nn)) continue;
      double rx = nn.x - q.x, ry = nn.y - q.y, rz = nn.z - q.z;
      double d = std::sqrt(rx * rx + ry * ry + rz * rz);
      double w = d <= config.huber_scale ? 1.0 : config.huber_scale / d;
      sw += w;
      sx += w * rx;
      sy += w * ry;
      sz += w * rz;
    }
    require(sw > 0.0, ErrorKind::registration,
            "no nearest-neighbour overlap during co-registration");
    Shift3 delta{sx / sw, sy / sw, sz / sw};
    shift.dx += delta.dx;
    shift.dy += delta.dy;
    shift.dz += delta.dz;
    if (std::sqrt(delta.dx * delta.dx + delta.dy * delta.dy + delta.dz * delta.dz) <
        config.tolerance)
      break;
  }

  // Overlap sanity check on the final alignment.
  std::vector<double> distances;
  for (const auto& p : sample) {
    Point3 q{p.x + shift.dx, p.y + shift.dy, p.z + shift.dz};
    Point3 nn;
    if (index.nearest(q, cutoff, &nn))
      distances.push_back(std::sqrt((nn.x - q.x) * (nn.x - q.x) +
                                    (nn.y - q.y) * (nn.y - q.y) +
                                    (nn.z - q.z) * (nn.z - q.z)));
  }
  if (distances.size() < sample.size() / 2 ||
      median(distances) > config.overlap_threshold)
    fail(ErrorKind::registration,
         "co-registration failed: no point-cloud overlap within the bounded search");

  return shift;
}

ComparisonReport compare_heights(const std::vector<fusion::ObjectHeight>& estimates,
                                 const ReferenceModel& reference,
                                 double truncation, double bin_width) {
  require(truncation > 0.0, ErrorKind::validation, "truncation must be positive");
  require(bin_width > 0.0, ErrorKind::validation, "bin width must be positive");
  require(reference.kind == ReferenceModel::Kind::objects,
          ErrorKind::validation,
          "compare_heights needs a per-object reference; rasterize point "
          "references first");

  ComparisonReport report;
  report.truncation = truncation;
  report.bin_width = bin_width;
  int bins = static_cast<int>(std::ceil(2.0 * truncation / bin_width));
  report.histogram.assign(bins, 0);
  report.bin_edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) report.bin_edges[b] = -truncation + b * bin_width;

  int within1 = 0, within2 = 0;
  std::vector<double> retained_diffs;
  for (const auto& est : estimates) {
    if (!est.estimated) {
      ++report.unestimated;
      continue;
    }
    auto it = reference.object_heights.find(est.object_id);
    if (it == reference.object_heights.end()) continue;
    double diff = est.height - it->second;
    ++report.compared;
    report.diffs.emplace_back(est.object_id, diff);
    if (std::abs(diff) <= 1.0) ++within1;
    if (std::abs(diff) <= 2.0) ++within2;
    if (std::abs(diff) <= truncation) {
      ++report.retained;
      retained_diffs.push_back(diff);
      int bin = static_cast<int>(std::floor((diff + truncation) / bin_width));
      bin = std::clamp(bin, 0, bins - 1);
      ++report.histogram[bin];
    } else {
      ++report.dropped;
    }
  }
  require(report.compared > 0, ErrorKind::validation,
          "no objects joinable between estimates and reference");

  report.within_1m_fraction = static_cast<double>(within1) / report.compared;
  report.within_2m_fraction = static_cast<double>(within2) / report.compared;

  if (retained_diffs.size() >= 2) {
    double mean = 0.0;
    for (double d : retained_diffs) mean += d;
    mean /= retained_diffs.size();
    double ss = 0.0;
    for (double d : retained_diffs) ss += (d - mean) * (d - mean);
    report.std_retained = std::sqrt(ss / (retained_diffs.size() - 1));
  }
  return report;
}

ReferenceModel rasterize_reference(const std::vector<Point3>& points,
                                   const Image<int>& footprints,
                                   double pixel_spacing_x, double pixel_spacing_y,
                                   const fusion::RobustLossSpec& loss) {
  require(pixel_spacing_x > 0.0 && pixel_spacing_y > 0.0, ErrorKind::validation,
          "pixel spacings must be positive");
  std::map<int, std::vector<fusion::HeightSample>> per_object;
  for (const auto& p : points) {
    int x = static_cast<int>(std::floor(p.x / pixel_spacing_x));
    int y = static_cast<int>(std::floor(p.y / pixel_spacing_y));
    if (!footprints.contains(x, y)) continue;
    int id = footprints.at(x, y);
    if (id == 0) continue;
    per_object[id].push_back({x, y, p.z, 0, 0.0});
  }
  ReferenceModel model;
  model.kind = ReferenceModel::Kind::objects;
  model.provenance = "rasterized points";
  for (auto& [id, samples] : per_object)
    model.object_heights[id] = fusion::robust_fuse(samples, loss).height;
  return model;
}

}  // namespace mmt::val
