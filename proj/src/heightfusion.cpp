#include "mmtomo/heightfusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mmtomo/parallel.hpp"

namespace mmt::fusion {

namespace {

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double loss_weight(LossKind kind, double scale, double x) {
  switch (kind) {
    case LossKind::squared:
      return 2.0;
    case LossKind::huber:
      return std::abs(x) <= scale ? 1.0 : scale / std::abs(x);
    case LossKind::tukey: {
      if (std::abs(x) >= scale) return 0.0;
      double u = x / scale;
      double v = 1.0 - u * u;
      return v * v;
    }
  }
  return 0.0;
}

}  // namespace

double loss_value(LossKind kind, double scale, double x) {
  switch (kind) {
    case LossKind::squared:
      return x * x;
    case LossKind::huber: {
      double a = std::abs(x);
      return a <= scale ? 0.5 * x * x : scale * a - 0.5 * scale * scale;
    }
    case LossKind::tukey: {
      double c2 = scale * scale;
      if (std::abs(x) >= scale) return c2 / 6.0;
      double u = 1.0 - (x / scale) * (x / scale);
      return c2 / 6.0 * (1.0 - u * u * u);
    }
  }
  return 0.0;
}

ObjectHeight robust_fuse(std::vector<HeightSample>& samples,
                         const RobustLossSpec& loss) {
  loss.validate();
  require(!samples.empty(), ErrorKind::validation, "robust fuse needs samples");
  for (const auto& s : samples)
    require(std::isfinite(s.value), ErrorKind::validation,
            "height sample is not finite");

  ObjectHeight out;
  out.sample_count = static_cast<int>(samples.size());

  std::vector<double> values;
  values.reserve(samples.size());
  for (const auto& s : samples) values.push_back(s.value);

  auto objective = [&](double s) {
    double total = 0.0;
    for (double v : values) total += loss_value(loss.kind, loss.scale, v - s);
    return total;
  };

  double estimate = median_of(values);
  double prev_objective = objective(estimate);
  const bool convex = loss.kind != LossKind::tukey;
  bool converged = false;

  for (int it = 0; it < loss.max_iterations; ++it) {
    double sw = 0.0, swx = 0.0;
    for (auto& s : samples) {
      double w = loss_weight(loss.kind, loss.scale, s.value - estimate);
      s.weight = w;
      sw += w;
      swx += w * s.value;
    }
    if (sw <= 0.0) {
      // Redescending loss zeroed everything: median fallback.
      estimate = median_of(values);
      converged = false;
      break;
    }
    double next = swx / sw;
    double current_objective = objective(next);
    if (convex)
      require(current_objective <= prev_objective + 1e-9 * (1.0 + prev_objective),
              ErrorKind::internal, "IRLS objective increased for convex loss");
    prev_objective = current_objective;
    double delta = std::abs(next - estimate);
    estimate = next;
    if (delta < loss.tolerance) {
      converged = true;
      break;
    }
  }

  std::vector<double> abs_dev;
  abs_dev.reserve(values.size());
  for (double v : values) abs_dev.push_back(std::abs(v - estimate));
  out.height = estimate;
  out.robust_std = 1.4826 * median_of(std::move(abs_dev));
  out.converged = converged;
  return out;
}

std::vector<ObjectHeight> fuse_objects(const inv::ScattererRaster& scatterers,
                                       const Image<int>& footprints,
                                       const FusionConfig& config) {
  config.loss.validate();
  require(footprints.width() == scatterers.width() &&
              footprints.height() == scatterers.height(),
          ErrorKind::validation, "footprint raster does not cover scatterers");
  const int w = footprints.width();
  const int h = footprints.height();
  const double sin_inc = std::sin(config.incidence_deg * 3.14159265358979323846 / 180.0);
  require(sin_inc > 0.0, ErrorKind::validation, "incidence angle must be in (0, 180)");

  // Bounding boxes per object id.
  struct Box {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
  };
  std::map<int, Box> boxes;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int id = footprints.at(x, y);
      if (id == 0) continue;
      auto& b = boxes[id];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }

  auto top_elevation = [&](int x, int y, double* out_val) {
    const auto& r = scatterers.at(x, y);
    if (r.failed || r.order < 1) return false;
    double top = r.scatterers[0].elevation;
    if (r.order == 2) top = std::max(top, r.scatterers[1].elevation);
    *out_val = top;
    return true;
  };
  auto bottom_elevation = [&](int x, int y, double* out_val) {
    const auto& r = scatterers.at(x, y);
    if (r.failed || r.order < 1) return false;
    double bottom = r.scatterers[0].elevation;
    if (r.order == 2) bottom = std::min(bottom, r.scatterers[1].elevation);
    *out_val = bottom;
    return true;
  };

  // Global ground fallback for footprints without a usable ring.
  std::vector<HeightSample> global_ground;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v;
      if (footprints.at(x, y) == 0 && bottom_elevation(x, y, &v))
        global_ground.push_back({x, y, v, scatterers.at(x, y).order, 0.0});
    }
  double global_ground_elev = 0.0;
  if (!global_ground.empty())
    global_ground_elev = robust_fuse(global_ground, config.loss).height;

  std::vector<int> ids;
  ids.reserve(boxes.size());
  for (const auto& [id, box] : boxes) ids.push_back(id);

  std::vector<ObjectHeight> results(ids.size());
  parallel_for(ids.size(), 1, [&](std::size_t idx) {
    int id = ids[idx];
    const Box& box = boxes.at(id);

    // Local ground: lowest scatterer of unlabeled pixels in a ring around
    // the footprint's bounding box.
    std::vector<HeightSample> ground;
    int gx0 = std::max(0, box.x0 - config.ground_ring);
    int gy0 = std::max(0, box.y0 - config.ground_ring);
    int gx1 = std::min(w - 1, box.x1 + config.ground_ring);
    int gy1 = std::min(h - 1, box.y1 + config.ground_ring);
    for (int y = gy0; y <= gy1; ++y)
      for (int x = gx0; x <= gx1; ++x) {
        if (footprints.at(x, y) != 0) continue;
        double v;
        if (bottom_elevation(x, y, &v))
          ground.push_back({x, y, v, scatterers.at(x, y).order, 0.0});
      }
    double ground_elev = global_ground_elev;
    if (!ground.empty()) ground_elev = robust_fuse(ground, config.loss).height;

    std::vector<HeightSample> heights;
    for (int y = box.y0; y <= box.y1; ++y)
      for (int x = box.x0; x <= box.x1; ++x) {
        if (footprints.at(x, y) != id) continue;
        double v;
        if (top_elevation(x, y, &v))
          heights.push_back(
              {x, y, (v - ground_elev) * sin_inc, scatterers.at(x, y).order, 0.0});
      }

    if (heights.empty()) {
      ObjectHeight none;
      none.object_id = id;
      none.estimated = false;
      none.sample_count = 0;
      results[idx] = none;
      return;
    }
    ObjectHeight fused = robust_fuse(heights, config.loss);
    fused.object_id = id;
    results[idx] = fused;
  });

  return results;
}

}  // namespace mmt::fusion
