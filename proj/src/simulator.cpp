#include "mmtomo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <set>

#include "mmtomo/parallel.hpp"
#include "mmtomo/rng.hpp"

namespace mmt::sim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Scene::Scene(int width, int height)
    : width_(width),
      height_(height),
      truth_(static_cast<std::size_t>(width) * height),
      footprints_(width, height, 0) {
  require(width > 0 && height > 0, ErrorKind::validation,
          "scene dimensions must be positive");
}

void Scene::validate(double elevation_min, double elevation_max) const {
  for (const auto& px : truth_) {
    require(px.scatterers.size() <= 2, ErrorKind::validation,
            "scene pixel has more than two scatterers");
    for (const auto& sc : px.scatterers) {
      require(sc.power >= 0.0, ErrorKind::validation,
              "scene scatterer power must be nonnegative");
      if (sc.elevation < elevation_min || sc.elevation > elevation_max) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "scene elevation %.3f outside grid range [%.3f, %.3f]",
                      sc.elevation, elevation_min, elevation_max);
        fail(ErrorKind::validation, buf);
      }
    }
  }

  // Footprint labels must form 4-connected components.
  std::set<int> labels;
  for (std::size_t i = 0; i < footprints_.size(); ++i)
    if (footprints_[i] != 0) labels.insert(footprints_[i]);

  for (int label : labels) {
    int total = 0;
    int seed_x = -1, seed_y = -1;
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x)
        if (footprints_.at(x, y) == label) {
          ++total;
          if (seed_x < 0) {
            seed_x = x;
            seed_y = y;
          }
        }
    Image<unsigned char> seen(width_, height_, 0);
    std::deque<std::pair<int, int>> queue{{seed_x, seed_y}};
    seen.at(seed_x, seed_y) = 1;
    int reached = 0;
    while (!queue.empty()) {
      auto [x, y] = queue.front();
      queue.pop_front();
      ++reached;
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        int nx = x + dx[k], ny = y + dy[k];
        if (footprints_.contains(nx, ny) && !seen.at(nx, ny) &&
            footprints_.at(nx, ny) == label) {
          seen.at(nx, ny) = 1;
          queue.emplace_back(nx, ny);
        }
      }
    }
    if (reached != total) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "footprint label %d is not connected", label);
      fail(ErrorKind::validation, buf);
    }
  }
}

double Scene::mean_signal_power() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& px : truth_) {
    if (px.scatterers.empty()) continue;
    double p = 0.0;
    for (const auto& sc : px.scatterers) p += sc.power;
    sum += p;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

InterferogramStack::InterferogramStack(std::vector<StackLayer> layers,
                                       geometry::AcquisitionGeometry geometry)
    : layers_(std::move(layers)), geometry_(std::move(geometry)) {
  require(!layers_.empty(), ErrorKind::validation, "stack has no layers");
  require(static_cast<int>(layers_.size()) == geometry_.count(),
          ErrorKind::validation, "stack layer count does not match geometry");
  const int w = layers_.front().interferogram.width();
  const int h = layers_.front().interferogram.height();
  for (const auto& layer : layers_) {
    require(layer.interferogram.width() == w && layer.interferogram.height() == h &&
                layer.intensity1.width() == w && layer.intensity1.height() == h &&
                layer.intensity2.width() == w && layer.intensity2.height() == h,
            ErrorKind::validation, "stack layer dimensions differ");
    for (std::size_t i = 0; i < layer.interferogram.size(); ++i) {
      float i1 = layer.intensity1[i];
      float i2 = layer.intensity2[i];
      require(i1 >= 0.0f && i2 >= 0.0f, ErrorKind::validation,
              "negative intensity in stack");
      double mag = std::abs(cplx(layer.interferogram[i]));
      double bound = std::sqrt(static_cast<double>(i1) * i2);
      require(mag <= bound + 1e-5 * (bound + 1.0), ErrorKind::validation,
              "interferogram magnitude exceeds intensity bound");
    }
  }
}

cplx sample_spectrum(const std::vector<TruthScatterer>& scatterers,
                     double position,
                     const geometry::AcquisitionGeometry& geometry) {
  double k = geometry::elevation_wavenumber(geometry, position);
  cplx acc(0.0, 0.0);
  for (const auto& sc : scatterers) {
    double amp = std::sqrt(sc.power);
    double phase = sc.phase - k * sc.elevation;
    acc += cplx(amp * std::cos(phase), amp * std::sin(phase));
  }
  return acc;
}

namespace {

struct PlacedRect {
  int x, y, w, h;
};

bool rects_overlap(const PlacedRect& a, const PlacedRect& b, int gap) {
  return !(a.x + a.w + gap <= b.x || b.x + b.w + gap <= a.x ||
           a.y + a.h + gap <= b.y || b.y + b.h + gap <= a.y);
}

}  // namespace

Scene make_urban_scene(const SceneSpec& spec, std::uint64_t seed) {
  require(spec.width > 0 && spec.height > 0, ErrorKind::validation,
          "scene spec dimensions must be positive");
  Scene scene(spec.width, spec.height);
  scene.incidence_deg = spec.incidence_deg;
  scene.pixel_spacing_range = spec.pixel_spacing_range;
  scene.pixel_spacing_azimuth = spec.pixel_spacing_azimuth;

  const double sin_inc = std::sin(deg_to_rad(spec.incidence_deg));
  require(sin_inc > 0.0, ErrorKind::validation, "incidence angle must be in (0, 180)");

  Rng rng(Rng::mix(seed, 0x5ce9eULL));

  // Resolve building list: explicit placements win; otherwise sample
  // non-overlapping rectangles.
  std::vector<Building> buildings = spec.buildings;
  std::vector<PlacedRect> placed;
  for (const auto& b : buildings) {
    require(b.w > 0 && b.h > 0, ErrorKind::validation, "building size must be positive");
    require(b.x >= 0 && b.y >= 0 && b.x + b.w <= spec.width && b.y + b.h <= spec.height,
            ErrorKind::validation, "building footprint outside scene");
    PlacedRect r{b.x, b.y, b.w, b.h};
    for (const auto& other : placed)
      require(!rects_overlap(r, other, 0), ErrorKind::validation,
              "building footprints overlap");
    placed.push_back(r);
  }
  if (buildings.empty() && spec.building_count > 0) {
    int attempts = 0;
    while (static_cast<int>(buildings.size()) < spec.building_count) {
      require(++attempts < 20000, ErrorKind::validation,
              "could not place requested building count; scene too crowded");
      int w = rng.uniform_int(spec.side_min, spec.side_max);
      int h = rng.uniform_int(spec.side_min, spec.side_max);
      if (w + 2 * spec.margin >= spec.width || h + 2 * spec.margin >= spec.height)
        continue;
      int x = rng.uniform_int(spec.margin, spec.width - w - spec.margin);
      int y = rng.uniform_int(spec.margin, spec.height - h - spec.margin);
      PlacedRect r{x, y, w, h};
      bool ok = true;
      for (const auto& other : placed)
        if (rects_overlap(r, other, spec.margin)) {
          ok = false;
          break;
        }
      if (!ok) continue;
      placed.push_back(r);
      Building b;
      b.x = x;
      b.y = y;
      b.w = w;
      b.h = h;
      b.height_m = rng.uniform(spec.height_min_m, spec.height_max_m);
      b.roof_power = rng.uniform(spec.roof_power_min, spec.roof_power_max);
      buildings.push_back(b);
    }
  }

  // Ground everywhere.
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      auto& px = scene.truth(x, y);
      px.point_scatterer = spec.point_scatterers;
      px.scatterers.push_back({0.0, spec.ground_power, 0.0});
    }

  int next_id = 1;
  for (auto& b : buildings) {
    if (b.roof_power <= 0.0)
      b.roof_power = rng.uniform(spec.roof_power_min, spec.roof_power_max);
    double roof_elevation = b.height_m / sin_inc;
    int id = next_id++;
    scene.objects().push_back({id, b.height_m});
    int band = std::min(spec.layover_depth, b.w);
    for (int y = b.y; y < b.y + b.h; ++y) {
      for (int x = b.x; x < b.x + b.w; ++x) {
        scene.footprints().at(x, y) = id;
        auto& px = scene.truth(x, y);
        px.scatterers.clear();
        if (x < b.x + band) {
          // Near-range layover band: ground and roof share the cell.
          px.scatterers.push_back({0.0, spec.ground_power, 0.0});
          px.scatterers.push_back({roof_elevation, b.roof_power, 0.0});
        } else {
          px.scatterers.push_back({roof_elevation, b.roof_power, 0.0});
        }
      }
    }
  }

  // Deterministic reflectivity phases, one per scatterer per scene seed.
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      std::uint64_t px_index = static_cast<std::uint64_t>(y) * spec.width + x;
      Rng phase_rng(Rng::mix(Rng::mix(seed, 0x9fa5eULL), px_index));
      for (auto& sc : scene.truth(x, y).scatterers)
        sc.phase = phase_rng.uniform(0.0, kTwoPi);
    }

  return scene;
}

SimulationResult simulate_stack(const Scene& scene,
                                const geometry::AcquisitionGeometry& geometry,
                                const NoiseSpec& noise, std::uint64_t seed,
                                double elevation_min, double elevation_max,
                                int workers) {
  scene.validate(elevation_min, elevation_max);

  const int w = scene.width();
  const int h = scene.height();
  const int n_acq = geometry.count();

  double noise_variance = 0.0;
  if (noise.enabled) {
    double snr_linear = std::pow(10.0, noise.snr_db / 10.0);
    noise_variance = scene.mean_signal_power() / snr_linear;
  }

  std::vector<ComplexImagePair> pairs;
  pairs.reserve(n_acq);
  std::vector<StackLayer> layers;
  layers.reserve(n_acq);
  for (int n = 0; n < n_acq; ++n) {
    pairs.push_back({Image<cplxf>(w, h), Image<cplxf>(w, h)});
    layers.push_back(
        {Image<cplxf>(w, h), Image<float>(w, h, 0.0f), Image<float>(w, h, 0.0f)});
  }

  std::vector<double> k_master(n_acq), k_slave(n_acq);
  for (int n = 0; n < n_acq; ++n) {
    const auto& acq = geometry.acquisitions()[n];
    k_master[n] = geometry::elevation_wavenumber(geometry, acq.b_master);
    k_slave[n] = geometry::elevation_wavenumber(geometry, acq.b_master + acq.delta_b);
  }

  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    for (int x = 0; x < w; ++x) {
      const int y = static_cast<int>(row);
      const auto& px = scene.truth(x, y);
      std::uint64_t px_index = static_cast<std::uint64_t>(y) * w + x;
      Rng rng(Rng::mix(Rng::mix(seed, 0x51acc5ULL), px_index));

      for (int n = 0; n < n_acq; ++n) {
        cplx master(0.0, 0.0);
        cplx slave(0.0, 0.0);
        for (const auto& sc : px.scatterers) {
          cplx reflectivity;
          if (px.point_scatterer) {
            double amp = std::sqrt(sc.power);
            reflectivity = cplx(amp * std::cos(sc.phase), amp * std::sin(sc.phase));
          } else {
            reflectivity = rng.circular_normal(sc.power);
          }
          double pm = -k_master[n] * sc.elevation;
          double ps = -k_slave[n] * sc.elevation;
          master += reflectivity * cplx(std::cos(pm), std::sin(pm));
          slave += reflectivity * cplx(std::cos(ps), std::sin(ps));
        }
        if (noise_variance > 0.0) {
          master += rng.circular_normal(noise_variance);
          slave += rng.circular_normal(noise_variance);
        }

        cplxf master_f(static_cast<float>(master.real()),
                       static_cast<float>(master.imag()));
        cplxf slave_f(static_cast<float>(slave.real()),
                      static_cast<float>(slave.imag()));
        pairs[n].master.at(x, y) = master_f;
        pairs[n].slave.at(x, y) = slave_f;

        cplx m(master_f);
        cplx s(slave_f);
        cplx ifg = s * std::conj(m);
        layers[n].interferogram.at(x, y) =
            cplxf(static_cast<float>(ifg.real()), static_cast<float>(ifg.imag()));
        layers[n].intensity1.at(x, y) = static_cast<float>(std::norm(m));
        layers[n].intensity2.at(x, y) = static_cast<float>(std::norm(s));
      }
    }
  });

  InterferogramStack stack(std::move(layers), geometry);
  stack.pixel_spacing_range = scene.pixel_spacing_range;
  stack.pixel_spacing_azimuth = scene.pixel_spacing_azimuth;
  stack.incidence_deg = scene.incidence_deg;
  return {std::move(pairs), std::move(stack)};
}

}  // namespace mmt::sim
