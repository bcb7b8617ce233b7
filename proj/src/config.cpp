#include "mmtomo/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmtomo/hash.hpp"

namespace mmt::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    require(trim(v.substr(used)).empty(), ErrorKind::config,
            "trailing characters after number in key '" + key + "'");
    return d;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    long long d = std::stoll(v, &used);
    require(trim(v.substr(used)).empty(), ErrorKind::config,
            "trailing characters after integer in key '" + key + "'");
    return d;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config, "key '" + key + "' expects an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::config, "key '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> parse_numbers(const std::string& v, const std::string& key) {
  std::istringstream in(v);
  std::vector<double> out;
  double d;
  while (in >> d) out.push_back(d);
  std::string rest;
  in.clear();
  std::getline(in, rest);
  require(trim(rest).empty(), ErrorKind::config,
          "unparseable numbers in key '" + key + "'");
  return out;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;

  auto bad_key = [&](const std::string& key) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "line %d: unknown key '%s' in section [%s]",
                  line_no, key.c_str(), section.c_str());
    fail(ErrorKind::config, buf);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      require(line.back() == ']', ErrorKind::config,
              "malformed section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"geometry", "scene",      "noise", "filter",
                                    "inversion", "fusion",    "validation", "run"};
      bool ok = std::any_of(std::begin(known), std::end(known),
                            [&](const char* k) { return section == k; });
      require(ok, ErrorKind::config, "unknown section [" + section + "]");
      continue;
    }

    std::size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            "expected 'key = value': " + line);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!section.empty(), ErrorKind::config,
            "key '" + key + "' appears before any section");

    if (section == "geometry") {
      if (key == "wavelength") cfg.wavelength = parse_double(value, key);
      else if (key == "slant_range") cfg.slant_range = parse_double(value, key);
      else if (key == "incidence_deg") cfg.incidence_deg = parse_double(value, key);
      else if (key == "acquisition") {
        auto nums = parse_numbers(value, key);
        require(nums.size() == 2, ErrorKind::config,
                "acquisition expects 'b_master delta_b'");
        cfg.acquisitions.push_back({nums[0], nums[1]});
      } else bad_key(key);
    } else if (section == "scene") {
      if (key == "width") cfg.scene.width = static_cast<int>(parse_int(value, key));
      else if (key == "height") cfg.scene.height = static_cast<int>(parse_int(value, key));
      else if (key == "building_count")
        cfg.scene.building_count = static_cast<int>(parse_int(value, key));
      else if (key == "height_min") cfg.scene.height_min_m = parse_double(value, key);
      else if (key == "height_max") cfg.scene.height_max_m = parse_double(value, key);
      else if (key == "side_min") cfg.scene.side_min = static_cast<int>(parse_int(value, key));
      else if (key == "side_max") cfg.scene.side_max = static_cast<int>(parse_int(value, key));
      else if (key == "margin") cfg.scene.margin = static_cast<int>(parse_int(value, key));
      else if (key == "layover_depth")
        cfg.scene.layover_depth = static_cast<int>(parse_int(value, key));
      else if (key == "ground_power") cfg.scene.ground_power = parse_double(value, key);
      else if (key == "roof_power_min") cfg.scene.roof_power_min = parse_double(value, key);
      else if (key == "roof_power_max") cfg.scene.roof_power_max = parse_double(value, key);
      else if (key == "point_scatterers") cfg.scene.point_scatterers = parse_bool(value, key);
      else if (key == "pixel_spacing_range")
        cfg.scene.pixel_spacing_range = parse_double(value, key);
      else if (key == "pixel_spacing_azimuth")
        cfg.scene.pixel_spacing_azimuth = parse_double(value, key);
      else if (key == "building") {
        auto nums = parse_numbers(value, key);
        require(nums.size() == 5 || nums.size() == 6, ErrorKind::config,
                "building expects 'x y w h height [roof_power]'");
        sim::Building b;
        b.x = static_cast<int>(nums[0]);
        b.y = static_cast<int>(nums[1]);
        b.w = static_cast<int>(nums[2]);
        b.h = static_cast<int>(nums[3]);
        b.height_m = nums[4];
        b.roof_power = nums.size() == 6 ? nums[5] : 1.0;
        cfg.scene.buildings.push_back(b);
      } else bad_key(key);
    } else if (section == "noise") {
      if (key == "enabled") cfg.noise.enabled = parse_bool(value, key);
      else if (key == "snr_db") cfg.noise.snr_db = parse_double(value, key);
      else bad_key(key);
    } else if (section == "filter") {
      if (key == "patch_radius")
        cfg.filter.patch_radius = static_cast<int>(parse_int(value, key));
      else if (key == "search_radius")
        cfg.filter.search_radius = static_cast<int>(parse_int(value, key));
      else if (key == "bandwidth") cfg.filter.bandwidth = parse_double(value, key);
      else if (key == "phase_weight") cfg.filter.phase_weight = parse_double(value, key);
      else if (key == "iterations")
        cfg.filter.iterations = static_cast<int>(parse_int(value, key));
      else if (key == "refine_patch_radius")
        cfg.filter.refine_patch_radius = static_cast<int>(parse_int(value, key));
      else if (key == "refine_bandwidth")
        cfg.filter.refine_bandwidth = parse_double(value, key);
      else bad_key(key);
    } else if (section == "inversion") {
      if (key == "elevation_min") cfg.elevation_min = parse_double(value, key);
      else if (key == "elevation_max") cfg.elevation_max = parse_double(value, key);
      else if (key == "grid_spacing") cfg.grid_spacing = parse_double(value, key);
      else if (key == "lambda_scale") cfg.selection.lambda_scale = parse_double(value, key);
      else if (key == "lambda_reg") cfg.selection.lambda_reg = parse_double(value, key);
      else if (key == "penalty_multiplier")
        cfg.selection.penalty_multiplier = parse_double(value, key);
      else if (key == "max_order")
        cfg.selection.max_order = static_cast<int>(parse_int(value, key));
      else if (key == "peak_fraction") cfg.selection.peak_fraction = parse_double(value, key);
      else if (key == "min_power_fraction")
        cfg.selection.min_power_fraction = parse_double(value, key);
      else if (key == "cs_max_iterations")
        cfg.selection.cs_max_iterations = static_cast<int>(parse_int(value, key));
      else if (key == "cs_tolerance") cfg.selection.cs_tolerance = parse_double(value, key);
      else if (key == "prior_variance") cfg.prior_variance = parse_double(value, key);
      else if (key == "condition_limit") cfg.condition_limit = parse_double(value, key);
      else if (key == "matrix_cap")
        cfg.matrix_cap = static_cast<std::uint64_t>(parse_int(value, key));
      else bad_key(key);
    } else if (section == "fusion") {
      if (key == "loss") {
        if (value == "squared") cfg.loss.kind = fusion::LossKind::squared;
        else if (value == "huber") cfg.loss.kind = fusion::LossKind::huber;
        else if (value == "tukey") cfg.loss.kind = fusion::LossKind::tukey;
        else fail(ErrorKind::config, "loss must be squared, huber or tukey");
      } else if (key == "scale") cfg.loss_scale_override = parse_double(value, key);
      else if (key == "max_iterations")
        cfg.loss.max_iterations = static_cast<int>(parse_int(value, key));
      else if (key == "tolerance") cfg.loss.tolerance = parse_double(value, key);
      else if (key == "ground_ring")
        cfg.ground_ring = static_cast<int>(parse_int(value, key));
      else bad_key(key);
    } else if (section == "validation") {
      if (key == "truncation") cfg.truncation = parse_double(value, key);
      else if (key == "bin_width") cfg.bin_width = parse_double(value, key);
      else if (key == "reference") cfg.reference_path = value;
      else if (key == "coregister_max_shift")
        cfg.coregister_max_shift = parse_double(value, key);
      else bad_key(key);
    } else if (section == "run") {
      if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
      else if (key == "workers") cfg.workers = static_cast<int>(parse_int(value, key));
      else if (key == "out_dir") cfg.out_dir = value;
      else bad_key(key);
    }
  }

  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

geometry::AcquisitionGeometry PipelineConfig::make_geometry() const {
  std::vector<geometry::Acquisition> acqs = acquisitions;
  if (acqs.empty())
    acqs = {{-200.0, -300.0}, {-100.0, -120.0}, {0.0, 60.0},
            {100.0, 180.0},  {200.0, 300.0}};
  return geometry::AcquisitionGeometry(wavelength, slant_range, std::move(acqs));
}

geometry::ElevationGrid PipelineConfig::make_grid() const {
  double ds = grid_spacing;
  if (ds <= 0.0)
    ds = geometry::rayleigh_resolution(make_geometry()) / 16.0;
  int count = static_cast<int>(std::floor((elevation_max - elevation_min) / ds)) + 1;
  return geometry::ElevationGrid::regular(elevation_min, ds, count);
}

fusion::RobustLossSpec PipelineConfig::effective_loss() const {
  fusion::RobustLossSpec spec = loss;
  if (loss_scale_override > 0.0)
    spec.scale = loss_scale_override;
  else
    spec.scale = 2.0 * make_grid().spacing();
  return spec;
}

void PipelineConfig::validate() const {
  require(wavelength > 0.0, ErrorKind::config, "wavelength must be positive");
  require(slant_range > 0.0, ErrorKind::config, "slant range must be positive");
  require(incidence_deg > 0.0 && incidence_deg < 180.0, ErrorKind::config,
          "incidence angle must be in (0, 180)");
  require(scene.width > 0 && scene.height > 0, ErrorKind::config,
          "scene dimensions must be positive");
  require(elevation_max > elevation_min, ErrorKind::config,
          "elevation range is empty");
  filter.validate();
  selection.validate();
  require(prior_variance > 0.0, ErrorKind::config, "prior variance must be positive");
  require(truncation > 0.0, ErrorKind::config, "truncation must be positive");
  require(bin_width > 0.0, ErrorKind::config, "bin width must be positive");
  require(workers >= 1, ErrorKind::config, "worker count must be >= 1");
  require(ground_ring >= 1, ErrorKind::config, "ground ring must be >= 1");
  // Loss scale checked at use; override 0 means derived.
  require(loss_scale_override >= 0.0, ErrorKind::config,
          "loss scale must be nonnegative");
}

std::string PipelineConfig::canonical_text() const {
  std::ostringstream out;
  out.precision(17);
  auto geom = make_geometry();
  out << "geometry.wavelength=" << wavelength << '\n';
  out << "geometry.slant_range=" << slant_range << '\n';
  out << "geometry.incidence_deg=" << incidence_deg << '\n';
  for (const auto& a : geom.acquisitions())
    out << "geometry.acquisition=" << a.b_master << ' ' << a.delta_b << '\n';
  out << "scene.width=" << scene.width << '\n';
  out << "scene.height=" << scene.height << '\n';
  out << "scene.building_count=" << scene.building_count << '\n';
  out << "scene.height_min=" << scene.height_min_m << '\n';
  out << "scene.height_max=" << scene.height_max_m << '\n';
  out << "scene.side_min=" << scene.side_min << '\n';
  out << "scene.side_max=" << scene.side_max << '\n';
  out << "scene.margin=" << scene.margin << '\n';
  out << "scene.layover_depth=" << scene.layover_depth << '\n';
  out << "scene.ground_power=" << scene.ground_power << '\n';
  out << "scene.roof_power_min=" << scene.roof_power_min << '\n';
  out << "scene.roof_power_max=" << scene.roof_power_max << '\n';
  out << "scene.point_scatterers=" << (scene.point_scatterers ? 1 : 0) << '\n';
  out << "scene.pixel_spacing_range=" << scene.pixel_spacing_range << '\n';
  out << "scene.pixel_spacing_azimuth=" << scene.pixel_spacing_azimuth << '\n';
  for (const auto& b : scene.buildings)
    out << "scene.building=" << b.x << ' ' << b.y << ' ' << b.w << ' ' << b.h << ' '
        << b.height_m << ' ' << b.roof_power << '\n';
  out << "noise.enabled=" << (noise.enabled ? 1 : 0) << '\n';
  out << "noise.snr_db=" << noise.snr_db << '\n';
  out << "filter.patch_radius=" << filter.patch_radius << '\n';
  out << "filter.search_radius=" << filter.search_radius << '\n';
  out << "filter.bandwidth=" << filter.bandwidth << '\n';
  out << "filter.phase_weight=" << filter.phase_weight << '\n';
  out << "filter.iterations=" << filter.iterations << '\n';
  out << "filter.refine_patch_radius=" << filter.refine_patch_radius << '\n';
  out << "filter.refine_bandwidth=" << filter.refine_bandwidth << '\n';
  out << "inversion.elevation_min=" << elevation_min << '\n';
  out << "inversion.elevation_max=" << elevation_max << '\n';
  out << "inversion.grid_spacing=" << grid_spacing << '\n';
  out << "inversion.lambda_scale=" << selection.lambda_scale << '\n';
  out << "inversion.lambda_reg=" << selection.lambda_reg << '\n';
  out << "inversion.penalty_multiplier=" << selection.penalty_multiplier << '\n';
  out << "inversion.max_order=" << selection.max_order << '\n';
  out << "inversion.peak_fraction=" << selection.peak_fraction << '\n';
  out << "inversion.min_power_fraction=" << selection.min_power_fraction << '\n';
  out << "inversion.cs_max_iterations=" << selection.cs_max_iterations << '\n';
  out << "inversion.cs_tolerance=" << selection.cs_tolerance << '\n';
  out << "inversion.prior_variance=" << prior_variance << '\n';
  out << "inversion.condition_limit=" << condition_limit << '\n';
  out << "inversion.matrix_cap=" << matrix_cap << '\n';
  out << "fusion.loss="
      << (loss.kind == fusion::LossKind::squared
              ? "squared"
              : loss.kind == fusion::LossKind::huber ? "huber" : "tukey")
      << '\n';
  out << "fusion.scale=" << loss_scale_override << '\n';
  out << "fusion.max_iterations=" << loss.max_iterations << '\n';
  out << "fusion.tolerance=" << loss.tolerance << '\n';
  out << "fusion.ground_ring=" << ground_ring << '\n';
  out << "validation.truncation=" << truncation << '\n';
  out << "validation.bin_width=" << bin_width << '\n';
  out << "validation.coregister_max_shift=" << coregister_max_shift << '\n';
  out << "run.seed=" << seed << '\n';
  return out.str();
}

std::string PipelineConfig::hash() const {
  Fnv1a h;
  h.update(canonical_text());
  return hash_hex(h.digest());
}

}  // namespace mmt::config
