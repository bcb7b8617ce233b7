#include "mmtomo/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mmtomo/io.hpp"
#include "mmtomo/parallel.hpp"

namespace mmt::pipeline {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

Pipeline::Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
}

void Pipeline::set_workers(int workers) {
  require(workers >= 1, ErrorKind::config, "worker count must be >= 1");
  cfg_.workers = workers;
}

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names = {"simulate", "filter", "invert",
                                                 "fuse", "validate"};
  return names;
}

void Pipeline::run(const std::vector<std::string>& stages) {
  const auto& known = stage_names();
  for (const auto& s : stages)
    require(std::find(known.begin(), known.end(), s) != known.end(),
            ErrorKind::config, "unknown stage '" + s + "'");
  fs::create_directories(out_dir());

  for (const auto& name : known) {
    if (std::find(stages.begin(), stages.end(), name) == stages.end()) continue;
    auto start = std::chrono::steady_clock::now();
    if (name == "simulate") run_simulate();
    else if (name == "filter") run_filter();
    else if (name == "invert") run_invert();
    else if (name == "fuse") run_fuse();
    else run_validate();
    double elapsed = seconds_since(start);
    std::vector<std::string> artifacts;
    if (name == "simulate")
      artifacts = {"stack.json", "stack.bin", "truth.json", "footprints.bin"};
    else if (name == "filter")
      artifacts = {"filtered.json", "filtered.bin", "enl.json", "enl.bin"};
    else if (name == "invert")
      artifacts = {"scatterers.json", "scatterers.bin"};
    else if (name == "fuse")
      artifacts = {"heights.csv"};
    else
      artifacts = {"report.json", "histogram.csv"};
    record_stage(name, elapsed, std::move(artifacts));
  }
}

void Pipeline::check_artifact_hash(const std::string& artifact,
                                   const std::string& artifact_hash) const {
  if (artifact_hash != cfg_.hash())
    fail(ErrorKind::stage,
         artifact + " was produced by a different configuration (hash " +
             artifact_hash + ", current " + cfg_.hash() + "); re-run earlier stages");
}

void Pipeline::record_stage(const std::string& name, double wall_time_s,
                            std::vector<std::string> artifacts) {
  fs::path manifest_path = out_dir() / "manifest.json";
  io::Manifest manifest;
  auto existing = io::read_manifest(manifest_path);
  if (existing && existing->config_hash == cfg_.hash()) manifest = *existing;
  manifest.config_hash = cfg_.hash();
  manifest.tool_version = kVersion;
  auto it = std::find_if(manifest.stages.begin(), manifest.stages.end(),
                         [&](const auto& s) { return s.name == name; });
  if (it != manifest.stages.end()) manifest.stages.erase(it);
  manifest.stages.push_back({name, wall_time_s, std::move(artifacts)});
  io::write_manifest(manifest_path, manifest);
}

void Pipeline::run_simulate() {
  sim::SceneSpec spec = cfg_.scene;
  spec.incidence_deg = cfg_.incidence_deg;
  sim::Scene scene = sim::make_urban_scene(spec, cfg_.seed);
  auto geometry = cfg_.make_geometry();
  auto result = sim::simulate_stack(scene, geometry, cfg_.noise, cfg_.seed,
                                    cfg_.elevation_min, cfg_.elevation_max,
                                    cfg_.workers);

  io::StackMeta meta;
  meta.kind = "stack";
  meta.seed = cfg_.seed;
  meta.config_hash = cfg_.hash();
  io::write_stack(out_dir() / "stack", result.stack, meta);

  io::TruthData truth;
  truth.footprints = scene.footprints();
  truth.objects = scene.objects();
  truth.incidence_deg = scene.incidence_deg;
  truth.pixel_spacing_range = scene.pixel_spacing_range;
  truth.pixel_spacing_azimuth = scene.pixel_spacing_azimuth;
  truth.seed = cfg_.seed;
  truth.config_hash = cfg_.hash();
  io::write_truth(out_dir() / "truth.json", truth);
}

void Pipeline::run_filter() {
  fs::path stack_base = out_dir() / "stack";
  if (!fs::exists(out_dir() / "stack.json"))
    fail(ErrorKind::stage, "missing stack artifact; run 'simulate' first");
  io::StackMeta meta;
  sim::InterferogramStack stack = io::read_stack(stack_base, &meta);
  check_artifact_hash("stack", meta.config_hash);

  nonlocal::FilteredStack filtered =
      nonlocal::wmle_filter(stack, cfg_.filter, cfg_.workers);

  io::StackMeta out_meta;
  out_meta.kind = "filtered_stack";
  out_meta.seed = meta.seed;
  out_meta.config_hash = cfg_.hash();
  io::write_stack(out_dir() / "filtered", filtered.stack(), out_meta);
  io::write_enl(out_dir() / "enl", filtered.enl(), cfg_.hash());
}

void Pipeline::run_invert() {
  if (!fs::exists(out_dir() / "filtered.json"))
    fail(ErrorKind::stage, "missing filtered artifact; run 'filter' first");
  io::StackMeta meta;
  sim::InterferogramStack stack = io::read_stack(out_dir() / "filtered", &meta);
  check_artifact_hash("filtered stack", meta.config_hash);
  std::string enl_hash;
  Image<float> enl = io::read_enl(out_dir() / "enl", &enl_hash);
  check_artifact_hash("ENL map", enl_hash);

  nonlocal::FilteredStack filtered(std::move(stack), std::move(enl));
  auto grid = cfg_.make_grid();
  inv::InversionReport report;
  inv::ScattererRaster raster = inv::invert_stack(filtered, grid, cfg_.selection,
                                                  cfg_.workers, &report);

  io::ScattererMeta out_meta;
  out_meta.config_hash = cfg_.hash();
  out_meta.incidence_deg = filtered.stack().incidence_deg;
  out_meta.grid_min = grid.front();
  out_meta.grid_spacing = grid.spacing();
  out_meta.grid_count = grid.size();
  out_meta.pixel_spacing_range = filtered.stack().pixel_spacing_range;
  out_meta.pixel_spacing_azimuth = filtered.stack().pixel_spacing_azimuth;
  out_meta.report = report;
  io::write_scatterers(out_dir() / "scatterers", raster, out_meta);
}

void Pipeline::run_fuse() {
  if (!fs::exists(out_dir() / "scatterers.json"))
    fail(ErrorKind::stage, "missing scatterer artifact; run 'invert' first");
  if (!fs::exists(out_dir() / "truth.json"))
    fail(ErrorKind::stage, "missing truth artifact; run 'simulate' first");
  io::ScattererMeta meta;
  inv::ScattererRaster raster = io::read_scatterers(out_dir() / "scatterers", &meta);
  check_artifact_hash("scatterer raster", meta.config_hash);
  io::TruthData truth = io::read_truth(out_dir() / "truth.json");
  check_artifact_hash("truth", truth.config_hash);

  fusion::FusionConfig fusion_cfg;
  fusion_cfg.loss = cfg_.effective_loss();
  fusion_cfg.incidence_deg = meta.incidence_deg;
  fusion_cfg.ground_ring = cfg_.ground_ring;
  auto heights = fusion::fuse_objects(raster, truth.footprints, fusion_cfg);
  io::write_heights_csv(out_dir() / "heights.csv", heights, cfg_.hash());
}

void Pipeline::run_validate() {
  if (!fs::exists(out_dir() / "heights.csv"))
    fail(ErrorKind::stage, "missing heights artifact; run 'fuse' first");
  std::string heights_hash;
  auto heights = io::read_heights_csv(out_dir() / "heights.csv", &heights_hash);
  check_artifact_hash("heights", heights_hash);

  fs::path reference_path = cfg_.reference_path.empty()
                                ? out_dir() / "truth.json"
                                : fs::path(cfg_.reference_path);
  if (!fs::exists(reference_path)) {
    if (cfg_.reference_path.empty())
      fail(ErrorKind::stage, "missing truth reference; run 'simulate' first");
    fail(ErrorKind::io, "reference file not found: " + reference_path.string());
  }

  val::ReferenceModel reference;
  if (cfg_.reference_path.empty() ||
      reference_path.filename() == "truth.json") {
    io::TruthData truth = io::read_truth(reference_path);
    reference.kind = val::ReferenceModel::Kind::objects;
    for (const auto& o : truth.objects)
      reference.object_heights[o.id] = o.height_m;
    reference.provenance = "simulator truth";
  } else {
    reference = io::read_reference(reference_path);
  }

  if (reference.kind == val::ReferenceModel::Kind::points) {
    // Dense reference: co-register against the estimated cloud, then
    // object-based rasterization onto the truth footprints.
    if (!fs::exists(out_dir() / "scatterers.json"))
      fail(ErrorKind::stage, "missing scatterer artifact; run 'invert' first");
    io::ScattererMeta meta;
    inv::ScattererRaster raster =
        io::read_scatterers(out_dir() / "scatterers", &meta);
    check_artifact_hash("scatterer raster", meta.config_hash);
    io::TruthData truth = io::read_truth(out_dir() / "truth.json");

    const double sin_inc =
        std::sin(meta.incidence_deg * 3.14159265358979323846 / 180.0);
    std::vector<val::Point3> estimated;
    for (int y = 0; y < raster.height(); ++y)
      for (int x = 0; x < raster.width(); ++x) {
        const auto& r = raster.at(x, y);
        if (r.failed || r.order < 1) continue;
        double top = r.scatterers[0].elevation;
        if (r.order == 2) top = std::max(top, r.scatterers[1].elevation);
        estimated.push_back({x * meta.pixel_spacing_range,
                             y * meta.pixel_spacing_azimuth, top * sin_inc});
      }
    val::CoregistrationConfig coreg;
    coreg.max_shift = cfg_.coregister_max_shift;
    val::Shift3 shift = val::coregister(estimated, reference.points, coreg);
    std::vector<val::Point3> aligned;
    aligned.reserve(reference.points.size());
    for (const auto& p : reference.points)
      aligned.push_back({p.x - shift.dx, p.y - shift.dy, p.z - shift.dz});
    reference = val::rasterize_reference(aligned, truth.footprints,
                                         meta.pixel_spacing_range,
                                         meta.pixel_spacing_azimuth,
                                         cfg_.effective_loss());
    reference.provenance = "external points (co-registered)";
  }

  val::ComparisonReport report =
      val::compare_heights(heights, reference, cfg_.truncation, cfg_.bin_width);
  io::write_report(out_dir() / "report.json", report, cfg_.hash(),
                   reference.provenance);
  io::write_histogram_csv(out_dir() / "histogram.csv", report);
}

}  // namespace mmt::pipeline
