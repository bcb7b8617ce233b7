#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "mmtomo/config.hpp"
#include "mmtomo/io.hpp"
#include "mmtomo/pipeline.hpp"
#include "mmtomo/plot.hpp"
#include "mmtomo/rng.hpp"

using namespace mmt;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig =
    "[scene]\n"
    "width = 48\n"
    "height = 48\n"
    "building_count = 3\n"
    "side_min = 8\n"
    "side_max = 11\n"
    "height_min = 8\n"
    "height_max = 40\n"
    "[filter]\n"
    "search_radius = 6\n"
    "[run]\n"
    "seed = 4242\n";

fs::path pipeline_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "mmtomo_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("full pipeline produces a sane report on a small scene") {
  fs::path dir = pipeline_dir("full");
  auto cfg = config::parse_config_text(kSmallConfig);
  cfg.out_dir = dir.string();
  cfg.workers = 2;
  pipeline::Pipeline runner(cfg);
  runner.run(pipeline::Pipeline::stage_names());

  for (const char* name :
       {"stack.json", "stack.bin", "truth.json", "footprints.bin",
        "filtered.json", "enl.json", "scatterers.json", "heights.csv",
        "report.json", "histogram.csv", "manifest.json"})
    CHECK(fs::exists(dir / name));

  auto j = nlohmann::json::parse(io::read_file(dir / "report.json"));
  CHECK(j.at("compared").get<int>() == 3);
  CHECK(j.at("within_2m_fraction").get<double>() >= 2.0 / 3.0);
  CHECK(j.at("config_hash").get<std::string>() == cfg.hash());

  auto manifest = io::read_manifest(dir / "manifest.json");
  REQUIRE(manifest.has_value());
  CHECK(manifest->config_hash == cfg.hash());
  CHECK(manifest->stages.size() == 5);

  SUBCASE("plot renders deterministically with truncation markers") {
    plot::plot_histogram_svg(dir / "report.json", dir / "hist.svg");
    std::string first = io::read_file(dir / "hist.svg");
    plot::plot_histogram_svg(dir / "report.json", dir / "hist2.svg");
    CHECK(first == io::read_file(dir / "hist2.svg"));
    CHECK(first.find("stroke-dasharray") != std::string::npos);
    CHECK(first.find("15.000") != std::string::npos);
    CHECK(first.find("-15.000") != std::string::npos);

    plot::plot_height_raster_ppm(dir / "scatterers", dir / "heights.ppm");
    std::string ppm = io::read_file(dir / "heights.ppm");
    CHECK(ppm.substr(0, 2) == "P6");
    CHECK(ppm.size() > 48u * 48u * 3u);
  }

  SUBCASE("validate against an external point reference with a rigid shift") {
    io::TruthData truth = io::read_truth(dir / "truth.json");
    Rng rng(5);
    nlohmann::json points = nlohmann::json::array();
    std::map<int, double> true_height;
    for (const auto& o : truth.objects) true_height[o.id] = o.height_m;
    for (int y = 0; y < truth.footprints.height(); ++y)
      for (int x = 0; x < truth.footprints.width(); ++x) {
        int id = truth.footprints.at(x, y);
        double z = id == 0 ? 0.0 : true_height[id];
        // jittered, shifted survey-style points
        points.push_back({x * truth.pixel_spacing_range + 3.0 + rng.uniform(-0.3, 0.3),
                          y * truth.pixel_spacing_azimuth - 2.0 + rng.uniform(-0.3, 0.3),
                          z + 1.0});
      }
    nlohmann::json ref{{"points", points}};
    io::atomic_write(dir / "reference_points.json", ref.dump());

    auto cfg2 = config::parse_config_text(kSmallConfig);
    cfg2.out_dir = dir.string();
    cfg2.reference_path = (dir / "reference_points.json").string();
    pipeline::Pipeline validate_runner(cfg2);
    validate_runner.run({"validate"});

    auto jr = nlohmann::json::parse(io::read_file(dir / "report.json"));
    CHECK(jr.at("reference_provenance").get<std::string>() ==
          "external points (co-registered)");
    CHECK(jr.at("compared").get<int>() >= 2);
    CHECK(jr.at("within_2m_fraction").get<double>() >= 0.5);
  }

  SUBCASE("a changed config aborts downstream stages on the hash check") {
    auto cfg_changed = config::parse_config_text(kSmallConfig);
    cfg_changed.out_dir = dir.string();
    cfg_changed.seed = 999;  // data-affecting change
    pipeline::Pipeline other(cfg_changed);
    CHECK_THROWS_WITH_AS(other.run({"filter"}),
                         doctest::Contains("different configuration"), Error);
  }
}

TEST_CASE("plot handles empty histograms and malformed artifacts") {
  fs::path dir = pipeline_dir("plot");
  // all-dropped report: empty histogram must render axes-only
  nlohmann::json empty{{"bin_edges", {-15.0, -14.5, -14.0}},
                       {"histogram", {0, 0}},
                       {"truncation", 15.0}};
  io::atomic_write(dir / "empty.json", empty.dump());
  plot::plot_histogram_svg(dir / "empty.json", dir / "empty.svg");
  std::string svg = io::read_file(dir / "empty.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<rect x=") == std::string::npos);  // no bars

  io::atomic_write(dir / "broken.json", "{\"histogram\": [1, 2");
  CHECK_THROWS_WITH_AS(plot::plot_histogram_svg(dir / "broken.json", dir / "x.svg"),
                       doctest::Contains("byte"), Error);
}

TEST_CASE("stage subsets run in canonical order and unknown stages fail") {
  fs::path dir = pipeline_dir("order");
  auto cfg = config::parse_config_text(kSmallConfig);
  cfg.out_dir = dir.string();
  pipeline::Pipeline runner(cfg);
  CHECK_THROWS_AS(runner.run({"transmogrify"}), Error);
  // listing stages out of order still executes simulate before filter
  runner.run({"filter", "simulate"});
  CHECK(fs::exists(dir / "filtered.json"));
}
