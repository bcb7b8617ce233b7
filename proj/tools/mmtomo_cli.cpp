// Command-line front end for the mmtomo pipeline. Talks to the shared
// library exclusively through the C API.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmtomo.h"

namespace {

int exit_code_for(mmt_status status) {
  switch (status) {
    case MMT_OK:
      return 0;
    case MMT_ERR_USAGE:
      return 1;
    case MMT_ERR_CONFIG:
      return 2;
    default:
      return 3;
  }
}

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string stages;
  std::int64_t seed = -1;
  int workers = 0;
};

int run_stages(const Options& opt, const std::string& stages) {
  if (opt.config_path.empty()) {
    std::fprintf(stderr, "error: --config is required\n");
    return 1;
  }
  mmt_pipeline* pipeline = nullptr;
  mmt_status status = mmt_pipeline_create(opt.config_path.c_str(), &pipeline);
  if (status != MMT_OK) {
    std::fprintf(stderr, "error: failed to load config '%s'\n",
                 opt.config_path.c_str());
    return exit_code_for(status);
  }
  if (opt.seed >= 0)
    mmt_pipeline_set_seed(pipeline, static_cast<std::uint64_t>(opt.seed));
  if (opt.workers > 0) {
    status = mmt_pipeline_set_workers(pipeline, opt.workers);
    if (status != MMT_OK) {
      std::fprintf(stderr, "error: %s\n", mmt_pipeline_last_error(pipeline));
      mmt_pipeline_destroy(pipeline);
      return exit_code_for(status);
    }
  }
  if (!opt.out_dir.empty())
    mmt_pipeline_set_output_dir(pipeline, opt.out_dir.c_str());

  status = mmt_pipeline_run(pipeline, stages.c_str());
  if (status != MMT_OK)
    std::fprintf(stderr, "error: %s\n", mmt_pipeline_last_error(pipeline));
  else
    std::printf("done (config %s)\n", mmt_pipeline_config_hash(pipeline));
  int code = exit_code_for(status);
  mmt_pipeline_destroy(pipeline);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmtomo — multi-master SAR tomography pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mmt_version()));

  Options opt;
  app.add_option("--config", opt.config_path, "pipeline config file (INI-style)");
  app.add_option("--seed", opt.seed, "override the config seed");
  app.add_option("--workers", opt.workers, "worker thread count");
  app.add_option("--out", opt.out_dir, "output directory override");

  for (const char* name : {"simulate", "filter", "invert", "fuse", "validate"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " stage");
    sub->callback([&opt, name] { std::exit(run_stages(opt, name)); });
  }

  auto* all = app.add_subcommand("all", "run the full pipeline");
  all->add_option("--stages", opt.stages,
                  "comma-separated stage subset (default: every stage)");
  all->callback([&opt] {
    std::exit(run_stages(opt, opt.stages.empty() ? "all" : opt.stages));
  });

  std::string plot_input, plot_kind = "histogram", plot_output;
  auto* plot = app.add_subcommand("plot", "render an artifact as an image");
  plot->add_option("--input", plot_input,
                   "report.json (histogram) or scatterer base path "
                   "(height-raster)")
      ->required();
  plot->add_option("--kind", plot_kind, "histogram | height-raster");
  plot->add_option("--output", plot_output, "output image path")->required();
  plot->callback([&] {
    char err[512] = {0};
    mmt_status status = mmt_plot(plot_input.c_str(), plot_kind.c_str(),
                                 plot_output.c_str(), err, sizeof err);
    if (status != MMT_OK) std::fprintf(stderr, "error: %s\n", err);
    std::exit(exit_code_for(status));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return 0;
}
