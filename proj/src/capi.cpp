#include "mmtomo.h"

#include <cstring>
#include <sstream>
#include <string>

#include "mmtomo/config.hpp"
#include "mmtomo/pipeline.hpp"
#include "mmtomo/plot.hpp"

struct mmt_pipeline {
  mmt::config::PipelineConfig config;
  std::string last_error;
  std::string hash_cache;
};

namespace {

mmt_status status_from(const mmt::Error& e) {
  switch (e.kind()) {
    case mmt::ErrorKind::config:
      return MMT_ERR_CONFIG;
    case mmt::ErrorKind::io:
      return MMT_ERR_IO;
    case mmt::ErrorKind::internal:
      return MMT_ERR_INTERNAL;
    default:
      return MMT_ERR_STAGE;
  }
}

template <typename Fn>
mmt_status guarded(mmt_pipeline* p, Fn&& fn) {
  try {
    fn();
    p->last_error.clear();
    return MMT_OK;
  } catch (const mmt::Error& e) {
    p->last_error = e.what();
    return status_from(e);
  } catch (const std::exception& e) {
    p->last_error = e.what();
    return MMT_ERR_INTERNAL;
  }
}

mmt_status create_common(mmt_pipeline** out, mmt::config::PipelineConfig cfg) {
  auto* p = new mmt_pipeline{std::move(cfg), {}, {}};
  *out = p;
  return MMT_OK;
}

}  // namespace

extern "C" {

const char* mmt_version(void) { return mmt::pipeline::kVersion; }

mmt_status mmt_pipeline_create(const char* config_path, mmt_pipeline** out) {
  if (!config_path || !out) return MMT_ERR_USAGE;
  *out = nullptr;
  try {
    return create_common(out, mmt::config::load_config(config_path));
  } catch (const mmt::Error& e) {
    // No handle to stash the message in; callers can re-run with text input.
    return status_from(e);
  } catch (...) {
    return MMT_ERR_INTERNAL;
  }
}

mmt_status mmt_pipeline_create_from_text(const char* config_text,
                                         mmt_pipeline** out) {
  if (!config_text || !out) return MMT_ERR_USAGE;
  *out = nullptr;
  try {
    return create_common(out, mmt::config::parse_config_text(config_text));
  } catch (const mmt::Error& e) {
    return status_from(e);
  } catch (...) {
    return MMT_ERR_INTERNAL;
  }
}

void mmt_pipeline_destroy(mmt_pipeline* pipeline) { delete pipeline; }

mmt_status mmt_pipeline_set_seed(mmt_pipeline* pipeline, uint64_t seed) {
  if (!pipeline) return MMT_ERR_USAGE;
  pipeline->config.seed = seed;
  return MMT_OK;
}

mmt_status mmt_pipeline_set_workers(mmt_pipeline* pipeline, int workers) {
  if (!pipeline) return MMT_ERR_USAGE;
  return guarded(pipeline, [&] {
    mmt::require(workers >= 1, mmt::ErrorKind::config,
                 "worker count must be >= 1");
    pipeline->config.workers = workers;
  });
}

mmt_status mmt_pipeline_set_output_dir(mmt_pipeline* pipeline, const char* dir) {
  if (!pipeline || !dir) return MMT_ERR_USAGE;
  pipeline->config.out_dir = dir;
  return MMT_OK;
}

const char* mmt_pipeline_config_hash(mmt_pipeline* pipeline) {
  if (!pipeline) return "";
  pipeline->hash_cache = pipeline->config.hash();
  return pipeline->hash_cache.c_str();
}

mmt_status mmt_pipeline_run(mmt_pipeline* pipeline, const char* stages) {
  if (!pipeline || !stages) return MMT_ERR_USAGE;
  return guarded(pipeline, [&] {
    std::vector<std::string> list;
    std::string spec(stages);
    if (spec == "all") {
      list = mmt::pipeline::Pipeline::stage_names();
    } else {
      std::istringstream in(spec);
      std::string item;
      while (std::getline(in, item, ',')) {
        if (!item.empty()) list.push_back(item);
      }
    }
    mmt::require(!list.empty(), mmt::ErrorKind::config, "no stages requested");
    mmt::pipeline::Pipeline runner(pipeline->config);
    runner.run(list);
  });
}

const char* mmt_pipeline_last_error(const mmt_pipeline* pipeline) {
  return pipeline ? pipeline->last_error.c_str() : "";
}

mmt_status mmt_plot(const char* input_path, const char* kind,
                    const char* output_path, char* err, size_t err_len) {
  auto set_err = [&](const std::string& msg) {
    if (err && err_len > 0) {
      std::strncpy(err, msg.c_str(), err_len - 1);
      err[err_len - 1] = '\0';
    }
  };
  if (!input_path || !kind || !output_path) {
    set_err("input, kind and output are required");
    return MMT_ERR_USAGE;
  }
  try {
    std::string k(kind);
    if (k == "histogram") {
      mmt::plot::plot_histogram_svg(input_path, output_path);
    } else if (k == "height-raster") {
      mmt::plot::plot_height_raster_ppm(input_path, output_path);
    } else {
      set_err("unknown plot kind '" + k + "'; use histogram or height-raster");
      return MMT_ERR_USAGE;
    }
    return MMT_OK;
  } catch (const mmt::Error& e) {
    set_err(e.what());
    return status_from(e);
  } catch (const std::exception& e) {
    set_err(e.what());
    return MMT_ERR_INTERNAL;
  }
}

}  // extern "C"
