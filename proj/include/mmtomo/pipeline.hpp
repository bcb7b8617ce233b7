#ifndef MMTOMO_PIPELINE_HPP
#define MMTOMO_PIPELINE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mmtomo/config.hpp"

namespace mmt::pipeline {

namespace fs = std::filesystem;

inline const char* kVersion = "0.1.0";

/// Stage orchestrator and artifact authority. Stages read prior artifacts
/// from disk, verify their config hash, and write their own atomically.
class Pipeline {
public:
  explicit Pipeline(config::PipelineConfig cfg);

  void set_seed(std::uint64_t seed) { cfg_.seed = seed; }
  void set_workers(int workers);
  void set_out_dir(std::string dir) { cfg_.out_dir = std::move(dir); }
  const config::PipelineConfig& config() const { return cfg_; }

  static const std::vector<std::string>& stage_names();

  /// Runs the listed stages in canonical order. Unknown names are rejected;
  /// missing prerequisite artifacts name the stage that produces them.
  void run(const std::vector<std::string>& stages);

  fs::path out_dir() const { return fs::path(cfg_.out_dir); }

private:
  void run_simulate();
  void run_filter();
  void run_invert();
  void run_fuse();
  void run_validate();

  void record_stage(const std::string& name, double wall_time_s,
                    std::vector<std::string> artifacts);
  void check_artifact_hash(const std::string& artifact,
                           const std::string& artifact_hash) const;

  config::PipelineConfig cfg_;
};

}  // namespace mmt::pipeline

#endif
