#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lmgnn/model.hpp"
#include "lmgnn/pipeline.hpp"

namespace lmgnn {

/// Everything a training run needs, read from a flat `key = value` file.
/// Blank lines and lines starting with '#' are ignored.
struct RunConfig {
  std::filesystem::path graph_dir;
  TrainConfig train;
  ModelConfig model;
  std::int64_t mlm_steps = 0;
  std::size_t mlm_batch_size = 32;
};

// ConfigError naming the offending key on unknown keys or invalid values.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace lmgnn
