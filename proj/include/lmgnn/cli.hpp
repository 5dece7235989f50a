#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lmgnn/evaluate.hpp"
#include "lmgnn/graph.hpp"

namespace lmgnn {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// Writes the generated graph; refuses a non-empty directory unless `force`.
void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out_dir, bool force);

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  bool force = false;
};

// Runs the configured stage plan, writes checkpoints, metrics.jsonl and
// test_report.json under the output directory, and returns the test report.
EvalReport cmd_train(const std::filesystem::path& config_path, const TrainOverrides& overrides);

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& graph_dir,
                    const std::string& task, const std::string& split);

// One line per node: type name, local id, then the embedding values.
void cmd_dump_embeddings(const std::filesystem::path& checkpoint,
                         const std::filesystem::path& graph_dir, const std::filesystem::path& out);

// Parses arguments and dispatches, mapping failures to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lmgnn
