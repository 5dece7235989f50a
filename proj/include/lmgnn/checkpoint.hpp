#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lmgnn/tensor.hpp"
#include "lmgnn/text_encoder.hpp"

namespace lmgnn {

// A checkpoint is a directory holding
//   manifest.json  {"meta": {...}, "arrays": [{"name", "shape", "offset"}, ...]}
//   params.bin     the arrays' doubles back to back, little-endian
//   vocab.txt      the vocabulary
struct Checkpoint {
  nlohmann::json meta;
  Vocab vocab;
  std::map<std::string, Tensor> arrays;
};

void save_checkpoint(const std::filesystem::path& dir, const ParamList& params, const Vocab& vocab,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Copies every named array into the matching parameter. Missing names or
// shape mismatches raise LoadError.
void assign_params(const ParamList& params, const Checkpoint& checkpoint);

// Value snapshot of a parameter list, and its inverse.
std::vector<std::vector<double>> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<std::vector<double>>& values);

}  // namespace lmgnn
