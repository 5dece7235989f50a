#include <algorithm>
#include <bit>
#include <fstream>

#include "lmgnn/checkpoint.hpp"
#include "lmgnn/errors.hpp"

namespace lmgnn {

static_assert(std::endian::native == std::endian::little, "params.bin is written little-endian");

void save_checkpoint(const std::filesystem::path& dir, const ParamList& params, const Vocab& vocab,
                     const nlohmann::json& meta) {
  std::filesystem::create_directories(dir);
  nlohmann::json arrays = nlohmann::json::array();
  std::ofstream bin(dir / "params.bin", std::ios::binary | std::ios::trunc);
  LMGNN_CHECK(bin.good(), LoadError, (dir / "params.bin").string() << ": cannot write");
  std::size_t offset = 0;
  for (const auto& p : params) {
    arrays.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    const auto data = p.tensor.data();
    bin.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    offset += data.size();
  }
  LMGNN_CHECK(bin.good(), LoadError, (dir / "params.bin").string() << ": write failed");
  std::ofstream manifest(dir / "manifest.json", std::ios::trunc);
  manifest << nlohmann::json{{"meta", meta}, {"arrays", arrays}}.dump(2) << '\n';
  vocab.save(dir / "vocab.txt");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream manifest_in(dir / "manifest.json");
  LMGNN_CHECK(manifest_in.good(), LoadError, dir.string() << ": no manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(dir.string() + "/manifest.json: " + e.what());
  }
  std::ifstream bin(dir / "params.bin", std::ios::binary | std::ios::ate);
  LMGNN_CHECK(bin.good(), LoadError, dir.string() << ": no params.bin");
  const auto bytes = static_cast<std::size_t>(bin.tellg());
  LMGNN_CHECK(bytes % sizeof(double) == 0, LoadError, "params.bin: truncated");
  std::vector<double> values(bytes / sizeof(double));
  bin.seekg(0);
  bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(bytes));

  Checkpoint out;
  out.vocab = Vocab::load(dir / "vocab.txt");
  try {
    out.meta = manifest.at("meta");
    for (const auto& a : manifest.at("arrays")) {
      const auto shape = a.at("shape").get<Shape>();
      const auto offset = a.at("offset").get<std::size_t>();
      const auto n = shape_numel(shape);
      LMGNN_CHECK(offset + n <= values.size(), LoadError,
                  "params.bin: array '" << a.at("name").get<std::string>() << "' out of bounds");
      out.arrays[a.at("name").get<std::string>()] = Tensor::from(
          shape, std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(offset),
                                     values.begin() + static_cast<std::ptrdiff_t>(offset + n)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(dir.string() + "/manifest.json: " + e.what());
  }
  return out;
}

void assign_params(const ParamList& params, const Checkpoint& checkpoint) {
  for (const auto& p : params) {
    auto it = checkpoint.arrays.find(p.name);
    LMGNN_CHECK(it != checkpoint.arrays.end(), LoadError, "checkpoint lacks array '" << p.name << "'");
    LMGNN_CHECK(it->second.shape() == p.tensor.shape(), LoadError,
                "array '" << p.name << "' has shape " << shape_str(it->second.shape())
                          << ", model expects " << shape_str(p.tensor.shape()));
  }
  for (const auto& p : params) {
    Tensor t = p.tensor;
    const auto src = checkpoint.arrays.at(p.name).data();
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
}

std::vector<std::vector<double>> snapshot(const ParamList& params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore(const ParamList& params, const std::vector<std::vector<double>>& values) {
  LMGNN_CHECK(params.size() == values.size(), ContractError, "snapshot size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    LMGNN_CHECK(t.numel() == values[i].size(), ContractError, "snapshot shape mismatch");
    std::copy(values[i].begin(), values[i].end(), t.mutable_data().begin());
  }
}

}  // namespace lmgnn
