#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lmgnn/config.hpp"
#include "lmgnn/errors.hpp"

namespace lmgnn {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  LMGNN_CHECK(ec == std::errc() && ptr == end, ConfigError,
              "key '" << key << "': '" << value << "' is not a valid number");
  return out;
}

template <typename T>
T positive(const std::string& key, const std::string& value) {
  const T v = parse_number<T>(key, value);
  LMGNN_CHECK(v > 0, ConfigError, "key '" << key << "': must be positive, got " << value);
  return v;
}

template <typename T>
T non_negative(const std::string& key, const std::string& value) {
  const T v = parse_number<T>(key, value);
  LMGNN_CHECK(v >= 0, ConfigError, "key '" << key << "': must be >= 0, got " << value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

template <typename T>
T one_of(const std::string& key, T v, const std::set<T>& allowed) {
  if (!allowed.contains(v)) {
    std::ostringstream msg;
    msg << "key '" << key << "': " << v << " not in {";
    bool first = true;
    for (const auto& a : allowed) msg << (std::exchange(first, false) ? "" : ", ") << a;
    throw ConfigError(msg.str() + "}");
  }
  return v;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  c.train.stages.clear();
  std::vector<std::int32_t> epochs = {1};
  std::vector<std::string> stage_names;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"graph_dir", [&](auto&, auto& v) { c.graph_dir = v; }},
      {"out_dir", [&](auto&, auto& v) { c.train.out_dir = v; }},
      {"task", [&](auto&, auto& v) { c.train.task = parse_task(v); }},
      {"stages", [&](auto&, auto& v) { stage_names = split_list(v); }},
      {"epochs",
       [&](auto& k, auto& v) {
         epochs.clear();
         for (const auto& e : split_list(v)) epochs.push_back(non_negative<std::int32_t>(k, e));
       }},
      {"batch_size", [&](auto& k, auto& v) { c.train.batch_size = positive<std::size_t>(k, v); }},
      {"fanouts",
       [&](auto& k, auto& v) {
         c.train.sampler.fanouts.clear();
         for (const auto& f : split_list(v)) c.train.sampler.fanouts.push_back(positive<std::int32_t>(k, f));
       }},
      {"num_layers",
       [&](auto& k, auto& v) {
         c.model.gnn.num_layers = one_of<std::int32_t>(k, parse_number<std::int32_t>(k, v), {1, 2, 3});
       }},
      {"hidden_dim",
       [&](auto& k, auto& v) {
         c.model.gnn.hidden_dim = one_of<std::size_t>(k, parse_number<std::size_t>(k, v), {128, 256, 512});
       }},
      {"learning_rate",
       [&](auto& k, auto& v) {
         const double lr = parse_number<double>(k, v);
         bool ok = false;
         for (double a : {1e-3, 1e-4, 1e-5}) ok = ok || std::abs(lr - a) <= 1e-12;
         LMGNN_CHECK(ok, ConfigError, "key '" << k << "': " << v << " not in {1e-3, 1e-4, 1e-5}");
         c.train.learning_rate = lr;
       }},
      {"negatives_k", [&](auto& k, auto& v) { c.train.negatives_k = positive<std::size_t>(k, v); }},
      {"negative_mode",
       [&](auto& k, auto& v) {
         if (v == "joint") c.train.negative_mode = NegativeMode::kJoint;
         else if (v == "independent") c.train.negative_mode = NegativeMode::kIndependent;
         else throw ConfigError("key '" + k + "': expected joint or independent, got '" + v + "'");
       }},
      {"train_nodes_per_batch",
       [&](auto& k, auto& v) { c.train.budget.train_nodes_per_batch = positive<std::size_t>(k, v); }},
      {"inference_batch_size",
       [&](auto& k, auto& v) { c.train.budget.inference_batch_size = positive<std::size_t>(k, v); }},
      {"cache_capacity", [&](auto& k, auto& v) { c.train.cache_capacity = non_negative<std::size_t>(k, v); }},
      {"cache_staleness",
       [&](auto& k, auto& v) { c.train.cache_staleness = non_negative<std::int64_t>(k, v); }},
      {"use_cache", [&](auto& k, auto& v) { c.train.use_cache = parse_bool(k, v); }},
      {"target_mode",
       [&](auto& k, auto& v) {
         if (v == "global") c.train.target_mode = TargetMode::kGlobal;
         else if (v == "partition_local") c.train.target_mode = TargetMode::kPartitionLocal;
         else throw ConfigError("key '" + k + "': expected global or partition_local, got '" + v + "'");
       }},
      {"leaf_partitions",
       [&](auto& k, auto& v) {
         c.train.leaf_partitions = positive<std::int32_t>(k, v);
         LMGNN_CHECK(c.train.leaf_partitions >= 2, ConfigError, "key '" << k << "': must be >= 2");
       }},
      {"seed", [&](auto& k, auto& v) { c.train.seed = parse_number<std::uint64_t>(k, v); }},
      {"mlm_steps", [&](auto& k, auto& v) { c.mlm_steps = non_negative<std::int64_t>(k, v); }},
      {"mlm_batch_size", [&](auto& k, auto& v) { c.mlm_batch_size = positive<std::size_t>(k, v); }},
      {"aggregation",
       [&](auto& k, auto& v) {
         if (v == "mean") c.model.gnn.aggregation = Aggregation::kMean;
         else if (v == "sum") c.model.gnn.aggregation = Aggregation::kSum;
         else throw ConfigError("key '" + k + "': expected mean or sum, got '" + v + "'");
       }},
      {"activate_last", [&](auto& k, auto& v) { c.model.gnn.activate_last = parse_bool(k, v); }},
      {"include_reverse",
       [&](auto& k, auto& v) {
         c.model.include_reverse = parse_bool(k, v);
         c.train.sampler.include_reverse = c.model.include_reverse;
       }},
      {"head_bias", [&](auto& k, auto& v) { c.model.head_bias = parse_bool(k, v); }},
      {"per_type_encoder", [&](auto& k, auto& v) { c.model.per_type_encoder = parse_bool(k, v); }},
      {"warm_decoder", [&](auto& k, auto& v) { c.train.warm_decoder = parse_bool(k, v); }},
      {"prefetch", [&](auto& k, auto& v) { c.train.prefetch = parse_bool(k, v); }},
      {"encoder_dim", [&](auto& k, auto& v) { c.model.encoder.dim = positive<std::size_t>(k, v); }},
      {"encoder_layers", [&](auto& k, auto& v) { c.model.encoder.layers = positive<std::size_t>(k, v); }},
      {"encoder_heads", [&](auto& k, auto& v) { c.model.encoder.heads = positive<std::size_t>(k, v); }},
      {"max_len",
       [&](auto& k, auto& v) {
         c.model.encoder.max_len = positive<std::size_t>(k, v);
         LMGNN_CHECK(c.model.encoder.max_len >= 2, ConfigError, "key '" << k << "': must be >= 2");
       }},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    LMGNN_CHECK(eq != std::string::npos, ConfigError, "line " << line_no << ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    LMGNN_CHECK(it != setters.end(), ConfigError, "unknown key '" << key << "' (line " << line_no << ")");
    LMGNN_CHECK(seen.insert(key).second, ConfigError, "key '" << key << "' given twice");
    LMGNN_CHECK(!value.empty(), ConfigError, "key '" << key << "': empty value");
    it->second(key, value);
  }

  c.train.sampler.num_layers = c.model.gnn.num_layers;
  LMGNN_CHECK(!c.graph_dir.empty(), ConfigError, "key 'graph_dir' is required");
  LMGNN_CHECK(!stage_names.empty(), ConfigError, "key 'stages' is required");
  LMGNN_CHECK(epochs.size() == 1 || epochs.size() == stage_names.size(), ConfigError,
              "key 'epochs': give one value or one per stage");
  for (std::size_t i = 0; i < stage_names.size(); ++i)
    c.train.stages.push_back({parse_stage(stage_names[i]), epochs.size() == 1 ? epochs[0] : epochs[i]});
  LMGNN_CHECK(c.model.encoder.dim % c.model.encoder.heads == 0, ConfigError,
              "key 'encoder_heads': must divide encoder_dim");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  LMGNN_CHECK(in.good(), ConfigError, path.string() << ": cannot read config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace lmgnn
