#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmgnn/tensor.hpp"

namespace lmgnn {

/// Token <-> id map. Ids 0-4 are the special tokens; corpus tokens follow in
/// lexicographic order.
class Vocab {
 public:
  static constexpr std::int64_t kCls = 0;
  static constexpr std::int64_t kSep = 1;
  static constexpr std::int64_t kPad = 2;
  static constexpr std::int64_t kMask = 3;
  static constexpr std::int64_t kUnk = 4;
  static constexpr std::int64_t kNumSpecial = 5;

  Vocab();
  static Vocab build(std::span<const std::string> corpus);
  // One token per line; line i holds id i + kNumSpecial.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::int64_t id(const std::string& token) const;
  const std::string& token(std::int64_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }

 private:
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> index_;
};

// Lowercased whitespace split.
std::vector<std::string> split_words(const std::string& text);

// [CLS] + word ids, truncated to max_len, right-padded with [PAD].
std::vector<std::int64_t> tokenize(const Vocab& vocab, const std::string& text,
                                   std::size_t max_len);

// Row-major id matrix.
struct TokenBatch {
  std::size_t rows = 0;
  std::size_t seq = 0;
  std::vector<std::int64_t> ids;
};

// Tokenizes and trims trailing all-[PAD] columns; the encoder output does not
// depend on padding width.
TokenBatch make_token_batch(const Vocab& vocab, std::span<const std::string> texts,
                            std::size_t max_len);

struct TextEncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t max_len = 32;
};

/// Small post-LN transformer encoder standing in for BERT. The sequence
/// embedding is the final hidden state at the [CLS] position.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(const TextEncoderConfig& config, std::mt19937_64& rng);

  const TextEncoderConfig& config() const { return config_; }

  // [rows x dim], differentiable.
  Tensor encode_cls(const TokenBatch& batch) const;
  // [rows*seq x dim] hidden states of every position.
  Tensor hidden_states(const TokenBatch& batch) const;
  // Vocabulary logits for selected packed positions of `hidden`.
  Tensor mlm_logits(const Tensor& hidden, std::span<const std::int64_t> positions) const;

  ParamList params(const std::string& prefix) const;

 private:
  struct Layer {
    Tensor w_qkv, b_qkv, w_out, b_out, ln1_gain, ln1_bias;
    Tensor w_ff1, b_ff1, w_ff2, b_ff2, ln2_gain, ln2_bias;
  };

  Tensor embed(const TokenBatch& batch, std::vector<std::uint8_t>& key_mask) const;
  Tensor run_layer(const Layer& layer, const Tensor& x, const TokenBatch& batch,
                   std::span<const std::uint8_t> key_mask, bool cls_only) const;

  TextEncoderConfig config_;
  Tensor token_embedding_, position_embedding_, emb_ln_gain_, emb_ln_bias_;
  std::vector<Layer> layers_;
  Tensor mlm_weight_, mlm_bias_;
};

struct MlmStepResult {
  double loss = 0.0;
  std::size_t masked = 0;
  bool no_mask = false;  // nothing was masked: zero loss, no gradient
};

// Masks each non-special token with probability mask_prob, runs the forward
// pass on a fresh tape and back-propagates the masked-position cross-entropy.
// Gradients are left on the encoder parameters for the caller's optimizer.
MlmStepResult mlm_pretrain_step(const TextEncoder& encoder, const TokenBatch& batch,
                                double mask_prob, std::uint64_t seed);

}  // namespace lmgnn
