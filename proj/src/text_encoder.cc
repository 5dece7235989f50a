#include <cmath>

#include "lmgnn/errors.hpp"
#include "lmgnn/ops.hpp"
#include "lmgnn/text_encoder.hpp"

namespace lmgnn {
namespace {

Tensor linear_weight(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  return Tensor::randn({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng, true);
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_bias(matmul(x, w), b);
}

std::vector<std::int64_t> cls_rows(const TokenBatch& batch) {
  std::vector<std::int64_t> rows(batch.rows);
  for (std::size_t b = 0; b < batch.rows; ++b) rows[b] = static_cast<std::int64_t>(b * batch.seq);
  return rows;
}

}  // namespace

TextEncoder::TextEncoder(const TextEncoderConfig& config, std::mt19937_64& rng)
    : config_(config) {
  const std::size_t f = config.dim;
  LMGNN_CHECK(config.vocab_size > static_cast<std::size_t>(Vocab::kNumSpecial), ContractError,
              "vocab_size must exceed the special tokens");
  LMGNN_CHECK(f > 0 && config.heads > 0 && f % config.heads == 0, ContractError,
              "dim " << f << " not divisible by heads " << config.heads);
  LMGNN_CHECK(config.layers >= 1 && config.max_len >= 2, ContractError,
              "encoder needs >= 1 layer and max_len >= 2");
  token_embedding_ = Tensor::randn({config.vocab_size, f}, 1.0, rng, true);
  position_embedding_ = Tensor::randn({config.max_len, f}, 1.0, rng, true);
  emb_ln_gain_ = Tensor::filled({f}, 1.0, true);
  emb_ln_bias_ = Tensor::zeros({f}, true);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Layer layer;
    layer.w_qkv = linear_weight(f, 3 * f, rng);
    layer.b_qkv = Tensor::zeros({3 * f}, true);
    layer.w_out = linear_weight(f, f, rng);
    layer.b_out = Tensor::zeros({f}, true);
    layer.ln1_gain = Tensor::filled({f}, 1.0, true);
    layer.ln1_bias = Tensor::zeros({f}, true);
    layer.w_ff1 = linear_weight(f, 4 * f, rng);
    layer.b_ff1 = Tensor::zeros({4 * f}, true);
    layer.w_ff2 = linear_weight(4 * f, f, rng);
    layer.b_ff2 = Tensor::zeros({f}, true);
    layer.ln2_gain = Tensor::filled({f}, 1.0, true);
    layer.ln2_bias = Tensor::zeros({f}, true);
    layers_.push_back(std::move(layer));
  }
  mlm_weight_ = linear_weight(f, config.vocab_size, rng);
  mlm_bias_ = Tensor::zeros({config.vocab_size}, true);
}

Tensor TextEncoder::embed(const TokenBatch& batch, std::vector<std::uint8_t>& key_mask) const {
  LMGNN_CHECK(batch.rows > 0 && batch.seq > 0 && batch.ids.size() == batch.rows * batch.seq,
              ShapeError, "token batch " << batch.rows << "x" << batch.seq << " holds "
                                         << batch.ids.size() << " ids");
  LMGNN_CHECK(batch.seq <= config_.max_len, ShapeError,
              "sequence length " << batch.seq << " exceeds max_len " << config_.max_len);
  for (auto id : batch.ids)
    LMGNN_CHECK(id >= 0 && static_cast<std::size_t>(id) < config_.vocab_size, IndexError,
                "token id " << id << " outside vocabulary of " << config_.vocab_size);
  std::vector<std::int64_t> positions(batch.ids.size());
  key_mask.resize(batch.ids.size());
  for (std::size_t i = 0; i < batch.ids.size(); ++i) {
    positions[i] = static_cast<std::int64_t>(i % batch.seq);
    key_mask[i] = batch.ids[i] != Vocab::kPad ? 1 : 0;
  }
  Tensor x = add(gather_rows(token_embedding_, batch.ids), gather_rows(position_embedding_, positions));
  return layer_norm(x, emb_ln_gain_, emb_ln_bias_);
}

Tensor TextEncoder::run_layer(const Layer& layer, const Tensor& x, const TokenBatch& batch,
                              std::span<const std::uint8_t> key_mask, bool cls_only) const {
  Tensor ctx = multi_head_attention(linear(x, layer.w_qkv, layer.b_qkv), key_mask, batch.rows,
                                    batch.seq, config_.heads);
  Tensor residual = x;
  if (cls_only) {
    // Only the [CLS] rows feed anything downstream of the last layer.
    const auto rows = cls_rows(batch);
    ctx = gather_rows(ctx, rows);
    residual = gather_rows(x, rows);
  }
  Tensor a = layer_norm(add(residual, linear(ctx, layer.w_out, layer.b_out)), layer.ln1_gain,
                        layer.ln1_bias);
  Tensor ff = linear(gelu(linear(a, layer.w_ff1, layer.b_ff1)), layer.w_ff2, layer.b_ff2);
  return layer_norm(add(a, ff), layer.ln2_gain, layer.ln2_bias);
}

Tensor TextEncoder::hidden_states(const TokenBatch& batch) const {
  std::vector<std::uint8_t> key_mask;
  Tensor x = embed(batch, key_mask);
  for (const auto& layer : layers_) x = run_layer(layer, x, batch, key_mask, false);
  return x;
}

Tensor TextEncoder::encode_cls(const TokenBatch& batch) const {
  std::vector<std::uint8_t> key_mask;
  Tensor x = embed(batch, key_mask);
  for (std::size_t l = 0; l < layers_.size(); ++l)
    x = run_layer(layers_[l], x, batch, key_mask, l + 1 == layers_.size());
  return x;
}

Tensor TextEncoder::mlm_logits(const Tensor& hidden, std::span<const std::int64_t> positions) const {
  return linear(gather_rows(hidden, positions), mlm_weight_, mlm_bias_);
}

ParamList TextEncoder::params(const std::string& prefix) const {
  ParamList out{{prefix + "token_embedding", token_embedding_},
                {prefix + "position_embedding", position_embedding_},
                {prefix + "embedding_ln.gain", emb_ln_gain_},
                {prefix + "embedding_ln.bias", emb_ln_bias_}};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& y = layers_[l];
    const std::string p = prefix + "layer" + std::to_string(l) + ".";
    for (const auto& [name, t] :
         std::initializer_list<std::pair<const char*, const Tensor&>>{
             {"w_qkv", y.w_qkv}, {"b_qkv", y.b_qkv}, {"w_out", y.w_out}, {"b_out", y.b_out},
             {"ln1.gain", y.ln1_gain}, {"ln1.bias", y.ln1_bias}, {"w_ff1", y.w_ff1},
             {"b_ff1", y.b_ff1}, {"w_ff2", y.w_ff2}, {"b_ff2", y.b_ff2},
             {"ln2.gain", y.ln2_gain}, {"ln2.bias", y.ln2_bias}})
      out.push_back({p + name, t});
  }
  out.push_back({prefix + "mlm.weight", mlm_weight_});
  out.push_back({prefix + "mlm.bias", mlm_bias_});
  return out;
}

MlmStepResult mlm_pretrain_step(const TextEncoder& encoder, const TokenBatch& batch,
                                double mask_prob, std::uint64_t seed) {
  LMGNN_CHECK(mask_prob > 0.0 && mask_prob < 1.0, ContractError,
              "mask_prob " << mask_prob << " outside (0, 1)");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution pick(mask_prob);
  TokenBatch masked = batch;
  std::vector<std::int64_t> positions, targets;
  for (std::size_t i = 0; i < masked.ids.size(); ++i) {
    if (masked.ids[i] < Vocab::kNumSpecial) continue;
    if (!pick(rng)) continue;
    positions.push_back(static_cast<std::int64_t>(i));
    targets.push_back(masked.ids[i]);
    masked.ids[i] = Vocab::kMask;
  }
  MlmStepResult result;
  result.masked = positions.size();
  if (positions.empty()) {
    result.no_mask = true;
    return result;
  }
  Tape tape;
  TapeScope scope(tape);
  Tensor loss = softmax_cross_entropy(
      encoder.mlm_logits(encoder.hidden_states(masked), positions), targets);
  result.loss = loss.item();
  LMGNN_CHECK(std::isfinite(result.loss), NumericalError, "MLM loss is not finite");
  tape.backward(loss);
  return result;
}

}  // namespace lmgnn
