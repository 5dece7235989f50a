#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmgnn/tensor.hpp"

// Differentiable operations. Every op records itself onto the thread's active
// tape when at least one input requires a gradient.
namespace lmgnn {

// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double factor);
// [B x F] + [F] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// [B x F] * [F] broadcast over rows.
Tensor mul_row(const Tensor& a, const Tensor& row);

Tensor relu(const Tensor& a);
// tanh approximation.
Tensor gelu(const Tensor& a);
// log(1 + exp(x)), overflow-free for large |x|.
Tensor softplus(const Tensor& a);

Tensor sum(const Tensor& a);   // -> [1]
Tensor mean(const Tensor& a);  // -> [1]
// [B x F] -> [B]
Tensor row_sum(const Tensor& a);

// Per-row normalization to zero mean / unit variance, then gain and bias.
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Mean over rows of -log softmax(logits)[label]. logits is [B x C].
Tensor softmax_cross_entropy(const Tensor& logits,
                             std::span<const std::int64_t> labels);

// out[i] = a[indices[i]]; backward scatter-adds.
Tensor gather_rows(const Tensor& a, std::span<const std::int64_t> indices);
Tensor concat_rows(const std::vector<Tensor>& parts);
// [B x F1] || [B x F2] -> [B x (F1 + F2)]
Tensor concat_cols(const Tensor& a, const Tensor& b);

// out[d] = sum (or mean) over k with dst[k] == d of src_rows[src[k]].
// Rows of destinations without incoming entries are zero.
Tensor scatter_aggregate(const Tensor& src_rows,
                         std::span<const std::int64_t> dst,
                         std::span<const std::int64_t> src,
                         std::size_t num_dst, bool mean);

// Scaled dot-product attention over packed sequences.
//   qkv:      [batch*seq x 3F], columns = Q | K | V
//   key_mask: batch*seq flags, true = key may be attended to
// Returns the per-head context concatenated back to [batch*seq x F].
Tensor multi_head_attention(const Tensor& qkv, std::span<const std::uint8_t> key_mask,
                            std::size_t batch, std::size_t seq,
                            std::size_t heads);

// Scalar and array helpers used by tests and decoders.
double softplus_value(double x);

}  // namespace lmgnn
