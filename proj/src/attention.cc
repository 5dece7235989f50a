#include <algorithm>
#include <cmath>
#include <limits>

#include "lmgnn/errors.hpp"
#include "lmgnn/ops.hpp"

namespace lmgnn {

// Packed layout: row (b * seq + s) of qkv holds [q | k | v] for token s of
// sequence b; head h owns columns [h*d, (h+1)*d) inside each of q, k, v.
Tensor multi_head_attention(const Tensor& qkv, std::span<const std::uint8_t> key_mask,
                            std::size_t batch, std::size_t seq,
                            std::size_t heads) {
  LMGNN_CHECK(qkv.defined() && qkv.rank() == 2, ShapeError,
              "multi_head_attention expects a rank-2 qkv tensor");
  LMGNN_CHECK(qkv.rows() == batch * seq, ShapeError,
              "multi_head_attention: qkv has " << qkv.rows() << " rows, expected "
                                               << batch * seq);
  LMGNN_CHECK(qkv.cols() % 3 == 0, ShapeError,
              "multi_head_attention: qkv width " << qkv.cols()
                                                 << " is not a multiple of 3");
  const std::size_t width = qkv.cols() / 3;
  LMGNN_CHECK(heads > 0 && width % heads == 0, ShapeError,
              "multi_head_attention: width " << width << " not divisible by "
                                             << heads << " heads");
  LMGNN_CHECK(key_mask.size() == batch * seq, ShapeError,
              "multi_head_attention: mask size " << key_mask.size());
  const std::size_t d = width / heads;
  const std::size_t stride = 3 * width;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  Tensor out = Tensor::zeros({batch * seq, width});
  // probs[((b * heads + h) * seq + i) * seq + j]
  std::vector<double> probs(batch * heads * seq * seq, 0.0);
  auto x = qkv.data();
  auto y = out.mutable_data();

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < seq; ++i) {
        const double* q = &x[(b * seq + i) * stride + h * d];
        double* p = &probs[((b * heads + h) * seq + i) * seq];
        double pmax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < seq; ++j) {
          if (!key_mask[b * seq + j]) continue;
          const double* k = &x[(b * seq + j) * stride + width + h * d];
          double s = 0.0;
          for (std::size_t c = 0; c < d; ++c) s += q[c] * k[c];
          p[j] = s * inv_sqrt_d;
          pmax = std::max(pmax, p[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          if (!key_mask[b * seq + j]) {
            p[j] = 0.0;
            continue;
          }
          p[j] = std::exp(p[j] - pmax);
          denom += p[j];
        }
        double* o = &y[(b * seq + i) * width + h * d];
        if (denom == 0.0) continue;  // every key masked: context stays zero
        for (std::size_t j = 0; j < seq; ++j) {
          if (p[j] == 0.0) continue;
          p[j] /= denom;
          const double* v = &x[(b * seq + j) * stride + 2 * width + h * d];
          for (std::size_t c = 0; c < d; ++c) o[c] += p[j] * v[c];
        }
      }
    }
  }

  Tape* tape = active_tape();
  if (tape && qkv.requires_grad()) {
    out.set_requires_grad(true);
    tape->record({qkv}, out,
                 [qkv, out, batch, seq, heads, width, d, stride, inv_sqrt_d,
                  probs = std::move(probs)]() mutable {
                   auto x = qkv.data();
                   auto g = out.grad();
                   auto gx = qkv.grad_buffer();
                   std::vector<double> dp(seq);
                   for (std::size_t b = 0; b < batch; ++b) {
                     for (std::size_t h = 0; h < heads; ++h) {
                       for (std::size_t i = 0; i < seq; ++i) {
                         const double* p = &probs[((b * heads + h) * seq + i) * seq];
                         const double* go = &g[(b * seq + i) * width + h * d];
                         // dV and dP
                         double dot = 0.0;
                         for (std::size_t j = 0; j < seq; ++j) {
                           dp[j] = 0.0;
                           if (p[j] == 0.0) continue;
                           const double* v = &x[(b * seq + j) * stride + 2 * width + h * d];
                           double* gv = &gx[(b * seq + j) * stride + 2 * width + h * d];
                           for (std::size_t c = 0; c < d; ++c) {
                             gv[c] += p[j] * go[c];
                             dp[j] += go[c] * v[c];
                           }
                           dot += dp[j] * p[j];
                         }
                         // softmax backward, then dQ and dK
                         const double* q = &x[(b * seq + i) * stride + h * d];
                         double* gq = &gx[(b * seq + i) * stride + h * d];
                         for (std::size_t j = 0; j < seq; ++j) {
                           if (p[j] == 0.0) continue;
                           const double ds = p[j] * (dp[j] - dot) * inv_sqrt_d;
                           const double* k = &x[(b * seq + j) * stride + width + h * d];
                           double* gk = &gx[(b * seq + j) * stride + width + h * d];
                           for (std::size_t c = 0; c < d; ++c) {
                             gq[c] += ds * k[c];
                             gk[c] += ds * q[c];
                           }
                         }
                       }
                     }
                   }
                 });
  }
  return out;
}

}  // namespace lmgnn
