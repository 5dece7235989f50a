#include "lmgnn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "lmgnn/errors.hpp"

namespace lmgnn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = active_tape();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return tape;
  return nullptr;
}

void require_rank2(const Tensor& a, const char* op) {
  LMGNN_CHECK(a.defined() && a.rank() == 2, ShapeError,
              op << " expects a rank-2 tensor, got "
                 << (a.defined() ? shape_str(a.shape()) : "undefined"));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  LMGNN_CHECK(a.shape() == b.shape(), ShapeError,
              op << ": shape mismatch " << shape_str(a.shape()) << " vs "
                 << shape_str(b.shape()));
}

template <typename Fn>
Tensor unary_elementwise(const Tensor& a, Fn value_and_slope) {
  Tensor out = Tensor::zeros(a.shape());
  auto x = a.data();
  auto y = out.mutable_data();
  std::vector<double> slope;
  Tape* tape = recording_tape({&a});
  if (tape) slope.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [v, s] = value_and_slope(x[i]);
    y[i] = v;
    if (tape) slope[i] = s;
  }
  if (tape) {
    out.set_requires_grad(true);
    tape->record({a}, out, [a, out, slope = std::move(slope)]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * slope[i];
    });
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  LMGNN_CHECK(a.cols() == b.rows(), ShapeError,
              "matmul: inner dimensions disagree for " << shape_str(a.shape())
                                                       << " x "
                                                       << shape_str(b.shape()));
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  // Plain row loop so a row's result never depends on its position in `a`.
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict o = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* __restrict br = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * br[j];
    }
  }
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, m, k, n]() mutable {
      ConstMap g(out.grad().data(), m, n);
      if (a.requires_grad())
        MutMap(a.grad_buffer().data(), m, k).noalias() +=
            g * ConstMap(b.data().data(), k, n).transpose();
      if (b.requires_grad())
        MutMap(b.grad_buffer().data(), k, n).noalias() +=
            ConstMap(a.data().data(), m, k).transpose() * g;
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  auto y = out.mutable_data();
  auto x1 = a.data(), x2 = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x1[i] + x2[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      for (const Tensor* t : {&a, &b}) {
        if (!t->requires_grad()) continue;
        auto gt = t->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  auto y = out.mutable_data();
  auto x1 = a.data(), x2 = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x1[i] * x2[i];
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto xb = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * xb[i];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        auto xa = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xa[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  return unary_elementwise(a, [factor](double x) {
    return std::pair{x * factor, factor};
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank2(a, "add_bias");
  LMGNN_CHECK(bias.numel() == a.cols(), ShapeError,
              "add_bias: bias " << shape_str(bias.shape()) << " vs input "
                                << shape_str(a.shape()));
  const auto rows = a.rows(), cols = a.cols();
  Tensor out = Tensor::zeros(a.shape());
  auto y = out.mutable_data();
  auto x = a.data(), b = bias.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = x[r * cols + c] + b[c];
  if (Tape* tape = recording_tape({&a, &bias})) {
    out.set_requires_grad(true);
    tape->record({a, bias}, out, [a, bias, out, rows, cols]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    });
  }
  return out;
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  require_rank2(a, "mul_row");
  LMGNN_CHECK(row.numel() == a.cols(), ShapeError,
              "mul_row: row " << shape_str(row.shape()) << " vs input "
                              << shape_str(a.shape()));
  const auto rows = a.rows(), cols = a.cols();
  Tensor out = Tensor::zeros(a.shape());
  auto y = out.mutable_data();
  auto x = a.data(), w = row.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = x[r * cols + c] * w[c];
  if (Tape* tape = recording_tape({&a, &row})) {
    out.set_requires_grad(true);
    tape->record({a, row}, out, [a, row, out, rows, cols]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        auto w = row.data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c] * w[c];
      }
      if (row.requires_grad()) {
        auto gw = row.grad_buffer();
        auto x = a.data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gw[c] += g[r * cols + c] * x[r * cols + c];
      }
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  return unary_elementwise(a, [](double x) {
    return x > 0.0 ? std::pair{x, 1.0} : std::pair{0.0, 0.0};
  });
}

Tensor gelu(const Tensor& a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  constexpr double kA = 0.044715;
  return unary_elementwise(a, [](double x) {
    const double u = kC * (x + kA * x * x * x);
    const double t = std::tanh(u);
    const double du = kC * (1.0 + 3.0 * kA * x * x);
    return std::pair{0.5 * x * (1.0 + t),
                     0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du};
  });
}

double softplus_value(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Tensor softplus(const Tensor& a) {
  return unary_elementwise(a, [](double x) {
    // Slope is the logistic sigmoid, evaluated on the stable side.
    const double e = std::exp(-std::abs(x));
    const double sig = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    return std::pair{softplus_value(x), sig};
  });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  Tensor out = Tensor::scalar(total);
  if (Tape* tape = recording_tape({&a})) {
    out.set_requires_grad(true);
    tape->record({a}, out, [a, out]() mutable {
      const double g = out.grad()[0];
      for (double& v : a.grad_buffer()) v += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& a) {
  LMGNN_CHECK(a.numel() > 0, ShapeError, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor row_sum(const Tensor& a) {
  require_rank2(a, "row_sum");
  const auto rows = a.rows(), cols = a.cols();
  Tensor out = Tensor::zeros({rows});
  auto y = out.mutable_data();
  auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[r * cols + c];
    y[r] = s;
  }
  if (Tape* tape = recording_tape({&a})) {
    out.set_requires_grad(true);
    tape->record({a}, out, [a, out, rows, cols]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r];
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps) {
  require_rank2(a, "layer_norm");
  const auto rows = a.rows(), cols = a.cols();
  LMGNN_CHECK(cols > 0, ShapeError, "layer_norm over zero features");
  LMGNN_CHECK(gain.numel() == cols && bias.numel() == cols, ShapeError,
              "layer_norm: gain/bias " << shape_str(gain.shape()) << "/"
                                       << shape_str(bias.shape()) << " vs input "
                                       << shape_str(a.shape()));
  Tensor out = Tensor::zeros(a.shape());
  std::vector<double> xhat(a.numel());
  std::vector<double> inv_std(rows);
  auto x = a.data(), g = gain.data(), b = bias.data();
  auto y = out.mutable_data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x[r * cols];
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += xr[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const double h = (xr[c] - mu) * inv_std[r];
      xhat[r * cols + c] = h;
      y[r * cols + c] = h * g[c] + b[c];
    }
  }
  if (Tape* tape = recording_tape({&a, &gain, &bias})) {
    out.set_requires_grad(true);
    tape->record({a, gain, bias}, out,
                 [a, gain, bias, out, rows, cols, xhat = std::move(xhat),
                  inv_std = std::move(inv_std)]() mutable {
                   auto gy = out.grad();
                   auto gv = gain.data();
                   if (gain.requires_grad()) {
                     auto gg = gain.grad_buffer();
                     for (std::size_t i = 0; i < gy.size(); ++i)
                       gg[i % cols] += gy[i] * xhat[i];
                   }
                   if (bias.requires_grad()) {
                     auto gb = bias.grad_buffer();
                     for (std::size_t i = 0; i < gy.size(); ++i) gb[i % cols] += gy[i];
                   }
                   if (!a.requires_grad()) return;
                   auto ga = a.grad_buffer();
                   const double n = static_cast<double>(cols);
                   for (std::size_t r = 0; r < rows; ++r) {
                     double mean_d = 0.0, mean_dx = 0.0;
                     for (std::size_t c = 0; c < cols; ++c) {
                       const double d = gy[r * cols + c] * gv[c];
                       mean_d += d;
                       mean_dx += d * xhat[r * cols + c];
                     }
                     mean_d /= n;
                     mean_dx /= n;
                     for (std::size_t c = 0; c < cols; ++c) {
                       const double d = gy[r * cols + c] * gv[c];
                       ga[r * cols + c] +=
                           inv_std[r] * (d - mean_d - xhat[r * cols + c] * mean_dx);
                     }
                   }
                 });
  }
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             std::span<const std::int64_t> labels) {
  require_rank2(logits, "softmax_cross_entropy");
  const auto rows = logits.rows(), classes = logits.cols();
  LMGNN_CHECK(labels.size() == rows, ShapeError,
              "softmax_cross_entropy: " << labels.size() << " labels for "
                                        << rows << " rows");
  LMGNN_CHECK(rows > 0, ShapeError, "softmax_cross_entropy on an empty batch");
  std::vector<double> probs(logits.numel());
  auto z = logits.data();
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto label = labels[r];
    LMGNN_CHECK(label >= 0 && static_cast<std::size_t>(label) < classes,
                IndexError,
                "label " << label << " outside [0, " << classes << ")");
    const double* zr = &z[r * classes];
    const double zmax = *std::max_element(zr, zr + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(zr[c] - zmax);
      denom += probs[r * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] /= denom;
    total += zmax + std::log(denom) - zr[label];
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(rows));
  if (Tape* tape = recording_tape({&logits})) {
    out.set_requires_grad(true);
    std::vector<std::int64_t> owned(labels.begin(), labels.end());
    tape->record({logits}, out,
                 [logits, out, rows, classes, probs = std::move(probs),
                  owned = std::move(owned)]() mutable {
                   const double g = out.grad()[0] / static_cast<double>(rows);
                   auto gz = logits.grad_buffer();
                   for (std::size_t r = 0; r < rows; ++r) {
                     for (std::size_t c = 0; c < classes; ++c)
                       gz[r * classes + c] += g * probs[r * classes + c];
                     gz[r * classes + static_cast<std::size_t>(owned[r])] -= g;
                   }
                 });
  }
  return out;
}

Tensor gather_rows(const Tensor& a, std::span<const std::int64_t> indices) {
  LMGNN_CHECK(a.defined() && a.rank() >= 1, ShapeError,
              "gather_rows on an undefined tensor");
  const auto rows = a.dim(0);
  const auto width = a.numel() / std::max<std::size_t>(rows, 1);
  Shape shape = a.shape();
  shape[0] = indices.size();
  Tensor out = Tensor::zeros(shape);
  auto y = out.mutable_data();
  auto x = a.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    LMGNN_CHECK(indices[i] >= 0 && static_cast<std::size_t>(indices[i]) < rows,
                IndexError,
                "row index " << indices[i] << " outside [0, " << rows << ")");
    std::copy_n(&x[static_cast<std::size_t>(indices[i]) * width], width,
                &y[i * width]);
  }
  if (Tape* tape = recording_tape({&a})) {
    out.set_requires_grad(true);
    std::vector<std::int64_t> owned(indices.begin(), indices.end());
    tape->record({a}, out, [a, out, width, owned = std::move(owned)]() mutable {
      auto g = out.grad();
      auto ga = a.grad_buffer();
      for (std::size_t i = 0; i < owned.size(); ++i) {
        const std::size_t base = static_cast<std::size_t>(owned[i]) * width;
        for (std::size_t c = 0; c < width; ++c) ga[base + c] += g[i * width + c];
      }
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  LMGNN_CHECK(!parts.empty(), ShapeError, "concat_rows of nothing");
  const auto cols = parts.front().cols();
  std::size_t rows = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    require_rank2(p, "concat_rows");
    LMGNN_CHECK(p.cols() == cols, ShapeError,
                "concat_rows: width " << p.cols() << " vs " << cols);
    rows += p.rows();
    any_grad = any_grad || p.requires_grad();
  }
  Tensor out = Tensor::zeros({rows, cols});
  auto y = out.mutable_data();
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), y.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.numel();
  }
  Tape* tape = active_tape();
  if (tape && any_grad) {
    out.set_requires_grad(true);
    tape->record(parts, out, [parts, out]() mutable {
      auto g = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        if (p.requires_grad()) {
          auto gp = p.grad_buffer();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.numel();
      }
    });
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  LMGNN_CHECK(a.rows() == b.rows(), ShapeError,
              "concat_cols: " << shape_str(a.shape()) << " vs "
                              << shape_str(b.shape()));
  const auto rows = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out = Tensor::zeros({rows, ca + cb});
  auto y = out.mutable_data();
  auto xa = a.data(), xb = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&xa[r * ca], ca, &y[r * (ca + cb)]);
    std::copy_n(&xb[r * cb], cb, &y[r * (ca + cb) + ca]);
  }
  if (Tape* tape = recording_tape({&a, &b})) {
    out.set_requires_grad(true);
    tape->record({a, b}, out, [a, b, out, rows, ca, cb]() mutable {
      auto g = out.grad();
      if (a.requires_grad()) {
        auto ga = a.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < ca; ++c) ga[r * ca + c] += g[r * (ca + cb) + c];
      }
      if (b.requires_grad()) {
        auto gb = b.grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cb; ++c)
            gb[r * cb + c] += g[r * (ca + cb) + ca + c];
      }
    });
  }
  return out;
}

Tensor scatter_aggregate(const Tensor& src_rows,
                         std::span<const std::int64_t> dst,
                         std::span<const std::int64_t> src,
                         std::size_t num_dst, bool mean) {
  require_rank2(src_rows, "scatter_aggregate");
  LMGNN_CHECK(dst.size() == src.size(), ShapeError,
              "scatter_aggregate: " << dst.size() << " destinations vs "
                                    << src.size() << " sources");
  const auto n_src = src_rows.rows(), cols = src_rows.cols();
  std::vector<double> weight(num_dst, 0.0);
  for (std::size_t k = 0; k < dst.size(); ++k) {
    LMGNN_CHECK(dst[k] >= 0 && static_cast<std::size_t>(dst[k]) < num_dst,
                IndexError, "destination " << dst[k] << " outside [0, " << num_dst << ")");
    LMGNN_CHECK(src[k] >= 0 && static_cast<std::size_t>(src[k]) < n_src,
                IndexError, "source " << src[k] << " outside [0, " << n_src << ")");
    weight[static_cast<std::size_t>(dst[k])] += 1.0;
  }
  for (auto& w : weight) w = (mean && w > 0.0) ? 1.0 / w : 1.0;

  Tensor out = Tensor::zeros({num_dst, cols});
  auto y = out.mutable_data();
  auto x = src_rows.data();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    const auto d = static_cast<std::size_t>(dst[k]);
    const auto s = static_cast<std::size_t>(src[k]);
    for (std::size_t c = 0; c < cols; ++c) y[d * cols + c] += x[s * cols + c];
  }
  if (mean)
    for (std::size_t d = 0; d < num_dst; ++d)
      for (std::size_t c = 0; c < cols; ++c) y[d * cols + c] *= weight[d];

  if (Tape* tape = recording_tape({&src_rows})) {
    out.set_requires_grad(true);
    std::vector<std::int64_t> d_owned(dst.begin(), dst.end());
    std::vector<std::int64_t> s_owned(src.begin(), src.end());
    tape->record({src_rows}, out,
                 [src_rows, out, cols, weight = std::move(weight),
                  d_owned = std::move(d_owned), s_owned = std::move(s_owned)]() mutable {
                   auto g = out.grad();
                   auto gs = src_rows.grad_buffer();
                   for (std::size_t k = 0; k < d_owned.size(); ++k) {
                     const auto d = static_cast<std::size_t>(d_owned[k]);
                     const auto s = static_cast<std::size_t>(s_owned[k]);
                     for (std::size_t c = 0; c < cols; ++c)
                       gs[s * cols + c] += g[d * cols + c] * weight[d];
                   }
                 });
  }
  return out;
}

}  // namespace lmgnn
