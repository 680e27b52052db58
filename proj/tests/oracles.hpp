#pragma once
// Straight-line reimplementations used as independent references. None of
// these call the library's ops; they work on raw values with plain loops.

#include <cmath>
#include <vector>

#include "sesn/network.hpp"
#include "sesn/se_blocks.hpp"

namespace sesn::oracle {

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }
inline Real elu(Real x) { return x >= 0.0 ? x : std::exp(x) - 1.0; }

/// Channel recalibration: z = GAP(u), zhat = W1 relu(W2 z), out = sigmoid(zhat) * u.
inline Tensor cse(const Tensor& u, const SeParams& p) {
  const std::size_t B = u.dim(0), H = u.dim(1), W = u.dim(2), C = u.dim(3);
  const std::size_t R = p.bottleneck();
  const Tensor& w2 = p.cse_reduce.weights->value;  // C x R
  const Tensor& b2 = p.cse_reduce.bias->value;
  const Tensor& w1 = p.cse_expand.weights->value;  // R x C
  const Tensor& b1 = p.cse_expand.bias->value;
  Tensor out(u.shape());
  for (std::size_t n = 0; n < B; ++n) {
    std::vector<Real> z(C, 0.0);
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j)
        for (std::size_t k = 0; k < C; ++k) z[k] += u.at(n, i, j, k);
    for (auto& v : z) v /= static_cast<Real>(H * W);
    std::vector<Real> s(R);
    for (std::size_t r = 0; r < R; ++r) {
      Real a = b2[r];
      for (std::size_t k = 0; k < C; ++k) a += z[k] * w2[k * R + r];
      s[r] = a > 0.0 ? a : 0.0;
    }
    for (std::size_t k = 0; k < C; ++k) {
      Real a = b1[k];
      for (std::size_t r = 0; r < R; ++r) a += s[r] * w1[r * C + k];
      const Real gate = sigmoid(a);
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) out.at(n, i, j, k) = gate * u.at(n, i, j, k);
    }
  }
  return out;
}

/// Spatial recalibration: q = sum_k w_k u_k + b per location, out = sigmoid(q) * u.
inline Tensor sse(const Tensor& u, const SeParams& p) {
  const std::size_t B = u.dim(0), H = u.dim(1), W = u.dim(2), C = u.dim(3);
  const Tensor& w = p.sse.weights->value;  // 1 x 1 x C x 1
  const Real b = p.sse.bias->value[0];
  Tensor out(u.shape());
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        Real q = b;
        for (std::size_t k = 0; k < C; ++k) q += w[k] * u.at(n, i, j, k);
        const Real gate = sigmoid(q);
        for (std::size_t k = 0; k < C; ++k) out.at(n, i, j, k) = gate * u.at(n, i, j, k);
      }
  return out;
}

inline Tensor scse(const Tensor& u, const SeParams& p) {
  Tensor a = cse(u, p);
  const Tensor b = sse(u, p);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Tensor plus(Tensor a, const Tensor& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Tensor elu(Tensor a) {
  for (auto& v : a.values()) v = elu(v);
  return a;
}

using SeFn = std::function<Tensor(const Tensor&)>;

/// The six block equations written out from F(X), g(X) and a recalibration.
inline Tensor block(BlockKind kind, const Tensor& F, const Tensor& g, const SeFn& se) {
  const Tensor H = plus(F, g);
  switch (kind) {
    case BlockKind::ConvResidual: return elu(H);
    case BlockKind::ConvPost: return se(H);
    case BlockKind::ConvPostElu: return se(elu(H));
    case BlockKind::ConvStandard: return plus(se(F), g);
    case BlockKind::ConvStandardPost: return plus(se(H), g);
    case BlockKind::ConvStandardPostElu: return elu(plus(se(H), g));
  }
  return {};
}

/// Trainable scalars of one block: two 3x3 convs, a 1x1 shortcut, three batch
/// norms, and the scSE weights unless the kind has no recalibration.
inline std::size_t block_params(BlockKind kind, std::size_t in, std::size_t f, std::size_t ratio) {
  std::size_t n = (9 * in * f + f) + (9 * f * f + f) + (in * f + f) + 3 * 2 * f;
  if (kind != BlockKind::ConvResidual) {
    const std::size_t r = f / ratio;
    n += (f * r + r) + (r * f + f) + (f + 1);
  }
  return n;
}

inline std::size_t network_params(const NetworkConfig& cfg) {
  std::size_t n = 0, in = cfg.channels;
  for (const auto& b : cfg.blocks) {
    n += block_params(cfg.block_kind, in, b.filters, b.ratio);
    in = b.filters;
  }
  const std::size_t flat = cfg.flatten_width();
  n += flat * cfg.dense_units + cfg.dense_units + 2 * cfg.dense_units;
  n += cfg.dense_units * cfg.num_classes + cfg.num_classes + 2 * cfg.num_classes;
  return n;
}

/// Expected per-stage shapes for a batch of one: after each block, after each
/// pooling, the flatten width, the hidden layer and the output.
inline std::vector<Shape> network_shapes(const NetworkConfig& cfg) {
  std::vector<Shape> out;
  std::size_t h = cfg.mels, w = cfg.frames;
  for (const auto& b : cfg.blocks) {
    out.push_back({1, h, w, b.filters});
    h /= b.pool_h;
    w /= b.pool_w;
    out.push_back({1, h, w, b.filters});
  }
  out.push_back({1, h * w * cfg.blocks.back().filters});
  out.push_back({1, cfg.dense_units});
  out.push_back({1, cfg.num_classes});
  return out;
}

}  // namespace sesn::oracle
