#pragma once

#include <random>

#include "sesn/autograd.hpp"

namespace sesn {

using Rng = std::mt19937_64;

enum class LayerKind { conv2d, dense, batchnorm };

/// Learnable state of one layer. For batch norm, `weights` is the per-channel
/// scale and `bias` the shift; the running statistics are non-trainable nodes.
struct LayerParams {
  LayerKind kind = LayerKind::dense;
  Var weights;
  Var bias;
  Var running_mean;
  Var running_var;
  Real eps = 1e-5;
  Real momentum = 0.99;

  std::size_t kernel_h() const { return weights->value.dim(0); }
  std::size_t kernel_w() const { return weights->value.dim(1); }
};

/// Glorot-uniform kernel (kh, kw, in, out) and zero bias.
LayerParams make_conv2d(std::size_t kh, std::size_t kw, std::size_t in, std::size_t out, Rng& rng,
                        bool with_bias = true);
/// Glorot-uniform (in, out) matrix and zero bias.
LayerParams make_dense(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);
/// Scale 1, shift 0, running mean 0, running variance 1.
LayerParams make_batchnorm(std::size_t channels);

// Convolution, dense and pooling run on the OpenMP kernels.
Var conv2d(const Var& x, const LayerParams& p);
Var dense(const Var& x, const LayerParams& p);
Var batchnorm(const Var& x, const LayerParams& p, bool training);
Var maxpool2d(const Var& x, std::size_t pool_h, std::size_t pool_w);
Var global_average_pool(const Var& x);
Var dropout(const Var& x, Real rate, bool training, Rng& rng);

Var elu(const Var& x, Real alpha = 1.0);
Var relu(const Var& x);
Var sigmoid(const Var& x);
Var softmax(const Var& x);

Var add(const Var& a, const Var& b);
Var multiply(const Var& a, const Var& b);
Var scale(const Var& x, Real factor);
/// u (B,H,W,C) times per-channel gates (B,1,1,C).
Var scale_channels(const Var& u, const Var& gates);
/// u (B,H,W,C) times per-location gates (B,H,W,1).
Var scale_positions(const Var& u, const Var& gates);
/// (B, ...) -> (B, prod(...)), row-major so height varies slowest.
Var flatten(const Var& x);
Var reshape(const Var& x, Shape shape);
/// Scalar sum(x * weights); a convenient probe loss for gradient checks.
Var weighted_sum(const Var& x, const Tensor& weights);

/// Mean negative log-probability of the labelled class; probabilities are
/// clamped to [1e-12, 1]. Labels must be one-hot rows.
Var cross_entropy(const Var& probs, const Tensor& labels);
/// Same loss evaluated on softmax(logits), with the fused p - y gradient.
Var softmax_cross_entropy(const Var& logits, const Tensor& labels);

Real elu_value(Real x, Real alpha = 1.0);
Real sigmoid_value(Real x);

}  // namespace sesn
