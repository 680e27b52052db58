#include "sesn/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sesn/kernels.hpp"

namespace sesn {

namespace {

constexpr Real kProbFloor = 1e-12;

void require_same_shape(const Var& a, const Var& b, const char* what) {
  if (a->shape() != b->shape())
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_to_string(a->shape()) +
                     " vs " + shape_to_string(b->shape()));
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const Real limit = std::sqrt(6.0 / static_cast<Real>(fan_in + fan_out));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

template <class F, class G>
Var unary(const Var& x, F f, G df_from_xy) {
  Tensor y(x->shape());
  const auto& xv = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return make_node(std::move(y), {x}, [df_from_xy](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i)
      gi[i] += self.grad[i] * df_from_xy(in.value[i], self.value[i]);
  });
}

void check_one_hot(const Tensor& labels, const Shape& expected) {
  if (labels.shape() != expected)
    throw ShapeError("labels shape " + shape_to_string(labels.shape()) +
                     " does not match predictions " + shape_to_string(expected));
  const std::size_t rows = expected[0], k = expected[1];
  for (std::size_t r = 0; r < rows; ++r) {
    int ones = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const Real v = labels[r * k + j];
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        ones = 2;
    }
    if (ones != 1) throw InputError("label row " + std::to_string(r) + " is not one-hot");
  }
}

std::size_t true_class(const Tensor& labels, std::size_t row, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j)
    if (labels[row * k + j] == 1.0) return j;
  return 0;
}

}  // namespace

LayerParams make_conv2d(std::size_t kh, std::size_t kw, std::size_t in, std::size_t out, Rng& rng,
                        bool with_bias) {
  LayerParams p;
  p.kind = LayerKind::conv2d;
  p.weights = parameter(glorot_uniform({kh, kw, in, out}, kh * kw * in, kh * kw * out, rng));
  if (with_bias) p.bias = parameter(Tensor({out}, 0.0));
  return p;
}

LayerParams make_dense(std::size_t in, std::size_t out, Rng& rng, bool with_bias) {
  LayerParams p;
  p.kind = LayerKind::dense;
  p.weights = parameter(glorot_uniform({in, out}, in, out, rng));
  if (with_bias) p.bias = parameter(Tensor({out}, 0.0));
  return p;
}

LayerParams make_batchnorm(std::size_t channels) {
  LayerParams p;
  p.kind = LayerKind::batchnorm;
  p.weights = parameter(Tensor({channels}, 1.0));
  p.bias = parameter(Tensor({channels}, 0.0));
  p.running_mean = constant(Tensor({channels}, 0.0));
  p.running_var = constant(Tensor({channels}, 1.0));
  return p;
}

Var conv2d(const Var& x, const LayerParams& p) {
  require_rank(x->value, 4, "conv2d input");
  const Tensor& w = p.weights->value;
  require_rank(w, 4, "conv2d weights");
  const kernels::ConvDims d{x->shape()[0], x->shape()[1], x->shape()[2], x->shape()[3],
                            w.dim(3),      w.dim(0),      w.dim(1)};
  if (w.dim(2) != d.in_channels)
    throw ShapeError("conv2d: input has " + std::to_string(d.in_channels) +
                     " channels but kernel expects " + std::to_string(w.dim(2)));
  if (d.kernel_h % 2 == 0 || d.kernel_w % 2 == 0)
    throw ShapeError("conv2d: same padding needs odd kernel extents");
  if (p.bias && p.bias->value.size() != d.out_channels) throw ShapeError("conv2d: bias length");

  Tensor y({d.batch, d.height, d.width, d.out_channels});
  const std::span<const Real> bias =
      p.bias ? std::span<const Real>(p.bias->value.data()) : std::span<const Real>();
  kernels::conv2d_forward(d, x->value.data(), w.data(), bias, y.data());

  std::vector<Var> inputs{x, p.weights};
  if (p.bias) inputs.push_back(p.bias);
  return make_node(std::move(y), std::move(inputs), [d](Node& self) {
    Node& in = *self.inputs[0];
    Node& wt = *self.inputs[1];
    if (in.requires_grad)
      kernels::conv2d_backward_input(d, self.grad.data(), wt.value.data(), in.ensure_grad().data());
    Node* b = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
    const bool want_w = wt.requires_grad;
    const bool want_b = b && b->requires_grad;
    if (want_w || want_b) {
      Tensor scratch_w;
      std::span<Real> gw;
      if (want_w) {
        gw = wt.ensure_grad().data();
      } else {
        scratch_w = Tensor(wt.value.shape());
        gw = scratch_w.data();
      }
      const std::span<Real> gb = want_b ? b->ensure_grad().data() : std::span<Real>();
      kernels::conv2d_backward_weight(d, in.value.data(), self.grad.data(), gw, gb);
    }
  });
}

Var dense(const Var& x, const LayerParams& p) {
  require_rank(x->value, 2, "dense input");
  const Tensor& w = p.weights->value;
  require_rank(w, 2, "dense weights");
  const kernels::DenseDims d{x->shape()[0], x->shape()[1], w.dim(1)};
  if (w.dim(0) != d.in_features)
    throw ShapeError("dense: input width " + std::to_string(d.in_features) +
                     " does not match weight rows " + std::to_string(w.dim(0)));
  if (p.bias && p.bias->value.size() != d.out_features) throw ShapeError("dense: bias length");

  Tensor y({d.batch, d.out_features});
  const std::span<const Real> bias =
      p.bias ? std::span<const Real>(p.bias->value.data()) : std::span<const Real>();
  kernels::dense_forward(d, x->value.data(), w.data(), bias, y.data());

  std::vector<Var> inputs{x, p.weights};
  if (p.bias) inputs.push_back(p.bias);
  return make_node(std::move(y), std::move(inputs), [d](Node& self) {
    Node& in = *self.inputs[0];
    Node& wt = *self.inputs[1];
    if (in.requires_grad)
      kernels::dense_backward_input(d, self.grad.data(), wt.value.data(), in.ensure_grad().data());
    Node* b = self.inputs.size() > 2 ? self.inputs[2].get() : nullptr;
    const bool want_w = wt.requires_grad;
    const bool want_b = b && b->requires_grad;
    if (want_w || want_b) {
      Tensor scratch_w;
      std::span<Real> gw;
      if (want_w) {
        gw = wt.ensure_grad().data();
      } else {
        scratch_w = Tensor(wt.value.shape());
        gw = scratch_w.data();
      }
      const std::span<Real> gb = want_b ? b->ensure_grad().data() : std::span<Real>();
      kernels::dense_backward_weight(d, in.value.data(), self.grad.data(), gw, gb);
    }
  });
}

Var batchnorm(const Var& x, const LayerParams& p, bool training) {
  const Shape& s = x->shape();
  if (s.size() != 2 && s.size() != 4) throw ShapeError("batchnorm: input must be rank 2 or 4");
  const std::size_t C = s.back();
  const std::size_t n = x->value.size() / C;  // elements reduced per channel
  if (p.weights->value.size() != C || p.bias->value.size() != C)
    throw ShapeError("batchnorm: " + std::to_string(C) + " channels but parameters hold " +
                     std::to_string(p.weights->value.size()));
  if (training && n < 2)
    throw InputError("batchnorm: degenerate variance, training needs more than one value per channel");

  const Tensor& xv = x->value;
  std::vector<Real> mean(C, 0.0), var(C, 0.0);
  if (training) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < C; ++c) mean[c] += xv[i * C + c];
    for (auto& m : mean) m /= static_cast<Real>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < C; ++c) {
        const Real dlt = xv[i * C + c] - mean[c];
        var[c] += dlt * dlt;
      }
    for (auto& v : var) v /= static_cast<Real>(n);

    Tensor& rm = p.running_mean->value;
    Tensor& rv = p.running_var->value;
    const Real unbias = static_cast<Real>(n) / static_cast<Real>(n - 1);
    for (std::size_t c = 0; c < C; ++c) {
      rm[c] = p.momentum * rm[c] + (1.0 - p.momentum) * mean[c];
      rv[c] = p.momentum * rv[c] + (1.0 - p.momentum) * var[c] * unbias;
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = p.running_mean->value[c];
      var[c] = p.running_var->value[c];
    }
  }

  std::vector<Real> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + p.eps);

  Tensor xhat(s);
  Tensor y(s);
  const Tensor& gamma = p.weights->value;
  const Tensor& beta = p.bias->value;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t k = i * C + c;
      xhat[k] = (xv[k] - mean[c]) * inv_std[c];
      y[k] = gamma[c] * xhat[k] + beta[c];
    }

  return make_node(std::move(y), {x, p.weights, p.bias},
                   [xhat = std::move(xhat), inv_std = std::move(inv_std), training, n,
                    C](Node& self) {
                     Node& in = *self.inputs[0];
                     Node& g = *self.inputs[1];
                     Node& b = *self.inputs[2];
                     const Tensor& dy = self.grad;
                     std::vector<Real> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t c = 0; c < C; ++c) {
                         sum_dy[c] += dy[i * C + c];
                         sum_dy_xhat[c] += dy[i * C + c] * xhat[i * C + c];
                       }
                     if (g.requires_grad) {
                       Tensor& gg = g.ensure_grad();
                       for (std::size_t c = 0; c < C; ++c) gg[c] += sum_dy_xhat[c];
                     }
                     if (b.requires_grad) {
                       Tensor& gb = b.ensure_grad();
                       for (std::size_t c = 0; c < C; ++c) gb[c] += sum_dy[c];
                     }
                     if (!in.requires_grad) return;
                     Tensor& gi = in.ensure_grad();
                     const Tensor& gamma = g.value;
                     const Real inv_n = 1.0 / static_cast<Real>(n);
                     for (std::size_t i = 0; i < n; ++i)
                       for (std::size_t c = 0; c < C; ++c) {
                         const std::size_t k = i * C + c;
                         if (training) {
                           gi[k] += gamma[c] * inv_std[c] * inv_n *
                                    (static_cast<Real>(n) * dy[k] - sum_dy[c] -
                                     xhat[k] * sum_dy_xhat[c]);
                         } else {
                           gi[k] += gamma[c] * inv_std[c] * dy[k];
                         }
                       }
                   });
}

Var maxpool2d(const Var& x, std::size_t pool_h, std::size_t pool_w) {
  require_rank(x->value, 4, "maxpool2d input");
  const Shape& s = x->shape();
  if (pool_h == 0 || pool_w == 0) throw ShapeError("maxpool2d: pool extents must be positive");
  if (s[1] % pool_h != 0 || s[2] % pool_w != 0)
    throw ShapeError("maxpool2d: spatial extents " + std::to_string(s[1]) + "x" +
                     std::to_string(s[2]) + " not divisible by pool " + std::to_string(pool_h) +
                     "x" + std::to_string(pool_w));
  const kernels::PoolDims d{s[0], s[1], s[2], s[3], pool_h, pool_w};
  Tensor y({d.batch, d.out_height(), d.out_width(), d.channels});
  std::vector<std::size_t> argmax(y.size());
  kernels::maxpool_forward(d, x->value.data(), y.data(), argmax);
  return make_node(std::move(y), {x}, [d, argmax = std::move(argmax)](Node& self) {
    Node& in = *self.inputs[0];
    if (in.requires_grad) kernels::maxpool_backward(d, self.grad.data(), argmax, in.ensure_grad().data());
  });
}

Var global_average_pool(const Var& x) {
  require_rank(x->value, 4, "global_average_pool input");
  const Shape& s = x->shape();
  const std::size_t B = s[0], HW = s[1] * s[2], C = s[3];
  Tensor y({B, 1, 1, C});
  const Real inv = 1.0 / static_cast<Real>(HW);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      Real acc = 0.0;
      for (std::size_t p = 0; p < HW; ++p) acc += x->value[(b * HW + p) * C + c];
      y[b * C + c] = acc * inv;
    }
  return make_node(std::move(y), {x}, [B, HW, C, inv](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t p = 0; p < HW; ++p)
        for (std::size_t c = 0; c < C; ++c) gi[(b * HW + p) * C + c] += self.grad[b * C + c] * inv;
  });
}

Var dropout(const Var& x, Real rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  const Real keep_scale = 1.0 / (1.0 - rate);
  Tensor mask(x->shape());
  for (auto& m : mask.values()) m = u(rng) < rate ? 0.0 : keep_scale;
  Tensor y(x->shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x->value[i] * mask[i];
  return make_node(std::move(y), {x}, [mask = std::move(mask)](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i] * mask[i];
  });
}

Real elu_value(Real x, Real alpha) { return x >= 0.0 ? x : alpha * std::expm1(x); }

Real sigmoid_value(Real x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const Real e = std::exp(x);
  return e / (1.0 + e);
}

Var elu(const Var& x, Real alpha) {
  return unary(
      x, [alpha](Real v) { return elu_value(v, alpha); },
      [alpha](Real xi, Real yi) { return xi >= 0.0 ? 1.0 : yi + alpha; });
}

Var relu(const Var& x) {
  return unary(
      x, [](Real v) { return v > 0.0 ? v : 0.0; },
      [](Real xi, Real) { return xi > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(x, sigmoid_value, [](Real, Real yi) { return yi * (1.0 - yi); });
}

Var softmax(const Var& x) {
  const Shape& s = x->shape();
  const std::size_t K = s.back();
  const std::size_t rows = x->value.size() / K;
  Tensor y(s);
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = x->value.data().data() + r * K;
    Real* out = y.data().data() + r * K;
    const Real mx = *std::max_element(in, in + K);
    Real sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) sum += out[j] = std::exp(in[j] - mx);
    for (std::size_t j = 0; j < K; ++j) out[j] /= sum;
  }
  return make_node(std::move(y), {x}, [rows, K](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      Real dot = 0.0;
      for (std::size_t j = 0; j < K; ++j) dot += self.grad[r * K + j] * self.value[r * K + j];
      for (std::size_t j = 0; j < K; ++j)
        gi[r * K + j] += self.value[r * K + j] * (self.grad[r * K + j] - dot);
    }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] + b->value[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      Tensor& gi = in->ensure_grad();
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
    }
  });
}

Var multiply(const Var& a, const Var& b) {
  require_same_shape(a, b, "multiply");
  Tensor y(a->shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a->value[i] * b->value[i];
  return make_node(std::move(y), {a, b}, [](Node& self) {
    Node& x = *self.inputs[0];
    Node& z = *self.inputs[1];
    if (x.requires_grad) {
      Tensor& g = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * z.value[i];
    }
    if (z.requires_grad) {
      Tensor& g = z.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.value[i];
    }
  });
}

Var scale(const Var& x, Real factor) {
  return unary(
      x, [factor](Real v) { return v * factor; }, [factor](Real, Real) { return factor; });
}

Var scale_channels(const Var& u, const Var& gates) {
  require_rank(u->value, 4, "scale_channels input");
  const Shape& s = u->shape();
  const std::size_t B = s[0], HW = s[1] * s[2], C = s[3];
  if (gates->shape() != Shape{B, 1, 1, C})
    throw ShapeError("scale_channels: gates " + shape_to_string(gates->shape()) +
                     " incompatible with " + shape_to_string(s));
  Tensor y(s);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t p = 0; p < HW; ++p)
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t k = (b * HW + p) * C + c;
        y[k] = u->value[k] * gates->value[b * C + c];
      }
  return make_node(std::move(y), {u, gates}, [B, HW, C](Node& self) {
    Node& x = *self.inputs[0];
    Node& g = *self.inputs[1];
    if (x.requires_grad) {
      Tensor& gx = x.ensure_grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t p = 0; p < HW; ++p)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t k = (b * HW + p) * C + c;
            gx[k] += self.grad[k] * g.value[b * C + c];
          }
    }
    if (g.requires_grad) {
      Tensor& gg = g.ensure_grad();
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t p = 0; p < HW; ++p)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t k = (b * HW + p) * C + c;
            gg[b * C + c] += self.grad[k] * x.value[k];
          }
    }
  });
}

Var scale_positions(const Var& u, const Var& gates) {
  require_rank(u->value, 4, "scale_positions input");
  const Shape& s = u->shape();
  const std::size_t P = s[0] * s[1] * s[2], C = s[3];
  if (gates->shape() != Shape{s[0], s[1], s[2], 1})
    throw ShapeError("scale_positions: gates " + shape_to_string(gates->shape()) +
                     " incompatible with " + shape_to_string(s));
  Tensor y(s);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t c = 0; c < C; ++c) y[p * C + c] = u->value[p * C + c] * gates->value[p];
  return make_node(std::move(y), {u, gates}, [P, C](Node& self) {
    Node& x = *self.inputs[0];
    Node& g = *self.inputs[1];
    if (x.requires_grad) {
      Tensor& gx = x.ensure_grad();
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t c = 0; c < C; ++c) gx[p * C + c] += self.grad[p * C + c] * g.value[p];
    }
    if (g.requires_grad) {
      Tensor& gg = g.ensure_grad();
      for (std::size_t p = 0; p < P; ++p) {
        Real acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) acc += self.grad[p * C + c] * x.value[p * C + c];
        gg[p] += acc;
      }
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x->value.reshaped(std::move(shape));
  return make_node(std::move(y), {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
  });
}

Var flatten(const Var& x) {
  const std::size_t B = x->shape()[0];
  return reshape(x, {B, x->value.size() / B});
}

Var weighted_sum(const Var& x, const Tensor& weights) {
  if (weights.shape() != x->shape()) throw ShapeError("weighted_sum: shape mismatch");
  Real acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += x->value[i] * weights[i];
  return make_node(Tensor({1}, acc), {x}, [weights](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[0] * weights[i];
  });
}

Var cross_entropy(const Var& probs, const Tensor& labels) {
  require_rank(probs->value, 2, "cross_entropy predictions");
  check_one_hot(labels, probs->shape());
  const std::size_t B = probs->shape()[0], K = probs->shape()[1];
  Real loss = 0.0;
  for (std::size_t r = 0; r < B; ++r) {
    const Real p = std::clamp(probs->value[r * K + true_class(labels, r, K)], kProbFloor, 1.0);
    loss -= std::log(p);
  }
  loss /= static_cast<Real>(B);
  return make_node(Tensor({1}, loss), {probs}, [labels, B, K](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    for (std::size_t r = 0; r < B; ++r) {
      const std::size_t t = true_class(labels, r, K);
      const Real p = in.value[r * K + t];
      if (p > kProbFloor && p <= 1.0) gi[r * K + t] -= self.grad[0] / (static_cast<Real>(B) * p);
    }
  });
}

Var softmax_cross_entropy(const Var& logits, const Tensor& labels) {
  require_rank(logits->value, 2, "softmax_cross_entropy logits");
  check_one_hot(labels, logits->shape());
  const std::size_t B = logits->shape()[0], K = logits->shape()[1];
  Var probs = softmax(constant(logits->value));
  Tensor p = probs->value;
  Real loss = 0.0;
  for (std::size_t r = 0; r < B; ++r)
    loss -= std::log(std::clamp(p[r * K + true_class(labels, r, K)], kProbFloor, 1.0));
  loss /= static_cast<Real>(B);
  return make_node(Tensor({1}, loss), {logits}, [p = std::move(p), labels, B](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    Tensor& gi = in.ensure_grad();
    const Real s = self.grad[0] / static_cast<Real>(B);
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += s * (p[i] - labels[i]);
  });
}

}  // namespace sesn
