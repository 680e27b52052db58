#include "sesn/kernels.hpp"

#include <cstdint>

namespace sesn::kernels {

using std::int64_t;
using std::size_t;

void conv2d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out) {
  const int64_t rows = static_cast<int64_t>(d.batch * d.height);
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;

#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; ++row) {
    const int64_t b = row / H, h = row % H;
    for (int64_t w = 0; w < W; ++w) {
      Real* o = out.data() + ((b * H + h) * W + w) * Co;
      for (size_t co = 0; co < Co; ++co) o[co] = bias.empty() ? 0.0 : bias[co];
      for (size_t kh = 0; kh < d.kernel_h; ++kh) {
        const int64_t y = h + static_cast<int64_t>(kh) - ph;
        if (y < 0 || y >= H) continue;
        for (size_t kw = 0; kw < d.kernel_w; ++kw) {
          const int64_t x = w + static_cast<int64_t>(kw) - pw;
          if (x < 0 || x >= W) continue;
          const Real* src = in.data() + ((b * H + y) * W + x) * Ci;
          const Real* wk = weight.data() + (kh * d.kernel_w + kw) * Ci * Co;
          for (size_t ci = 0; ci < Ci; ++ci) {
            const Real v = src[ci];
            const Real* wrow = wk + ci * Co;
            for (size_t co = 0; co < Co; ++co) o[co] += v * wrow[co];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvDims& d, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in) {
  const int64_t rows = static_cast<int64_t>(d.batch * d.height);
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;

#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; ++row) {
    const int64_t b = row / H, y = row % H;
    for (int64_t x = 0; x < W; ++x) {
      Real* gi = grad_in.data() + ((b * H + y) * W + x) * Ci;
      for (size_t kh = 0; kh < d.kernel_h; ++kh) {
        // output row h sees input row y through tap kh when y = h + kh - ph
        const int64_t h = y - static_cast<int64_t>(kh) + ph;
        if (h < 0 || h >= H) continue;
        for (size_t kw = 0; kw < d.kernel_w; ++kw) {
          const int64_t w = x - static_cast<int64_t>(kw) + pw;
          if (w < 0 || w >= W) continue;
          const Real* go = grad_out.data() + ((b * H + h) * W + w) * Co;
          const Real* wk = weight.data() + (kh * d.kernel_w + kw) * Ci * Co;
          for (size_t ci = 0; ci < Ci; ++ci) {
            const Real* wrow = wk + ci * Co;
            Real acc = 0.0;
            for (size_t co = 0; co < Co; ++co) acc += go[co] * wrow[co];
            gi[ci] += acc;
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvDims& d, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias) {
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;
  const int64_t taps = static_cast<int64_t>(d.kernel_h * d.kernel_w * Ci);

#pragma omp parallel for schedule(static)
  for (int64_t tap = 0; tap < taps; ++tap) {
    const int64_t ci = tap % static_cast<int64_t>(Ci);
    const int64_t k = tap / static_cast<int64_t>(Ci);
    const int64_t kh = k / static_cast<int64_t>(d.kernel_w), kw = k % static_cast<int64_t>(d.kernel_w);
    Real* gw = grad_weight.data() + tap * Co;
    for (int64_t b = 0; b < static_cast<int64_t>(d.batch); ++b) {
      for (int64_t h = 0; h < H; ++h) {
        const int64_t y = h + kh - ph;
        if (y < 0 || y >= H) continue;
        for (int64_t w = 0; w < W; ++w) {
          const int64_t x = w + kw - pw;
          if (x < 0 || x >= W) continue;
          const Real v = in[((b * H + y) * W + x) * Ci + ci];
          const Real* go = grad_out.data() + ((b * H + h) * W + w) * Co;
          for (size_t co = 0; co < Co; ++co) gw[co] += v * go[co];
        }
      }
    }
  }

  if (!grad_bias.empty()) {
    const size_t positions = d.batch * d.height * d.width;
    for (size_t p = 0; p < positions; ++p)
      for (size_t co = 0; co < Co; ++co) grad_bias[co] += grad_out[p * Co + co];
  }
}

void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out) {
  const size_t N = d.in_features, M = d.out_features;
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < static_cast<int64_t>(d.batch); ++b) {
    Real* o = out.data() + b * M;
    for (size_t m = 0; m < M; ++m) o[m] = bias.empty() ? 0.0 : bias[m];
    const Real* x = in.data() + b * N;
    for (size_t n = 0; n < N; ++n) {
      const Real v = x[n];
      const Real* wrow = weight.data() + n * M;
      for (size_t m = 0; m < M; ++m) o[m] += v * wrow[m];
    }
  }
}

void dense_backward_input(const DenseDims& d, std::span<const Real> grad_out,
                          std::span<const Real> weight, std::span<Real> grad_in) {
  const size_t N = d.in_features, M = d.out_features;
#pragma omp parallel for schedule(static)
  for (int64_t b = 0; b < static_cast<int64_t>(d.batch); ++b) {
    const Real* go = grad_out.data() + b * M;
    for (size_t n = 0; n < N; ++n) {
      const Real* wrow = weight.data() + n * M;
      Real acc = 0.0;
      for (size_t m = 0; m < M; ++m) acc += go[m] * wrow[m];
      grad_in[b * N + n] += acc;
    }
  }
}

void dense_backward_weight(const DenseDims& d, std::span<const Real> in,
                           std::span<const Real> grad_out, std::span<Real> grad_weight,
                           std::span<Real> grad_bias) {
  const size_t N = d.in_features, M = d.out_features;
#pragma omp parallel for schedule(static)
  for (int64_t n = 0; n < static_cast<int64_t>(N); ++n) {
    Real* gw = grad_weight.data() + n * M;
    for (size_t b = 0; b < d.batch; ++b) {
      const Real v = in[b * N + n];
      const Real* go = grad_out.data() + b * M;
      for (size_t m = 0; m < M; ++m) gw[m] += v * go[m];
    }
  }
  if (!grad_bias.empty())
    for (size_t b = 0; b < d.batch; ++b)
      for (size_t m = 0; m < M; ++m) grad_bias[m] += grad_out[b * M + m];
}

void maxpool_forward(const PoolDims& d, std::span<const Real> in, std::span<Real> out,
                     std::span<std::size_t> argmax) {
  const size_t OH = d.out_height(), OW = d.out_width(), C = d.channels;
  const int64_t rows = static_cast<int64_t>(d.batch * OH);
#pragma omp parallel for schedule(static)
  for (int64_t row = 0; row < rows; ++row) {
    const size_t b = static_cast<size_t>(row) / OH, oh = static_cast<size_t>(row) % OH;
    for (size_t ow = 0; ow < OW; ++ow) {
      for (size_t c = 0; c < C; ++c) {
        size_t best = ((b * d.height + oh * d.pool_h) * d.width + ow * d.pool_w) * C + c;
        Real best_v = in[best];
        for (size_t i = 0; i < d.pool_h; ++i) {
          for (size_t j = 0; j < d.pool_w; ++j) {
            const size_t idx = ((b * d.height + oh * d.pool_h + i) * d.width + ow * d.pool_w + j) * C + c;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const size_t o = ((b * OH + oh) * OW + ow) * C + c;
        out[o] = best_v;
        argmax[o] = best;
      }
    }
  }
}

void maxpool_backward(const PoolDims& d, std::span<const Real> grad_out,
                      std::span<const std::size_t> argmax, std::span<Real> grad_in) {
  // Pooling windows are disjoint, so every input index is hit by at most one output.
  const int64_t n = static_cast<int64_t>(d.output_size());
#pragma omp parallel for schedule(static)
  for (int64_t o = 0; o < n; ++o) grad_in[argmax[o]] += grad_out[o];
}

namespace reference {

void conv2d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out) {
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t co = 0; co < Co; ++co)
      for (int64_t h = 0; h < H; ++h)
        for (int64_t w = 0; w < W; ++w) {
          Real acc = bias.empty() ? 0.0 : bias[co];
          for (size_t kh = 0; kh < d.kernel_h; ++kh)
            for (size_t kw = 0; kw < d.kernel_w; ++kw) {
              const int64_t y = h + static_cast<int64_t>(kh) - ph;
              const int64_t x = w + static_cast<int64_t>(kw) - pw;
              if (y < 0 || y >= H || x < 0 || x >= W) continue;
              for (size_t ci = 0; ci < Ci; ++ci)
                acc += in[((b * H + y) * W + x) * Ci + ci] *
                       weight[((kh * d.kernel_w + kw) * Ci + ci) * Co + co];
            }
          out[((b * H + h) * W + w) * Co + co] = acc;
        }
}

void conv2d_backward_input(const ConvDims& d, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in) {
  // Scatter form: the transpose of the forward loop.
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t co = 0; co < Co; ++co)
      for (int64_t h = 0; h < H; ++h)
        for (int64_t w = 0; w < W; ++w) {
          const Real g = grad_out[((b * H + h) * W + w) * Co + co];
          for (size_t kh = 0; kh < d.kernel_h; ++kh)
            for (size_t kw = 0; kw < d.kernel_w; ++kw) {
              const int64_t y = h + static_cast<int64_t>(kh) - ph;
              const int64_t x = w + static_cast<int64_t>(kw) - pw;
              if (y < 0 || y >= H || x < 0 || x >= W) continue;
              for (size_t ci = 0; ci < Ci; ++ci)
                grad_in[((b * H + y) * W + x) * Ci + ci] +=
                    g * weight[((kh * d.kernel_w + kw) * Ci + ci) * Co + co];
            }
        }
}

void conv2d_backward_weight(const ConvDims& d, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias) {
  const int64_t ph = static_cast<int64_t>(d.pad_h()), pw = static_cast<int64_t>(d.pad_w());
  const int64_t H = static_cast<int64_t>(d.height), W = static_cast<int64_t>(d.width);
  const size_t Ci = d.in_channels, Co = d.out_channels;
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t co = 0; co < Co; ++co)
      for (int64_t h = 0; h < H; ++h)
        for (int64_t w = 0; w < W; ++w) {
          const Real g = grad_out[((b * H + h) * W + w) * Co + co];
          if (!grad_bias.empty()) grad_bias[co] += g;
          for (size_t kh = 0; kh < d.kernel_h; ++kh)
            for (size_t kw = 0; kw < d.kernel_w; ++kw) {
              const int64_t y = h + static_cast<int64_t>(kh) - ph;
              const int64_t x = w + static_cast<int64_t>(kw) - pw;
              if (y < 0 || y >= H || x < 0 || x >= W) continue;
              for (size_t ci = 0; ci < Ci; ++ci)
                grad_weight[((kh * d.kernel_w + kw) * Ci + ci) * Co + co] +=
                    g * in[((b * H + y) * W + x) * Ci + ci];
            }
        }
}

void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out) {
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t m = 0; m < d.out_features; ++m) {
      Real acc = bias.empty() ? 0.0 : bias[m];
      for (size_t n = 0; n < d.in_features; ++n)
        acc += in[b * d.in_features + n] * weight[n * d.out_features + m];
      out[b * d.out_features + m] = acc;
    }
}

void dense_backward_input(const DenseDims& d, std::span<const Real> grad_out,
                          std::span<const Real> weight, std::span<Real> grad_in) {
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t m = 0; m < d.out_features; ++m)
      for (size_t n = 0; n < d.in_features; ++n)
        grad_in[b * d.in_features + n] +=
            grad_out[b * d.out_features + m] * weight[n * d.out_features + m];
}

void dense_backward_weight(const DenseDims& d, std::span<const Real> in,
                           std::span<const Real> grad_out, std::span<Real> grad_weight,
                           std::span<Real> grad_bias) {
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t m = 0; m < d.out_features; ++m) {
      const Real g = grad_out[b * d.out_features + m];
      if (!grad_bias.empty()) grad_bias[m] += g;
      for (size_t n = 0; n < d.in_features; ++n)
        grad_weight[n * d.out_features + m] += in[b * d.in_features + n] * g;
    }
}

void maxpool_forward(const PoolDims& d, std::span<const Real> in, std::span<Real> out,
                     std::span<std::size_t> argmax) {
  const size_t OH = d.out_height(), OW = d.out_width(), C = d.channels;
  for (size_t b = 0; b < d.batch; ++b)
    for (size_t c = 0; c < C; ++c)
      for (size_t oh = 0; oh < OH; ++oh)
        for (size_t ow = 0; ow < OW; ++ow) {
          size_t best = 0;
          bool first = true;
          for (size_t i = 0; i < d.pool_h; ++i)
            for (size_t j = 0; j < d.pool_w; ++j) {
              const size_t idx =
                  ((b * d.height + oh * d.pool_h + i) * d.width + ow * d.pool_w + j) * C + c;
              if (first || in[idx] > in[best]) best = idx;
              first = false;
            }
          const size_t o = ((b * OH + oh) * OW + ow) * C + c;
          out[o] = in[best];
          argmax[o] = best;
        }
}

void maxpool_backward(const PoolDims& d, std::span<const Real> grad_out,
                      std::span<const std::size_t> argmax, std::span<Real> grad_in) {
  for (size_t o = 0; o < d.output_size(); ++o) grad_in[argmax[o]] += grad_out[o];
}

}  // namespace reference
}  // namespace sesn::kernels
