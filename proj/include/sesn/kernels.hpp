#pragma once

// Hot loops of the engine. Each kernel exists twice: an OpenMP version used
// by the autograd ops, and a plain nested-loop version in `reference` kept for
// tests and benchmarks. The OpenMP kernels partition work so that every output
// element is reduced by a single thread in a fixed order, which makes their
// results bitwise independent of the thread count.

#include <cstddef>
#include <cstdint>
#include <span>

#include "sesn/tensor.hpp"

namespace sesn::kernels {

/// Stride-1 convolution with "same" zero padding. Input is BHWC, weights are
/// (kh, kw, in, out), output is BHW x out.
struct ConvDims {
  std::size_t batch, height, width, in_channels, out_channels, kernel_h, kernel_w;

  std::size_t pad_h() const { return (kernel_h - 1) / 2; }
  std::size_t pad_w() const { return (kernel_w - 1) / 2; }
  std::size_t input_size() const { return batch * height * width * in_channels; }
  std::size_t output_size() const { return batch * height * width * out_channels; }
  std::size_t weight_size() const { return kernel_h * kernel_w * in_channels * out_channels; }
};

struct DenseDims {
  std::size_t batch, in_features, out_features;
};

struct PoolDims {
  std::size_t batch, height, width, channels, pool_h, pool_w;

  std::size_t out_height() const { return height / pool_h; }
  std::size_t out_width() const { return width / pool_w; }
  std::size_t output_size() const { return batch * out_height() * out_width() * channels; }
};

// Forward kernels overwrite `out`; backward kernels accumulate into their
// gradient buffers.

void conv2d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out);
void conv2d_backward_input(const ConvDims& d, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in);
void conv2d_backward_weight(const ConvDims& d, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias);

void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out);
void dense_backward_input(const DenseDims& d, std::span<const Real> grad_out,
                          std::span<const Real> weight, std::span<Real> grad_in);
void dense_backward_weight(const DenseDims& d, std::span<const Real> in,
                           std::span<const Real> grad_out, std::span<Real> grad_weight,
                           std::span<Real> grad_bias);

/// `argmax` receives, for every output element, the flat input index it came from.
void maxpool_forward(const PoolDims& d, std::span<const Real> in, std::span<Real> out,
                     std::span<std::size_t> argmax);
void maxpool_backward(const PoolDims& d, std::span<const Real> grad_out,
                      std::span<const std::size_t> argmax, std::span<Real> grad_in);

namespace reference {

void conv2d_forward(const ConvDims& d, std::span<const Real> in, std::span<const Real> weight,
                    std::span<const Real> bias, std::span<Real> out);
void conv2d_backward_input(const ConvDims& d, std::span<const Real> grad_out,
                           std::span<const Real> weight, std::span<Real> grad_in);
void conv2d_backward_weight(const ConvDims& d, std::span<const Real> in,
                            std::span<const Real> grad_out, std::span<Real> grad_weight,
                            std::span<Real> grad_bias);

void dense_forward(const DenseDims& d, std::span<const Real> in, std::span<const Real> weight,
                   std::span<const Real> bias, std::span<Real> out);
void dense_backward_input(const DenseDims& d, std::span<const Real> grad_out,
                          std::span<const Real> weight, std::span<Real> grad_in);
void dense_backward_weight(const DenseDims& d, std::span<const Real> in,
                           std::span<const Real> grad_out, std::span<Real> grad_weight,
                           std::span<Real> grad_bias);

void maxpool_forward(const PoolDims& d, std::span<const Real> in, std::span<Real> out,
                     std::span<std::size_t> argmax);
void maxpool_backward(const PoolDims& d, std::span<const Real> grad_out,
                      std::span<const std::size_t> argmax, std::span<Real> grad_in);

}  // namespace reference
}  // namespace sesn::kernels
