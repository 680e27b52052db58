#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "sesn/ops.hpp"
#include "sesn/params.hpp"

namespace sesn {

/// Weights of the three squeeze-excitation recalibrations over C channels.
struct SeParams {
  std::size_t ratio = 2;
  LayerParams cse_reduce;  // C -> C/ratio, followed by ReLU
  LayerParams cse_expand;  // C/ratio -> C, followed by sigmoid
  LayerParams sse;         // 1x1 convolution C -> 1, followed by sigmoid

  std::size_t channels() const { return cse_reduce.weights->value.dim(0); }
  std::size_t bottleneck() const { return cse_reduce.weights->value.dim(1); }
};

/// Throws ConfigError unless `channels` is a positive multiple of `ratio`.
SeParams make_se(std::size_t channels, std::size_t ratio, Rng& rng);

/// Spatial squeeze, channel excitation: every channel scaled by its own gate.
Var cse(const Var& u, const SeParams& p);
/// Channel squeeze, spatial excitation: every location scaled by its own gate.
Var sse(const Var& u, const SeParams& p);
/// Sum of the two recalibrations on the same input.
Var scse(const Var& u, const SeParams& p);

/// Gates computed by cse (B x C) and sse (B x H x W), exposed for inspection.
Tensor cse_gates(const Tensor& u, const SeParams& p);
Tensor sse_gates(const Tensor& u, const SeParams& p);

/// Where the recalibration and the ELU sit relative to the residual sum
/// H(X) = F(X) + g(X).
enum class BlockKind {
  ConvResidual,         // R(H)
  ConvPost,             // SE(H)
  ConvPostElu,          // SE(R(H))
  ConvStandard,         // SE(F) + g
  ConvStandardPost,     // SE(H) + g
  ConvStandardPostElu,  // R(SE(H) + g)
};

inline constexpr std::array<BlockKind, 6> kAllBlockKinds = {
    BlockKind::ConvResidual, BlockKind::ConvPost,         BlockKind::ConvPostElu,
    BlockKind::ConvStandard, BlockKind::ConvStandardPost, BlockKind::ConvStandardPostElu};

std::string_view to_string(BlockKind kind);
/// Accepts the serialized names (conv_residual, ..., conv_standard_post_elu).
BlockKind parse_block_kind(std::string_view name);
std::string block_kind_names();

struct BlockSpec {
  BlockKind kind = BlockKind::ConvStandardPost;
  std::size_t in_channels = 0;
  std::size_t filters = 0;
  std::size_t ratio = 2;
  // residual branch F: conv3x3 -> BN -> ELU -> conv3x3 -> BN
  LayerParams conv1, bn1, conv2, bn2;
  // projection shortcut g: conv1x1 -> BN
  LayerParams shortcut_conv, shortcut_bn;
  // absent for ConvResidual, which has no recalibration
  std::optional<SeParams> se;
};

BlockSpec make_block(BlockKind kind, std::size_t in_channels, std::size_t filters, std::size_t ratio,
                     Rng& rng);

/// Adds every array of the block to `params` under `prefix`.
void register_block(const BlockSpec& spec, ModelParams& params, const std::string& prefix);

Var residual_branch(const Var& x, const BlockSpec& spec, bool training);
Var shortcut(const Var& x, const BlockSpec& spec, bool training);

/// Replacement for the recalibration inside a block; tests pass identity.
using Recalibration = std::function<Var(const Var&)>;

/// One residual SE block. The shortcut is evaluated once and reused wherever
/// the block equation mentions it.
Var block_forward(const Var& x, const BlockSpec& spec, bool training,
                  const Recalibration& recalibrate = {});

}  // namespace sesn
