#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sesn/se_blocks.hpp"

namespace sesn {

/// One residual block followed by max pooling and dropout.
struct StageConfig {
  std::size_t filters;
  std::size_t ratio;
  std::size_t pool_h;
  std::size_t pool_w;
  Real dropout;
};

struct NetworkConfig {
  BlockKind block_kind = BlockKind::ConvStandardPost;
  std::vector<StageConfig> blocks = {
      {32, 2, 2, 10, 0.3},
      {64, 2, 2, 5, 0.3},
      {128, 2, 2, 5, 0.3},
  };
  std::size_t dense_units = 100;
  Real head_dropout = 0.4;
  std::size_t num_classes = 10;
  std::size_t mels = 64;
  std::size_t frames = 500;
  std::size_t channels = 3;

  /// The three-block classifier on 64x500x3 HPD input.
  static NetworkConfig standard(BlockKind kind);
  /// Desk-scale variant: 8x20x3 input, filters 4/8/16, pools (2,2),(2,2),(2,5),
  /// dense width 32 and no dropout.
  static NetworkConfig reduced(BlockKind kind);

  /// Throws ConfigError on non-divisible pooling, bad ratios or rates.
  void validate() const;
  Shape input_shape() const { return {mels, frames, channels}; }
  std::size_t flatten_width() const;
};

/// Plain-text `key = value` form; list-valued keys are comma separated.
/// `dropout` takes one rate per block, optionally followed by the head rate.
NetworkConfig parse_network_config(std::string_view text, const std::string& what = "config");
NetworkConfig load_network_config(const std::string& path);
std::string format_network_config(const NetworkConfig& cfg);

/// The assembled classifier: blocks -> pooling -> dropout, flatten,
/// Dense -> BN -> ELU -> dropout, Dense -> BN -> softmax.
class Model {
 public:
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const NetworkConfig& config() const { return cfg_; }
  ModelParams& params() { return params_; }
  const ModelParams& params() const { return params_; }
  const std::vector<BlockSpec>& blocks() const { return blocks_; }

  /// Pre-softmax scores after the final batch norm. When `trace` is given,
  /// the shape after each stage is appended to it.
  Var logits(const Var& batch, bool training, Rng& rng, std::vector<Shape>* trace = nullptr) const;
  /// Class probabilities, one simplex row per example.
  Var forward(const Var& batch, bool training, Rng& rng) const;

  /// Inference-mode argmax class per example.
  std::vector<int> predict(const Tensor& batch) const;

 private:
  friend Model build_model(const NetworkConfig& cfg, std::uint64_t seed);
  Model() = default;

  NetworkConfig cfg_;
  ModelParams params_;
  std::vector<BlockSpec> blocks_;
  LayerParams hidden_, hidden_bn_, output_, output_bn_;
};

/// Deterministic initialization from `seed`; parameter names are stable.
Model build_model(const NetworkConfig& cfg, std::uint64_t seed);

}  // namespace sesn
