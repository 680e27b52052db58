#include "sesn/se_blocks.hpp"

namespace sesn {

SeParams make_se(std::size_t channels, std::size_t ratio, Rng& rng) {
  if (ratio == 0 || channels == 0 || channels % ratio != 0)
    throw ConfigError("squeeze-excitation: channel count " + std::to_string(channels) +
                      " is not divisible by ratio " + std::to_string(ratio));
  SeParams p;
  p.ratio = ratio;
  const std::size_t hidden = channels / ratio;
  p.cse_reduce = make_dense(channels, hidden, rng);
  p.cse_expand = make_dense(hidden, channels, rng);
  p.sse = make_conv2d(1, 1, channels, 1, rng);
  return p;
}

namespace {

void require_channels(const Var& u, const SeParams& p, const char* what) {
  require_rank(u->value, 4, what);
  if (u->shape()[3] != p.channels())
    throw ShapeError(std::string(what) + ": input has " + std::to_string(u->shape()[3]) +
                     " channels, parameters expect " + std::to_string(p.channels()));
}

Var channel_gates(const Var& u, const SeParams& p) {
  const std::size_t B = u->shape()[0], C = u->shape()[3];
  Var z = reshape(global_average_pool(u), {B, C});
  Var hidden = relu(dense(z, p.cse_reduce));
  Var zhat = dense(hidden, p.cse_expand);
  return reshape(sigmoid(zhat), {B, 1, 1, C});
}

Var position_gates(const Var& u, const SeParams& p) { return sigmoid(conv2d(u, p.sse)); }

}  // namespace

Var cse(const Var& u, const SeParams& p) {
  require_channels(u, p, "cse");
  return scale_channels(u, channel_gates(u, p));
}

Var sse(const Var& u, const SeParams& p) {
  require_channels(u, p, "sse");
  return scale_positions(u, position_gates(u, p));
}

Var scse(const Var& u, const SeParams& p) { return add(cse(u, p), sse(u, p)); }

Tensor cse_gates(const Tensor& u, const SeParams& p) {
  Var in = constant(u);
  require_channels(in, p, "cse");
  return channel_gates(in, p)->value.reshaped({u.dim(0), u.dim(3)});
}

Tensor sse_gates(const Tensor& u, const SeParams& p) {
  Var in = constant(u);
  require_channels(in, p, "sse");
  return position_gates(in, p)->value.reshaped({u.dim(0), u.dim(1), u.dim(2)});
}

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::ConvResidual: return "conv_residual";
    case BlockKind::ConvPost: return "conv_post";
    case BlockKind::ConvPostElu: return "conv_post_elu";
    case BlockKind::ConvStandard: return "conv_standard";
    case BlockKind::ConvStandardPost: return "conv_standard_post";
    case BlockKind::ConvStandardPostElu: return "conv_standard_post_elu";
  }
  throw ConfigError("unknown block kind");
}

std::string block_kind_names() {
  std::string out;
  for (auto k : kAllBlockKinds) {
    if (!out.empty()) out += ", ";
    out += to_string(k);
  }
  return out;
}

BlockKind parse_block_kind(std::string_view name) {
  for (auto k : kAllBlockKinds)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown block kind '" + std::string(name) + "'; valid kinds: " +
                    block_kind_names());
}

BlockSpec make_block(BlockKind kind, std::size_t in_channels, std::size_t filters, std::size_t ratio,
                     Rng& rng) {
  if (in_channels == 0 || filters == 0) throw ConfigError("block: channel counts must be positive");
  BlockSpec s;
  s.kind = kind;
  s.in_channels = in_channels;
  s.filters = filters;
  s.ratio = ratio;
  s.conv1 = make_conv2d(3, 3, in_channels, filters, rng);
  s.bn1 = make_batchnorm(filters);
  s.conv2 = make_conv2d(3, 3, filters, filters, rng);
  s.bn2 = make_batchnorm(filters);
  s.shortcut_conv = make_conv2d(1, 1, in_channels, filters, rng);
  s.shortcut_bn = make_batchnorm(filters);
  if (kind != BlockKind::ConvResidual) s.se = make_se(filters, ratio, rng);
  return s;
}

namespace {

void register_layer(const LayerParams& p, ModelParams& params, const std::string& name) {
  params.add(name + ".weight", p.weights, true);
  if (p.bias) params.add(name + ".bias", p.bias, true);
  if (p.running_mean) params.add(name + ".running_mean", p.running_mean, false);
  if (p.running_var) params.add(name + ".running_var", p.running_var, false);
}

}  // namespace

void register_block(const BlockSpec& spec, ModelParams& params, const std::string& prefix) {
  register_layer(spec.conv1, params, prefix + ".branch.conv1");
  register_layer(spec.bn1, params, prefix + ".branch.bn1");
  register_layer(spec.conv2, params, prefix + ".branch.conv2");
  register_layer(spec.bn2, params, prefix + ".branch.bn2");
  register_layer(spec.shortcut_conv, params, prefix + ".shortcut.conv");
  register_layer(spec.shortcut_bn, params, prefix + ".shortcut.bn");
  if (spec.se) {
    register_layer(spec.se->cse_reduce, params, prefix + ".se.cse_reduce");
    register_layer(spec.se->cse_expand, params, prefix + ".se.cse_expand");
    register_layer(spec.se->sse, params, prefix + ".se.sse");
  }
}

Var residual_branch(const Var& x, const BlockSpec& spec, bool training) {
  Var h = elu(batchnorm(conv2d(x, spec.conv1), spec.bn1, training));
  return batchnorm(conv2d(h, spec.conv2), spec.bn2, training);
}

Var shortcut(const Var& x, const BlockSpec& spec, bool training) {
  return batchnorm(conv2d(x, spec.shortcut_conv), spec.shortcut_bn, training);
}

Var block_forward(const Var& x, const BlockSpec& spec, bool training,
                  const Recalibration& recalibrate) {
  const Recalibration se = recalibrate ? recalibrate : Recalibration([&spec](const Var& u) {
    if (!spec.se) throw ConfigError("block has no squeeze-excitation parameters");
    return scse(u, *spec.se);
  });

  Var f = residual_branch(x, spec, training);
  Var g = shortcut(x, spec, training);

  switch (spec.kind) {
    case BlockKind::ConvResidual: return elu(add(f, g));
    case BlockKind::ConvPost: return se(add(f, g));
    case BlockKind::ConvPostElu: return se(elu(add(f, g)));
    case BlockKind::ConvStandard: return add(se(f), g);
    case BlockKind::ConvStandardPost: return add(se(add(f, g)), g);
    case BlockKind::ConvStandardPostElu: return elu(add(se(add(f, g)), g));
  }
  throw ConfigError("block_forward: unknown block kind");
}

}  // namespace sesn
