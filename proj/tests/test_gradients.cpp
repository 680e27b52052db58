#include <gtest/gtest.h>

#include "sesn/network.hpp"
#include "sesn/se_blocks.hpp"
#include "test_util.hpp"

using namespace sesn;
using sesn::testing::check_gradient;
using sesn::testing::random_tensor;

namespace {

constexpr Real kOpTol = 1e-5;
constexpr Real kNetTol = 1e-4;
// A 1e-4 stencil over a whole network can straddle a max-pool argmax switch.
constexpr Real kNetStep = 1e-6;

struct Probe {
  Tensor weights;
  Var operator()(const Var& y) const { return weighted_sum(y, weights); }
};

Probe probe_for(const Shape& shape, Rng& rng) { return {random_tensor(shape, rng)}; }

void expect_grads(const std::function<Var()>& loss, const std::vector<Var>& wrt, Real tol = kOpTol) {
  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const auto r = check_gradient(loss, wrt[i]);
    EXPECT_TRUE(r.passes(tol)) << "input " << i << " rel " << r.relative << " abs " << r.absolute;
  }
}

void expect_named(const std::function<Var()>& loss, const Var& x, const ModelParams& params, Real tol,
                  Real h = 1e-4) {
  const auto rx = check_gradient(loss, x, h);
  EXPECT_TRUE(rx.passes(tol)) << "input rel " << rx.relative;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    const auto r = check_gradient(loss, e.var, h);
    EXPECT_TRUE(r.passes(tol)) << e.name << " rel " << r.relative << " abs " << r.absolute;
  }
}

void mark_trainable(const LayerParams& p) {
  p.weights->requires_grad = true;
  if (p.bias) p.bias->requires_grad = true;
}

}  // namespace

TEST(Gradient, Conv2dInputWeightBias) {
  Rng rng(1);
  for (std::size_t k : {1u, 3u, 5u}) {
    Var x = parameter(random_tensor({2, 5, 6, 3}, rng));
    LayerParams p = make_conv2d(k, k, 3, 4, rng);
    p.bias->value = random_tensor({4}, rng);
    mark_trainable(p);
    Probe probe = probe_for({2, 5, 6, 4}, rng);
    expect_grads([&] { return probe(conv2d(x, p)); }, {x, p.weights, p.bias});
  }
}

TEST(Gradient, Dense) {
  Rng rng(2);
  Var x = parameter(random_tensor({3, 7}, rng));
  LayerParams p = make_dense(7, 5, rng);
  p.bias->value = random_tensor({5}, rng);
  mark_trainable(p);
  Probe probe = probe_for({3, 5}, rng);
  expect_grads([&] { return probe(dense(x, p)); }, {x, p.weights, p.bias});
}

TEST(Gradient, BatchNormTrainingRank4AndRank2) {
  Rng rng(3);
  for (const Shape& s : {Shape{3, 4, 5, 2}, Shape{6, 4}}) {
    Var x = parameter(random_tensor(s, rng));
    LayerParams p = make_batchnorm(s.back());
    p.weights->value = random_tensor({s.back()}, rng, 0.5, 1.5);
    p.bias->value = random_tensor({s.back()}, rng);
    mark_trainable(p);
    Probe probe = probe_for(s, rng);
    expect_grads([&] { return probe(batchnorm(x, p, true)); }, {x, p.weights, p.bias});
  }
}

TEST(Gradient, BatchNormInference) {
  Rng rng(4);
  Var x = parameter(random_tensor({2, 3, 3, 4}, rng));
  LayerParams p = make_batchnorm(4);
  p.running_mean->value = random_tensor({4}, rng);
  p.running_var->value = random_tensor({4}, rng, 0.5, 2.0);
  p.weights->value = random_tensor({4}, rng, 0.5, 1.5);
  mark_trainable(p);
  Probe probe = probe_for({2, 3, 3, 4}, rng);
  expect_grads([&] { return probe(batchnorm(x, p, false)); }, {x, p.weights, p.bias});
}

TEST(Gradient, MaxPool) {
  Rng rng(5);
  Var x = parameter(random_tensor({2, 4, 10, 3}, rng));
  Probe probe = probe_for({2, 2, 2, 3}, rng);
  expect_grads([&] { return probe(maxpool2d(x, 2, 5)); }, {x});
}

TEST(Gradient, GlobalAveragePool) {
  Rng rng(6);
  Var x = parameter(random_tensor({2, 3, 4, 5}, rng));
  Probe probe = probe_for({2, 1, 1, 5}, rng);
  expect_grads([&] { return probe(global_average_pool(x)); }, {x});
}

TEST(Gradient, DropoutWithFixedMask) {
  Rng rng(7);
  Var x = parameter(random_tensor({4, 6}, rng));
  Probe probe = probe_for({4, 6}, rng);
  expect_grads(
      [&] {
        Rng mask_rng(99);
        return probe(dropout(x, 0.3, true, mask_rng));
      },
      {x});
}

TEST(Gradient, PointwiseActivations) {
  Rng rng(8);
  Var x = parameter(random_tensor({3, 8}, rng, -2.0, 2.0));
  Probe probe = probe_for({3, 8}, rng);
  expect_grads([&] { return probe(elu(x)); }, {x});
  expect_grads([&] { return probe(elu(x, 0.7)); }, {x});
  expect_grads([&] { return probe(relu(x)); }, {x});
  expect_grads([&] { return probe(sigmoid(x)); }, {x});
  expect_grads([&] { return probe(softmax(x)); }, {x});
  expect_grads([&] { return probe(scale(x, -1.7)); }, {x});
}

TEST(Gradient, BinaryElementwise) {
  Rng rng(9);
  Var a = parameter(random_tensor({2, 3, 4, 2}, rng));
  Var b = parameter(random_tensor({2, 3, 4, 2}, rng));
  Probe probe = probe_for({2, 3, 4, 2}, rng);
  expect_grads([&] { return probe(add(a, b)); }, {a, b});
  expect_grads([&] { return probe(multiply(a, b)); }, {a, b});
  expect_grads([&] { return probe(multiply(a, a)); }, {a});
}

TEST(Gradient, ScaleChannelsAndPositions) {
  Rng rng(10);
  Var u = parameter(random_tensor({2, 3, 4, 5}, rng));
  Var gc = parameter(random_tensor({2, 1, 1, 5}, rng));
  Var gp = parameter(random_tensor({2, 3, 4, 1}, rng));
  Probe probe = probe_for({2, 3, 4, 5}, rng);
  expect_grads([&] { return probe(scale_channels(u, gc)); }, {u, gc});
  expect_grads([&] { return probe(scale_positions(u, gp)); }, {u, gp});
}

TEST(Gradient, FlattenReshape) {
  Rng rng(11);
  Var x = parameter(random_tensor({2, 3, 2, 2}, rng));
  Probe p1 = probe_for({2, 12}, rng);
  Probe p2 = probe_for({4, 6}, rng);
  expect_grads([&] { return p1(flatten(x)); }, {x});
  expect_grads([&] { return p2(reshape(x, {4, 6})); }, {x});
}

TEST(Gradient, Losses) {
  Rng rng(12);
  Var z = parameter(random_tensor({4, 5}, rng, -2.0, 2.0));
  Tensor y({4, 5});
  for (std::size_t r = 0; r < 4; ++r) y[r * 5 + (r * 3) % 5] = 1.0;
  expect_grads([&] { return softmax_cross_entropy(z, y); }, {z});
  expect_grads([&] { return cross_entropy(softmax(z), y); }, {z});
}

TEST(Gradient, SqueezeExcitationFunctions) {
  Rng rng(13);
  SeParams se = make_se(6, 2, rng);
  se.cse_reduce.bias->value = random_tensor({3}, rng);
  se.cse_expand.bias->value = random_tensor({6}, rng);
  se.sse.bias->value = random_tensor({1}, rng);
  for (const auto* p : {&se.cse_reduce, &se.cse_expand, &se.sse}) mark_trainable(*p);
  Var u = parameter(random_tensor({2, 4, 5, 6}, rng));
  Probe probe = probe_for({2, 4, 5, 6}, rng);
  const std::vector<Var> cse_wrt = {u, se.cse_reduce.weights, se.cse_reduce.bias, se.cse_expand.weights,
                                    se.cse_expand.bias};
  const std::vector<Var> sse_wrt = {u, se.sse.weights, se.sse.bias};
  expect_grads([&] { return probe(cse(u, se)); }, cse_wrt);
  expect_grads([&] { return probe(sse(u, se)); }, sse_wrt);
  std::vector<Var> all = cse_wrt;
  all.insert(all.end(), sse_wrt.begin() + 1, sse_wrt.end());
  expect_grads([&] { return probe(scse(u, se)); }, all);
}

class BlockGradient : public ::testing::TestWithParam<BlockKind> {};

TEST_P(BlockGradient, AllInputsAndParameters) {
  Rng rng(14);
  BlockSpec spec = make_block(GetParam(), 3, 4, 2, rng);
  ModelParams params;
  register_block(spec, params, "b");
  Var x = parameter(random_tensor({3, 4, 5, 3}, rng));
  Probe probe = probe_for({3, 4, 5, 4}, rng);
  auto loss = [&] { return probe(block_forward(x, spec, true)); };
  expect_named(loss, x, params, kOpTol);
}

TEST_P(BlockGradient, ReducedNetworkEndToEnd) {
  const NetworkConfig cfg = NetworkConfig::reduced(GetParam());
  Model model = build_model(cfg, 5);
  Rng rng(15);
  Var x = parameter(random_tensor({4, cfg.mels, cfg.frames, cfg.channels}, rng));
  Tensor y({4, cfg.num_classes});
  for (std::size_t r = 0; r < 4; ++r) y[r * cfg.num_classes + r] = 1.0;
  auto loss = [&] {
    Rng drop(77);
    return softmax_cross_entropy(model.logits(x, true, drop), y);
  };
  expect_named(loss, x, model.params(), kNetTol, kNetStep);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, BlockGradient, ::testing::ValuesIn(kAllBlockKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });
