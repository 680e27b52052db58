#include "sesn/optim.hpp"

#include <cmath>

namespace sesn {

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    s.first_moment.emplace_back(e.var->value.shape(), 0.0);
    s.second_moment.emplace_back(e.var->value.shape(), 0.0);
  }
  return s;
}

void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, Real lr,
               const AdamConfig& cfg) {
  std::size_t k = 0;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    if (k >= grads.size() || k >= state.first_moment.size() || k >= state.second_moment.size())
      throw ShapeError("adam: fewer gradients or moments than trainable parameters");
    const Shape& s = e.var->value.shape();
    if (grads[k].shape() != s || state.first_moment[k].shape() != s ||
        state.second_moment[k].shape() != s)
      throw ShapeError("adam: shape mismatch for " + e.name);
    ++k;
  }
  if (k != grads.size() || k != state.first_moment.size())
    throw ShapeError("adam: more gradients or moments than trainable parameters");

  ++state.step;
  const Real t = static_cast<Real>(state.step);
  const Real correct1 = 1.0 - std::pow(cfg.beta1, t);
  const Real correct2 = 1.0 - std::pow(cfg.beta2, t);

  k = 0;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    Tensor& w = e.var->value;
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const Real m_hat = m[i] / correct1;
      const Real v_hat = v[i] / correct2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    ++k;
  }
}

void adam_step(ModelParams& params, AdamState& state, Real lr, const AdamConfig& cfg) {
  std::vector<Tensor> grads;
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    grads.push_back(e.var->grad.empty() ? Tensor(e.var->value.shape(), 0.0) : e.var->grad);
  }
  adam_step(params, grads, state, lr, cfg);
}

}  // namespace sesn
