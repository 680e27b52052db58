#pragma once

#include <cstdint>
#include <vector>

#include "sesn/params.hpp"

namespace sesn {

struct AdamConfig {
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real epsilon = 1e-8;
};

/// First and second moment estimates, one array per trainable entry.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

/// One bias-corrected Adam update of every trainable entry in `params`,
/// using `grads` (one per trainable entry, in entry order).
void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state, Real lr,
               const AdamConfig& cfg = {});

/// Same update using the gradients accumulated on the parameter nodes.
void adam_step(ModelParams& params, AdamState& state, Real lr, const AdamConfig& cfg = {});

}  // namespace sesn
