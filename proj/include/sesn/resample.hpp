#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sesn/tensor.hpp"

namespace sesn {

/// Rational-ratio polyphase resampler with a Kaiser-windowed sinc low-pass.
/// Output length is ceil(n * to / from). Identity when the rates match.
std::vector<Real> resample(std::span<const Real> signal, std::uint32_t from_rate, std::uint32_t to_rate);

}  // namespace sesn
