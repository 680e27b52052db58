#include "sesn/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "sesn/errors.hpp"

namespace sesn {

namespace {

constexpr std::int64_t kZeroCrossings = 16;
constexpr Real kKaiserBeta = 8.0;

Real sinc(Real x) {
  if (x == 0.0) return 1.0;
  const Real px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<Real> resample(std::span<const Real> signal, std::uint32_t from_rate, std::uint32_t to_rate) {
  if (from_rate == 0 || to_rate == 0) throw ParameterError("resample: rates must be positive");
  if (from_rate == to_rate) return {signal.begin(), signal.end()};

  const std::uint32_t g = std::gcd(from_rate, to_rate);
  const std::int64_t up = to_rate / g, down = from_rate / g;
  const std::int64_t stretch = std::max(up, down);
  const Real cutoff = 0.5 / static_cast<Real>(stretch);  // cycles per upsampled sample
  const std::int64_t half = kZeroCrossings * stretch;

  // Prototype filter on the upsampled grid, gain `up` to undo zero stuffing.
  std::vector<Real> taps(2 * half + 1);
  const Real norm = std::cyl_bessel_i(0.0, kKaiserBeta);
  for (std::int64_t k = -half; k <= half; ++k) {
    const Real r = static_cast<Real>(k) / static_cast<Real>(half);
    const Real window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    taps[k + half] = static_cast<Real>(up) * 2.0 * cutoff * sinc(2.0 * cutoff * static_cast<Real>(k)) * window;
  }

  const auto n_in = static_cast<std::int64_t>(signal.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  std::vector<Real> out(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t t = n * down;
    // input sample m sits at upsampled position m*up; keep |t - m*up| <= half
    std::int64_t m_lo = (t - half + up - 1);
    m_lo = m_lo >= 0 ? m_lo / up : -((-m_lo) / up);
    const std::int64_t m_hi = (t + half) / up;
    Real acc = 0.0;
    for (std::int64_t m = std::max<std::int64_t>(m_lo, 0); m <= std::min(m_hi, n_in - 1); ++m)
      acc += signal[static_cast<std::size_t>(m)] * taps[t - m * up + half];
    out[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

}  // namespace sesn
