#pragma once

#include <cstdint>

#include "sesn/stft.hpp"

namespace sesn {

inline constexpr Real kLogFloor = 1e-10;

Real hz_to_mel(Real hz);
Real mel_to_hz(Real mel);

/// Triangular filters with unit peaks, centres equally spaced on the mel
/// scale (2595 log10(1 + f/700)) between fmin and fmax.
class MelFilterbank {
 public:
  MelFilterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate, Real fmin, Real fmax);

  std::size_t mels() const { return weights_.rows; }
  std::size_t bins() const { return weights_.cols; }
  const Matrix& weights() const { return weights_; }
  Real bin_frequency(std::size_t bin) const;

  /// log(filterbank * magnitude + 1e-10), one row per filter.
  Matrix log_project(const Matrix& magnitude) const;

 private:
  Matrix weights_;
  std::size_t n_fft_;
  std::uint32_t sample_rate_;
};

/// Log-mel projection of a one-sided magnitude spectrogram from an even-length FFT.
Matrix mel_project(const Matrix& magnitude, std::uint32_t sample_rate, std::size_t n_mels = 64,
                   Real fmin = 0.0, Real fmax = 24000.0);

}  // namespace sesn
