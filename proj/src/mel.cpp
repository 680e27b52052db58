#include "sesn/mel.hpp"

#include <cmath>
#include <string>

#include "sesn/errors.hpp"

namespace sesn {

Real hz_to_mel(Real hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

Real mel_to_hz(Real mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(std::size_t n_mels, std::size_t n_fft, std::uint32_t sample_rate, Real fmin,
                             Real fmax)
    : weights_(n_mels, n_fft / 2 + 1), n_fft_(n_fft), sample_rate_(sample_rate) {
  const Real nyquist = sample_rate / 2.0;
  if (n_mels == 0 || n_fft < 2) throw ConfigError("mel: need at least one filter and two FFT points");
  if (fmax > nyquist)
    throw ConfigError("mel: fmax " + std::to_string(fmax) + " Hz exceeds Nyquist " + std::to_string(nyquist));
  if (!(fmin >= 0.0 && fmin < fmax)) throw ConfigError("mel: need 0 <= fmin < fmax");

  const Real lo = hz_to_mel(fmin), hi = hz_to_mel(fmax);
  std::vector<Real> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<Real>(i) / static_cast<Real>(n_mels + 1));

  for (std::size_t m = 0; m < n_mels; ++m) {
    const Real left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    bool any = false;
    for (std::size_t b = 0; b < weights_.cols; ++b) {
      const Real f = bin_frequency(b);
      Real w = 0.0;
      if (f > left && f <= centre)
        w = (f - left) / (centre - left);
      else if (f > centre && f < right)
        w = (right - f) / (right - centre);
      weights_(m, b) = w;
      any = any || w > 0.0;
    }
    if (!any)
      throw ConfigError("mel: filter " + std::to_string(m) + " covers no FFT bin; use fewer filters or a longer window");
  }
}

Real MelFilterbank::bin_frequency(std::size_t bin) const {
  return static_cast<Real>(bin) * sample_rate_ / static_cast<Real>(n_fft_);
}

Matrix MelFilterbank::log_project(const Matrix& magnitude) const {
  if (magnitude.rows != bins())
    throw ShapeError("mel: spectrogram has " + std::to_string(magnitude.rows) + " bins, filterbank expects " +
                     std::to_string(bins()));
  Matrix out(mels(), magnitude.cols);
  for (std::size_t m = 0; m < mels(); ++m) {
    for (std::size_t t = 0; t < magnitude.cols; ++t) {
      Real acc = 0.0;
      for (std::size_t b = 0; b < bins(); ++b) {
        const Real w = weights_(m, b);
        if (w != 0.0) acc += w * magnitude(b, t);
      }
      out(m, t) = std::log(acc + kLogFloor);
    }
  }
  return out;
}

}  // namespace sesn

namespace sesn {

Matrix mel_project(const Matrix& magnitude, std::uint32_t sample_rate, std::size_t n_mels, Real fmin,
                   Real fmax) {
  if (magnitude.rows < 2) throw ShapeError("mel: spectrogram needs at least two bins");
  const MelFilterbank bank(n_mels, 2 * (magnitude.rows - 1), sample_rate, fmin, fmax);
  return bank.log_project(magnitude);
}

}  // namespace sesn
