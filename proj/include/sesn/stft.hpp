#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "sesn/tensor.hpp"

namespace sesn {

/// Row-major real matrix; spectrogram rows are frequency bins, columns frames.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, Real fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  Real& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Real operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct StftConfig {
  std::uint32_t sample_rate = 48000;
  Real window_ms = 40.0;
  Real overlap = 0.5;

  std::size_t window_samples() const;
  std::size_t hop_samples() const;
  std::size_t bins() const { return window_samples() / 2 + 1; }
  /// floor(n / hop): the signal is zero-padded by (window - hop) / 2 on each
  /// side, so frame t is centred on sample t*hop + hop/2.
  std::size_t frame_count(std::size_t samples) const;
};

struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<std::complex<Real>> data;  // bin-major: data[bin * frames + frame]

  std::complex<Real> operator()(std::size_t bin, std::size_t frame) const { return data[bin * frames + frame]; }
};

/// Periodic-Hann windowed short-time Fourier transform, n_fft = window length.
Spectrogram stft(std::span<const Real> signal, const StftConfig& cfg);

Matrix magnitude(const Spectrogram& spec);

std::vector<Real> hann_window(std::size_t n);

}  // namespace sesn
