#pragma once

#include "sesn/stft.hpp"

namespace sesn {

struct HpssConfig {
  std::size_t time_kernel = 17;  // median length along frames (harmonic envelope)
  std::size_t freq_kernel = 17;  // median length along bins (percussive envelope)
  Real power = 2.0;
  Real eps = 1e-10;
};

struct HpssResult {
  Matrix harmonic;
  Matrix percussive;
  Matrix harmonic_mask;
  Matrix percussive_mask;
};

/// Median filter of every row (along columns), edges mirrored half-sample symmetric.
Matrix median_filter_time(const Matrix& m, std::size_t kernel);
/// Median filter of every column (along rows).
Matrix median_filter_freq(const Matrix& m, std::size_t kernel);

/// Median-filtering harmonic/percussive separation with soft Wiener masks
/// M_h = H^p / (H^p + P^p). Where H^p + P^p <= eps both masks are 1/2, so the
/// masks always sum to one.
HpssResult hpss(const Matrix& magnitude, const HpssConfig& cfg = {});

}  // namespace sesn
