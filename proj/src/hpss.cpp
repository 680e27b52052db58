#include "sesn/hpss.hpp"

#include <algorithm>
#include <cmath>

#include "sesn/errors.hpp"

namespace sesn {

namespace {

std::size_t mirror(std::int64_t i, std::int64_t n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return static_cast<std::size_t>(i);
}

void median_1d(const Real* src, std::size_t stride, std::size_t n, std::size_t kernel, Real* dst,
               std::size_t dst_stride, std::vector<Real>& scratch) {
  const auto half = static_cast<std::int64_t>(kernel / 2);
  scratch.resize(kernel);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < kernel; ++k) {
      const auto j = mirror(static_cast<std::int64_t>(i) + static_cast<std::int64_t>(k) - half,
                            static_cast<std::int64_t>(n));
      scratch[k] = src[j * stride];
    }
    auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(kernel / 2);
    std::nth_element(scratch.begin(), mid, scratch.end());
    dst[i * dst_stride] = *mid;
  }
}

void check_kernel(std::size_t kernel) {
  if (kernel == 0 || kernel % 2 == 0) throw ParameterError("median filter kernel must be odd");
}

}  // namespace

Matrix median_filter_time(const Matrix& m, std::size_t kernel) {
  check_kernel(kernel);
  Matrix out(m.rows, m.cols);
  std::vector<Real> scratch;
  for (std::size_t r = 0; r < m.rows; ++r)
    median_1d(m.data.data() + r * m.cols, 1, m.cols, kernel, out.data.data() + r * m.cols, 1, scratch);
  return out;
}

Matrix median_filter_freq(const Matrix& m, std::size_t kernel) {
  check_kernel(kernel);
  Matrix out(m.rows, m.cols);
  std::vector<Real> scratch;
  for (std::size_t c = 0; c < m.cols; ++c)
    median_1d(m.data.data() + c, m.cols, m.rows, kernel, out.data.data() + c, m.cols, scratch);
  return out;
}

HpssResult hpss(const Matrix& magnitude, const HpssConfig& cfg) {
  for (Real v : magnitude.data)
    if (!(v >= 0.0)) throw InputError("hpss: magnitudes must be nonnegative and finite");

  const Matrix h_env = median_filter_time(magnitude, cfg.time_kernel);
  const Matrix p_env = median_filter_freq(magnitude, cfg.freq_kernel);

  HpssResult r{Matrix(magnitude.rows, magnitude.cols), Matrix(magnitude.rows, magnitude.cols),
               Matrix(magnitude.rows, magnitude.cols), Matrix(magnitude.rows, magnitude.cols)};
  for (std::size_t i = 0; i < magnitude.data.size(); ++i) {
    const Real hp = std::pow(h_env.data[i], cfg.power);
    const Real pp = std::pow(p_env.data[i], cfg.power);
    const Real total = hp + pp;
    Real mh = 0.5, mp = 0.5;
    if (total > cfg.eps) {
      mh = hp / total;
      mp = pp / total;
    }
    r.harmonic_mask.data[i] = mh;
    r.percussive_mask.data[i] = mp;
    r.harmonic.data[i] = magnitude.data[i] * mh;
    r.percussive.data[i] = magnitude.data[i] * mp;
  }
  return r;
}

}  // namespace sesn
