#include "sesn/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "sesn/errors.hpp"

namespace sesn {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  const fftw_complex* output() const { return out_; }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

std::size_t StftConfig::window_samples() const {
  return static_cast<std::size_t>(std::lround(sample_rate * window_ms / 1000.0));
}

std::size_t StftConfig::hop_samples() const {
  return static_cast<std::size_t>(std::lround(static_cast<Real>(window_samples()) * (1.0 - overlap)));
}

std::size_t StftConfig::frame_count(std::size_t samples) const { return samples / hop_samples(); }

std::vector<Real> hann_window(std::size_t n) {
  std::vector<Real> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<Real>(i) / static_cast<Real>(n));
  return w;
}

Spectrogram stft(std::span<const Real> signal, const StftConfig& cfg) {
  if (signal.empty()) throw InputError("stft: empty signal");
  if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0)) throw ParameterError("stft: overlap must lie in [0,1)");
  const std::size_t win = cfg.window_samples();
  const std::size_t hop = cfg.hop_samples();
  if (win < 2 || hop == 0) throw ParameterError("stft: window too short for the sample rate");
  if (signal.size() < win)
    throw InputError("stft: signal has " + std::to_string(signal.size()) +
                     " samples, fewer than one window of " + std::to_string(win));

  const std::size_t pad_left = (win - hop) / 2;
  const std::size_t frames = cfg.frame_count(signal.size());
  const std::size_t bins = win / 2 + 1;
  const auto window = hann_window(win);

  Spectrogram out;
  out.bins = bins;
  out.frames = frames;
  out.data.assign(bins * frames, {0.0, 0.0});

  RealFft fft(win);
  for (std::size_t t = 0; t < frames; ++t) {
    double* in = fft.input();
    for (std::size_t i = 0; i < win; ++i) {
      // padded index t*hop + i maps to signal index t*hop + i - pad_left
      const auto pos = static_cast<std::int64_t>(t * hop + i) - static_cast<std::int64_t>(pad_left);
      const bool inside = pos >= 0 && pos < static_cast<std::int64_t>(signal.size());
      in[i] = inside ? signal[static_cast<std::size_t>(pos)] * window[i] : 0.0;
    }
    fft.execute();
    const fftw_complex* spec = fft.output();
    for (std::size_t b = 0; b < bins; ++b) out.data[b * frames + t] = {spec[b][0], spec[b][1]};
  }
  return out;
}

Matrix magnitude(const Spectrogram& spec) {
  Matrix m(spec.bins, spec.frames);
  for (std::size_t i = 0; i < spec.data.size(); ++i) m.data[i] = std::abs(spec.data[i]);
  return m;
}

}  // namespace sesn
