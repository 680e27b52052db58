#include "sesn/hpd.hpp"

#include <cmath>

#include "sesn/binary_io.hpp"
#include "sesn/resample.hpp"

namespace sesn {

HpdFeature extract_hpd(const AudioClip& clip, const FrontendConfig& cfg, std::uint32_t label,
                       std::string clip_id) {
  const std::string what = clip.source_path.empty() ? std::string("clip") : clip.source_path;
  if (clip.left.size() != clip.right.size())
    throw InputError(what + ": stereo channels have different lengths");
  if (clip.sample_rate == 0) throw InputError(what + ": sample rate is zero");
  const auto expected = static_cast<std::size_t>(std::llround(cfg.clip_seconds * clip.sample_rate));
  if (clip.frames() != expected)
    throw InputError(what + ": expected " + std::to_string(expected) + " samples per channel (" +
                     std::to_string(cfg.clip_seconds) + " s), found " + std::to_string(clip.frames()));

  std::vector<Real> left = resample(clip.left, clip.sample_rate, cfg.stft.sample_rate);
  std::vector<Real> right = resample(clip.right, clip.sample_rate, cfg.stft.sample_rate);

  std::vector<Real> mono(left.size()), diff(left.size());
  for (std::size_t i = 0; i < left.size(); ++i) {
    mono[i] = 0.5 * (left[i] + right[i]);
    diff[i] = left[i] - right[i];
  }

  const MelFilterbank bank(cfg.n_mels, cfg.stft.window_samples(), cfg.stft.sample_rate, cfg.fmin, cfg.fmax);
  const HpssResult sep = hpss(magnitude(stft(mono, cfg.stft)), cfg.hpss);
  const Matrix channels[3] = {bank.log_project(sep.harmonic), bank.log_project(sep.percussive),
                              bank.log_project(magnitude(stft(diff, cfg.stft)))};

  HpdFeature f;
  f.mels = static_cast<std::uint32_t>(cfg.n_mels);
  f.frames = static_cast<std::uint32_t>(channels[0].cols);
  f.channels = 3;
  f.label = label;
  f.clip_id = std::move(clip_id);
  f.data.resize(static_cast<std::size_t>(f.mels) * f.frames * 3);
  for (std::size_t m = 0; m < f.mels; ++m)
    for (std::size_t t = 0; t < f.frames; ++t)
      for (std::size_t c = 0; c < 3; ++c)
        f.data[(m * f.frames + t) * 3 + c] = static_cast<float>(channels[c](m, t));
  return f;
}

std::vector<std::uint8_t> encode_hpd(const HpdFeature& f) {
  if (f.data.size() != static_cast<std::size_t>(f.mels) * f.frames * f.channels)
    throw ShapeError("hpd: data length does not match mels x frames x channels");
  std::vector<std::uint8_t> out;
  out.reserve(32 + f.clip_id.size() + 4 * f.data.size());
  binary::put_bytes(out, "HPDF");
  binary::put<std::uint32_t>(out, HpdFeature::kFormatVersion);
  binary::put<std::uint32_t>(out, f.mels);
  binary::put<std::uint32_t>(out, f.frames);
  binary::put<std::uint32_t>(out, f.channels);
  binary::put<std::uint32_t>(out, f.label);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.clip_id.size()));
  binary::put_bytes(out, f.clip_id);
  for (float v : f.data) binary::put<float>(out, v);
  return out;
}

HpdFeature decode_hpd(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  binary::Reader r(bytes, what);
  if (r.get_string(4) != "HPDF") r.fail("bad magic, not an HPDF feature file");
  const auto version = r.get<std::uint32_t>();
  if (version != HpdFeature::kFormatVersion) r.fail("unsupported feature version " + std::to_string(version));
  HpdFeature f;
  f.mels = r.get<std::uint32_t>();
  f.frames = r.get<std::uint32_t>();
  f.channels = r.get<std::uint32_t>();
  f.label = r.get<std::uint32_t>();
  const auto id_len = r.get<std::uint32_t>();
  f.clip_id = r.get_string(id_len);
  const std::size_t n = static_cast<std::size_t>(f.mels) * f.frames * f.channels;
  if (n == 0) r.fail("empty feature array");
  if (r.remaining() != 4 * n) r.fail("expected " + std::to_string(4 * n) + " value bytes, found " +
                                     std::to_string(r.remaining()));
  f.data.resize(n);
  for (auto& v : f.data) v = r.get<float>();
  return f;
}

void save_hpd(const std::string& path, const HpdFeature& f) { binary::write_file(path, encode_hpd(f)); }

HpdFeature load_hpd(const std::string& path) { return decode_hpd(binary::read_file(path), path); }

}  // namespace sesn
