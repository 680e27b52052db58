#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesn/hpss.hpp"
#include "sesn/mel.hpp"
#include "sesn/wav.hpp"

namespace sesn {

struct FrontendConfig {
  StftConfig stft;  // 48 kHz, 40 ms window, 50 % overlap
  std::size_t n_mels = 64;
  Real fmin = 0.0;
  Real fmax = 24000.0;
  HpssConfig hpss;
  Real clip_seconds = 10.0;
};

/// Three log-mel channels: harmonic and percussive parts of the mono downmix,
/// and the left-minus-right difference. Values are (mel, frame, channel) row-major.
struct HpdFeature {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t mels = 0;
  std::uint32_t frames = 0;
  std::uint32_t channels = 3;
  std::uint32_t label = 0;
  std::string clip_id;
  std::vector<float> data;

  float at(std::size_t mel, std::size_t frame, std::size_t channel) const {
    return data[(mel * frames + frame) * channels + channel];
  }
};

/// Resamples to the configured rate when needed, checks the duration and
/// computes the HPD representation. Throws InputError on malformed clips.
HpdFeature extract_hpd(const AudioClip& clip, const FrontendConfig& cfg = {}, std::uint32_t label = 0,
                       std::string clip_id = {});

/// File layout (little-endian): "HPDF" | u32 version | u32 mels | u32 frames |
/// u32 channels | u32 label | u32 id length | UTF-8 id | f32 values.
std::vector<std::uint8_t> encode_hpd(const HpdFeature& f);
HpdFeature decode_hpd(const std::vector<std::uint8_t>& bytes, const std::string& what);
void save_hpd(const std::string& path, const HpdFeature& f);
HpdFeature load_hpd(const std::string& path);

}  // namespace sesn
