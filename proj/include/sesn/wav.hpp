#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sesn/tensor.hpp"

namespace sesn {

/// Stereo clip with samples scaled to [-1, 1].
struct AudioClip {
  std::vector<Real> left;
  std::vector<Real> right;
  std::uint32_t sample_rate = 0;
  std::string source_path;

  std::size_t frames() const { return left.size(); }
};

enum class WavEncoding { pcm16, pcm24, pcm32, float32 };

/// Decodes a RIFF/WAVE file (PCM 16/24/32-bit or IEEE float 32-bit).
/// Throws ParseError naming the offending chunk, InputError for non-stereo data.
AudioClip read_wav(const std::string& path);
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& what);

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding);
void write_wav(const std::string& path, const AudioClip& clip, WavEncoding encoding = WavEncoding::pcm16);

}  // namespace sesn
