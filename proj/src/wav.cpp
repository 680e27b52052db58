#include "sesn/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "sesn/binary_io.hpp"

namespace sesn {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

Real decode_sample(const std::uint8_t* p, const FmtChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                               (static_cast<std::uint32_t>(p[2]) << 16) |
                               (static_cast<std::uint32_t>(p[3]) << 24);
    return static_cast<Real>(std::bit_cast<float>(bits));
  }
  switch (fmt.bits) {
    case 16: {
      const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return v / 32768.0;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    case 32: {
      const auto v = static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                               (static_cast<std::uint32_t>(p[1]) << 8) |
                                               (static_cast<std::uint32_t>(p[2]) << 16) |
                                               (static_cast<std::uint32_t>(p[3]) << 24));
      return v / 2147483648.0;
    }
  }
  return 0.0;
}

}  // namespace

AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  binary::Reader r(bytes, what);
  if (bytes.size() < 12) throw ParseError(what + ": RIFF header truncated");
  if (r.get_string(4) != "RIFF") throw ParseError(what + ": RIFF chunk: missing 'RIFF' tag");
  r.get<std::uint32_t>();
  if (r.get_string(4) != "WAVE") throw ParseError(what + ": RIFF chunk: form type is not 'WAVE'");

  FmtChunk fmt;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  while (r.remaining() >= 8) {
    const std::string id = r.get_string(4);
    const auto size = r.get<std::uint32_t>();
    if (size > r.remaining())
      throw ParseError(what + ": '" + id + "' chunk: declares " + std::to_string(size) +
                       " bytes but only " + std::to_string(r.remaining()) + " remain");
    const std::size_t start = r.position();
    if (id == "fmt ") {
      if (size < 16) throw ParseError(what + ": 'fmt ' chunk: too short");
      fmt.format = r.get<std::uint16_t>();
      fmt.channels = r.get<std::uint16_t>();
      fmt.sample_rate = r.get<std::uint32_t>();
      r.get<std::uint32_t>();  // byte rate
      fmt.block_align = r.get<std::uint16_t>();
      fmt.bits = r.get<std::uint16_t>();
      if (fmt.format == kFormatExtensible) {
        if (size < 40) throw ParseError(what + ": 'fmt ' chunk: extensible header too short");
        r.get<std::uint16_t>();  // cbSize
        r.get<std::uint16_t>();  // valid bits
        r.get<std::uint32_t>();  // channel mask
        fmt.format = r.get<std::uint16_t>();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data = bytes.data() + start;
      data_size = size;
    }
    // skip the rest of the chunk plus its pad byte
    std::size_t skip = start + size + (size & 1u) - r.position();
    skip = std::min(skip, r.remaining());
    r.get_string(skip);
  }

  if (!have_fmt) throw ParseError(what + ": 'fmt ' chunk: missing");
  const bool pcm_ok = fmt.format == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool float_ok = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm_ok && !float_ok)
    throw ParseError(what + ": 'fmt ' chunk: unsupported codec (format tag " +
                     std::to_string(fmt.format) + ", " + std::to_string(fmt.bits) + " bits)");
  if (fmt.channels == 0 || fmt.block_align != fmt.channels * (fmt.bits / 8))
    throw ParseError(what + ": 'fmt ' chunk: inconsistent block alignment");
  if (!data) throw ParseError(what + ": 'data' chunk: missing");
  if (data_size % fmt.block_align != 0)
    throw ParseError(what + ": 'data' chunk: size is not a whole number of frames");
  if (fmt.channels != 2)
    throw InputError(what + ": expected a stereo file, found " + std::to_string(fmt.channels) +
                     " channel(s)");

  AudioClip clip;
  clip.sample_rate = fmt.sample_rate;
  clip.source_path = what;
  const std::size_t frames = data_size / fmt.block_align;
  const std::size_t width = fmt.bits / 8;
  clip.left.resize(frames);
  clip.right.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data + i * fmt.block_align;
    clip.left[i] = decode_sample(frame, fmt);
    clip.right[i] = decode_sample(frame + width, fmt);
  }
  return clip;
}

AudioClip read_wav(const std::string& path) { return decode_wav(binary::read_file(path), path); }

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  if (clip.left.size() != clip.right.size()) throw InputError("encode_wav: channel lengths differ");
  std::uint16_t bits = 16, format = kFormatPcm;
  switch (encoding) {
    case WavEncoding::pcm16: bits = 16; break;
    case WavEncoding::pcm24: bits = 24; break;
    case WavEncoding::pcm32: bits = 32; break;
    case WavEncoding::float32: bits = 32; format = kFormatFloat; break;
  }
  const std::uint16_t align = 2 * bits / 8;
  const auto data_size = static_cast<std::uint32_t>(clip.frames() * align);

  std::vector<std::uint8_t> out;
  binary::put_bytes(out, "RIFF");
  binary::put<std::uint32_t>(out, 36 + data_size);
  binary::put_bytes(out, "WAVE");
  binary::put_bytes(out, "fmt ");
  binary::put<std::uint32_t>(out, 16);
  binary::put<std::uint16_t>(out, format);
  binary::put<std::uint16_t>(out, 2);
  binary::put<std::uint32_t>(out, clip.sample_rate);
  binary::put<std::uint32_t>(out, clip.sample_rate * align);
  binary::put<std::uint16_t>(out, align);
  binary::put<std::uint16_t>(out, bits);
  binary::put_bytes(out, "data");
  binary::put<std::uint32_t>(out, data_size);

  auto put_sample = [&](Real v) {
    v = std::clamp(v, -1.0, 1.0);
    switch (encoding) {
      case WavEncoding::pcm16:
        binary::put<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L)));
        break;
      case WavEncoding::pcm24: {
        const auto q = static_cast<std::int32_t>(std::clamp(std::lround(v * 8388608.0), -8388608L, 8388607L));
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
        out.push_back(static_cast<std::uint8_t>((q >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((q >> 16) & 0xFF));
        break;
      }
      case WavEncoding::pcm32:
        binary::put<std::int32_t>(out, static_cast<std::int32_t>(std::clamp<long long>(std::llround(v * 2147483648.0), -2147483648LL, 2147483647LL)));
        break;
      case WavEncoding::float32:
        binary::put<float>(out, static_cast<float>(v));
        break;
    }
  };
  for (std::size_t i = 0; i < clip.frames(); ++i) {
    put_sample(clip.left[i]);
    put_sample(clip.right[i]);
  }
  return out;
}

void write_wav(const std::string& path, const AudioClip& clip, WavEncoding encoding) {
  binary::write_file(path, encode_wav(clip, encoding));
}

}  // namespace sesn
