#pragma once
// Helpers for driving the sesn executable from tests.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sesn/dataset.hpp"
#include "sesn/wav.hpp"

namespace sesn::testing {

namespace fs = std::filesystem;

struct CommandResult {
  int code = -1;
  std::string out;
  std::string err;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Runs the CLI with `args` (already shell-quoted), capturing both streams.
inline CommandResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::create_directories(scratch);
  const fs::path out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = std::string("SESN_LOG=error '") + SESN_CLI_PATH + "' " + args + " > '" + out.string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CommandResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

inline std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// A 10 s, 48 kHz stereo clip: a tone per channel plus a click train and
/// seeded noise, so every HPD channel carries signal.
inline AudioClip fixture_clip(unsigned variant) {
  AudioClip c;
  c.sample_rate = 48000;
  c.left.resize(480000);
  c.right.resize(480000);
  std::uint64_t state = 0x9E3779B97F4A7C15ull * (variant + 1);
  for (std::size_t i = 0; i < 480000; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    const double n = (static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5) * 0.02;
    const double t = static_cast<double>(i) / 48000.0;
    c.left[i] = 0.3 * std::sin(2.0 * M_PI * (220.0 + 110.0 * variant) * t) + n;
    c.right[i] = 0.2 * std::sin(2.0 * M_PI * (330.0 + 55.0 * variant) * t) - n;
    if (i % (12000 * (variant + 1)) == 0) c.left[i] += 0.7;
  }
  return c;
}

/// Writes `count` fixture clips plus a manifest into `dir`.
inline void write_audio_fixture(const fs::path& dir, unsigned count) {
  fs::create_directories(dir / "audio");
  std::string manifest = "filename\tscene_label\n";
  for (unsigned i = 0; i < count; ++i) {
    const std::string name = "audio/clip" + std::to_string(i) + ".wav";
    write_wav((dir / name).string(), fixture_clip(i), WavEncoding::pcm16);
    manifest += name + "\t" + std::string(kSceneLabels[i % 10]) + "\n";
  }
  std::ofstream(dir / "manifest.tsv") << manifest;
}

}  // namespace sesn::testing
