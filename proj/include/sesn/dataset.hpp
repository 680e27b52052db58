#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sesn/hpd.hpp"
#include "sesn/ops.hpp"

namespace sesn {

/// Scene vocabulary in its frozen (alphabetical) order; index = class id.
inline constexpr std::array<std::string_view, 10> kSceneLabels = {
    "airport", "bus",  "metro", "metro_station", "park", "public_square", "shopping_mall",
    "street_pedestrian", "street_traffic", "tram"};

/// Class id of a scene name, or -1 when the name is not in the vocabulary.
int scene_index(std::string_view label);

enum class Split { train, validation };

struct ManifestEntry {
  std::string path;
  std::string label;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// One split of the dataset: "relative/path.wav<TAB>label" per line. A leading
/// "filename<TAB>scene_label" header line is accepted and skipped.
struct Manifest {
  Split split = Split::train;
  std::vector<ManifestEntry> entries;
};

Manifest parse_manifest(std::string_view text, const std::string& what, Split split = Split::train);
Manifest load_manifest(const std::string& path, Split split = Split::train);
std::string format_manifest(const Manifest& m);
void save_manifest(const std::string& path, const Manifest& m);
/// Throws InputError when a path occurs in both manifests.
void check_disjoint(const Manifest& a, const Manifest& b);

/// Feature arrays of one split, stored contiguously as (H, W, C) samples.
struct Dataset {
  Shape sample_shape;  // mels, frames, channels
  std::vector<float> data;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
  std::size_t sample_size() const { return shape_size(sample_shape); }
  void append(const HpdFeature& f);
  /// FNV-1a over ids and labels in order; identifies the evaluation set.
  std::uint64_t fingerprint() const;
};

/// Loads every *.hpdf file of a directory in lexicographic file-name order.
Dataset load_feature_dir(const std::string& dir);

struct Batch {
  Tensor features;  // B x H x W x C
  Tensor labels;    // B x K one-hot
  std::vector<std::size_t> indices;
};

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t num_classes);

/// Seeded per-epoch shuffling into consecutive batches; the last batch may be
/// short. With `merge_singleton_tail`, a final batch of one example is folded
/// into the previous batch (batch norm cannot train on a single example).
class Batcher {
 public:
  Batcher(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed, std::size_t num_classes = 10,
          bool merge_singleton_tail = false);

  /// Draws the next permutation and returns its batches' index lists.
  std::vector<std::vector<std::size_t>> next_epoch();

 private:
  const Dataset& data_;
  std::size_t batch_size_;
  std::size_t num_classes_;
  bool merge_tail_;
  Rng rng_;
};

/// Class-conditional Gaussian blobs (unit noise). Each class mean is a fixed
/// +-1.5 pattern, so per-element means of two classes differ by 0 or 3 sigma.
/// Means depend on `seed` only; `stream` selects an independent noise draw.
Dataset synth_dataset(std::size_t classes, std::size_t per_class, const Shape& shape, std::uint64_t seed,
                      std::uint64_t stream = 0);

}  // namespace sesn
