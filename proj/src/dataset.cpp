#include "sesn/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace sesn {

int scene_index(std::string_view label) {
  for (std::size_t i = 0; i < kSceneLabels.size(); ++i)
    if (kSceneLabels[i] == label) return static_cast<int>(i);
  return -1;
}

Manifest parse_manifest(std::string_view text, const std::string& what, Split split) {
  Manifest m;
  m.split = split;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(what + ":" + std::to_string(lineno) + ": expected 'path<TAB>label'");
    std::string path = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    if (lineno == 1 && path == "filename" && label == "scene_label") continue;
    if (label.find('\t') != std::string::npos)
      throw ParseError(what + ":" + std::to_string(lineno) + ": too many columns");
    if (path.empty()) throw ParseError(what + ":" + std::to_string(lineno) + ": empty path");
    if (scene_index(label) < 0)
      throw ParseError(what + ":" + std::to_string(lineno) + ": unknown scene label '" + label + "'");
    m.entries.push_back({std::move(path), std::move(label)});
  }
  return m;
}

Manifest load_manifest(const std::string& path, Split split) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open manifest");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path, split);
}

std::string format_manifest(const Manifest& m) {
  std::string out;
  for (const auto& e : m.entries) out += e.path + '\t' + e.label + '\n';
  return out;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << format_manifest(m);
}

void check_disjoint(const Manifest& a, const Manifest& b) {
  std::set<std::string> seen;
  for (const auto& e : a.entries) seen.insert(e.path);
  for (const auto& e : b.entries)
    if (seen.count(e.path)) throw InputError("manifest path appears in both splits: " + e.path);
}

void Dataset::append(const HpdFeature& f) {
  const Shape shape{f.mels, f.frames, f.channels};
  if (sample_shape.empty()) sample_shape = shape;
  if (shape != sample_shape)
    throw ShapeError("feature " + f.clip_id + " has shape " + shape_to_string(shape) + ", dataset holds " +
                     shape_to_string(sample_shape));
  data.insert(data.end(), f.data.begin(), f.data.end());
  labels.push_back(static_cast<int>(f.label));
  ids.push_back(f.clip_id);
}

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (std::size_t i = 0; i < size(); ++i) {
    for (char c : ids[i]) mix(static_cast<std::uint8_t>(c));
    mix(0);
    const auto label = static_cast<std::uint32_t>(labels[i]);
    for (int s = 0; s < 32; s += 8) mix(static_cast<std::uint8_t>(label >> s));
  }
  return h;
}

Dataset load_feature_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ParseError(dir + ": feature directory does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".hpdf") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  Dataset d;
  for (const auto& f : files) d.append(load_hpd(f.string()));
  if (d.size() == 0) throw InputError(dir + ": no .hpdf feature files found");
  return d;
}

Batch make_batch(const Dataset& data, const std::vector<std::size_t>& indices, std::size_t num_classes) {
  if (indices.empty()) throw InputError("make_batch: empty index list");
  const std::size_t n = data.sample_size();
  Batch b;
  Shape shape{indices.size()};
  shape.insert(shape.end(), data.sample_shape.begin(), data.sample_shape.end());
  b.features = Tensor(shape);
  b.labels = Tensor({indices.size(), num_classes}, 0.0);
  b.indices = indices;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    const int label = data.labels.at(i);
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
      throw InputError("sample " + data.ids[i] + " has label " + std::to_string(label) + " outside [0," +
                       std::to_string(num_classes) + ")");
    std::copy_n(data.data.begin() + static_cast<std::ptrdiff_t>(i * n), n,
                b.features.values().begin() + static_cast<std::ptrdiff_t>(r * n));
    b.labels[r * num_classes + static_cast<std::size_t>(label)] = 1.0;
  }
  return b;
}

Batcher::Batcher(const Dataset& data, std::size_t batch_size, std::uint64_t shuffle_seed, std::size_t num_classes,
                 bool merge_singleton_tail)
    : data_(data), batch_size_(batch_size), num_classes_(num_classes), merge_tail_(merge_singleton_tail),
      rng_(shuffle_seed) {
  if (batch_size == 0) throw ParameterError("batch size must be at least 1");
  if (data.size() == 0) throw InputError("cannot batch an empty dataset");
}

std::vector<std::vector<std::size_t>> Batcher::next_epoch() {
  std::vector<std::size_t> order(data_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t end = std::min(order.size(), start + batch_size_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (merge_tail_ && batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

Dataset synth_dataset(std::size_t classes, std::size_t per_class, const Shape& shape, std::uint64_t seed,
                      std::uint64_t stream) {
  if (per_class == 0 || classes == 0) throw ParameterError("synth_dataset: need at least one class and sample");
  if (shape.size() != 3) throw ShapeError("synth_dataset: sample shape must be (H, W, C)");
  const std::size_t n = shape_size(shape);

  Rng mean_rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<float> means(classes * n);
  for (auto& m : means) m = coin(mean_rng) ? 1.5f : -1.5f;

  Rng noise_rng(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  d.sample_shape = shape;
  d.data.reserve(classes * per_class * n);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      for (std::size_t j = 0; j < n; ++j)
        d.data.push_back(means[k * n + j] + static_cast<float>(noise(noise_rng)));
      d.labels.push_back(static_cast<int>(k));
      d.ids.push_back("synth_" + std::to_string(stream) + "_" + std::to_string(k) + "_" + std::to_string(i));
    }
  }
  return d;
}

}  // namespace sesn
