#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>
#include <map>

#include "sesn/dataset.hpp"

using namespace sesn;

namespace {

Dataset labelled(std::size_t n) {
  Dataset d;
  d.sample_shape = {1, 2, 1};
  for (std::size_t i = 0; i < n; ++i) {
    d.data.push_back(static_cast<float>(i));
    d.data.push_back(-static_cast<float>(i));
    d.labels.push_back(static_cast<int>(i % 10));
    d.ids.push_back("s" + std::to_string(i));
  }
  return d;
}

Eigen::MatrixXd design(const Dataset& d) {
  const std::size_t n = d.sample_size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(n + 1));
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.data[i * n + j];
    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n)) = 1.0;
  }
  return x;
}

}  // namespace

TEST(Manifest, ThreeLineFixture) {
  const Manifest m = parse_manifest("audio/a.wav\tairport\naudio/b.wav\ttram\r\naudio/c.wav\tmetro_station\n", "fx");
  ASSERT_EQ(m.entries.size(), 3u);
  EXPECT_EQ(m.entries[0], (ManifestEntry{"audio/a.wav", "airport"}));
  EXPECT_EQ(m.entries[1].label, "tram");
  EXPECT_EQ(m.entries[2].label, "metro_station");
  EXPECT_EQ(parse_manifest("filename\tscene_label\nx.wav\tbus\n", "h").entries.size(), 1u);
}

TEST(Manifest, LabelVocabularyIsFrozen) {
  EXPECT_EQ(kSceneLabels.size(), 10u);
  EXPECT_TRUE(std::is_sorted(kSceneLabels.begin(), kSceneLabels.end()));
  EXPECT_EQ(scene_index("airport"), 0);
  EXPECT_EQ(scene_index("tram"), 9);
  EXPECT_EQ(scene_index("beach"), -1);
}

TEST(Manifest, UnknownLabelNamesLine) {
  try {
    parse_manifest("a.wav\tbus\nb.wav\tbeach\n", "meta.tsv");
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("meta.tsv:2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("beach"), std::string::npos);
  }
  EXPECT_THROW(parse_manifest("no tab here\n", "m"), ParseError);
  EXPECT_THROW(load_manifest("/nonexistent/meta.tsv"), ParseError);
}

TEST(Manifest, RoundTripAndDisjointness) {
  Manifest m;
  for (std::size_t i = 0; i < 20; ++i)
    m.entries.push_back({"clips/" + std::to_string(i) + ".wav", std::string(kSceneLabels[i % 10])});
  EXPECT_EQ(parse_manifest(format_manifest(m), "rt").entries, m.entries);
  const auto path = (std::filesystem::temp_directory_path() / "sesn_test_manifest.tsv").string();
  save_manifest(path, m);
  EXPECT_EQ(load_manifest(path, Split::validation).entries, m.entries);
  std::filesystem::remove(path);

  Manifest other;
  other.entries.push_back({"elsewhere.wav", "park"});
  EXPECT_NO_THROW(check_disjoint(m, other));
  other.entries.push_back(m.entries[5]);
  EXPECT_THROW(check_disjoint(m, other), InputError);
}

TEST(Batcher, SizesAndShortTail) {
  const Dataset d = labelled(100);
  Batcher b(d, 32, 1);
  std::vector<std::size_t> sizes;
  for (const auto& batch : b.next_epoch()) sizes.push_back(batch.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{32, 32, 32, 4}));

  const Dataset odd = labelled(33);
  EXPECT_EQ(Batcher(odd, 32, 1).next_epoch().size(), 2u);
  const auto merged = Batcher(odd, 32, 1, 10, true).next_epoch();
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].size(), 33u);
}

TEST(Batcher, EveryEpochIsAPartition) {
  const Dataset d = labelled(77);
  Batcher b(d, 8, 5);
  std::map<int, int> expected;
  for (int l : d.labels) ++expected[l];
  std::vector<std::size_t> first;
  for (int epoch = 0; epoch < 5; ++epoch) {
    std::vector<std::size_t> all;
    std::map<int, int> seen;
    for (const auto& batch : b.next_epoch()) {
      all.insert(all.end(), batch.begin(), batch.end());
      const Batch mb = make_batch(d, batch, 10);
      for (std::size_t r = 0; r < batch.size(); ++r) {
        Real row = 0.0;
        for (std::size_t k = 0; k < 10; ++k) row += mb.labels[r * 10 + k];
        ASSERT_EQ(row, 1.0);
        ++seen[d.labels[batch[r]]];
      }
    }
    EXPECT_EQ(seen, expected);
    if (epoch == 0) first = all;
    else EXPECT_NE(all, first);
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
  }
}

TEST(Batcher, SeededDeterminismAndErrors) {
  const Dataset d = labelled(50);
  Batcher a(d, 16, 9), b(d, 16, 9), c(d, 16, 10);
  const auto ea = a.next_epoch();
  EXPECT_EQ(ea, b.next_epoch());
  EXPECT_NE(ea, c.next_epoch());
  EXPECT_THROW(Batcher(Dataset{}, 4, 1), InputError);
  EXPECT_THROW(Batcher(d, 0, 1), ParameterError);
}

TEST(Batch, FeaturesAndOneHot) {
  const Dataset d = labelled(12);
  const Batch b = make_batch(d, {11, 3}, 10);
  EXPECT_EQ(b.features.shape(), (Shape{2, 1, 2, 1}));
  EXPECT_EQ(b.features[0], 11.0);
  EXPECT_EQ(b.features[1], -11.0);
  EXPECT_EQ(b.features[2], 3.0);
  EXPECT_EQ(b.labels[1], 1.0);
  EXPECT_EQ(b.labels[10 + 3], 1.0);
  EXPECT_THROW(make_batch(d, {}, 10), InputError);
}

TEST(Synth, SizeAndDeterminism) {
  const Dataset a = synth_dataset(10, 4, {8, 20, 3}, 42);
  EXPECT_EQ(a.size(), 40u);
  EXPECT_EQ(a.data.size(), 40u * 480u);
  EXPECT_EQ(a.sample_shape, (Shape{8, 20, 3}));
  for (int k = 0; k < 10; ++k) EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), k), 4);
  const Dataset b = synth_dataset(10, 4, {8, 20, 3}, 42);
  EXPECT_EQ(a.data, b.data);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_NE(a.data, synth_dataset(10, 4, {8, 20, 3}, 43).data);
  EXPECT_NE(a.data, synth_dataset(10, 4, {8, 20, 3}, 42, 1).data);
  EXPECT_THROW(synth_dataset(10, 0, {8, 20, 3}, 1), ParameterError);
}

TEST(Synth, LeastSquaresClassifierSeparatesClasses) {
  const Dataset train = synth_dataset(10, 4, {8, 20, 3}, 7, 0);
  const Dataset test = synth_dataset(10, 20, {8, 20, 3}, 7, 1);
  const Eigen::MatrixXd x = design(train);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), 10);
  for (std::size_t i = 0; i < train.size(); ++i) y(static_cast<Eigen::Index>(i), train.labels[i]) = 1.0;
  const Eigen::MatrixXd w = x.completeOrthogonalDecomposition().solve(y);  // minimum-norm solution
  const Eigen::MatrixXd scores = design(test) * w;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg;
    scores.row(i).maxCoeff(&arg);
    correct += arg == test.labels[static_cast<std::size_t>(i)];
  }
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.size()), 0.9);
}

TEST(FeatureDir, LoadsInNameOrderWithFingerprint) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sesn_test_feature_dir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  EXPECT_THROW(load_feature_dir(dir.string()), InputError);
  for (int i : {2, 0, 1}) {
    HpdFeature f;
    f.mels = 1;
    f.frames = 2;
    f.channels = 1;
    f.label = static_cast<std::uint32_t>(i);
    f.clip_id = "clip" + std::to_string(i);
    f.data = {static_cast<float>(i), 0.5f};
    save_hpd((dir / (f.clip_id + ".hpdf")).string(), f);
  }
  const Dataset d = load_feature_dir(dir.string());
  EXPECT_EQ(d.ids, (std::vector<std::string>{"clip0", "clip1", "clip2"}));
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(d.fingerprint(), load_feature_dir(dir.string()).fingerprint());
  Dataset swapped = d;
  std::swap(swapped.labels[0], swapped.labels[1]);
  EXPECT_NE(swapped.fingerprint(), d.fingerprint());
  fs::remove_all(dir);
  EXPECT_THROW(load_feature_dir(dir.string()), ParseError);
}
