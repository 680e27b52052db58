#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "sesn/dataset.hpp"
#include "sesn/errors.hpp"
#include "sesn/evaluation.hpp"
#include "sesn/hpd.hpp"
#include "sesn/logging.hpp"
#include "sesn/network.hpp"
#include "sesn/training.hpp"
#include "sesn/wav.hpp"

namespace fs = std::filesystem;
using namespace sesn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr std::uint64_t kDefaultSeed = 20190;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

std::vector<std::string> scene_names() {
  return {kSceneLabels.begin(), kSceneLabels.end()};
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  std::string audio_dir;
  std::string manifest;
  std::string out_dir;
  int jobs = 1;
  bool skip_bad = false;
  double clip_seconds = 10.0;
};

int run_extract(const ExtractArgs& a) {
  const Manifest manifest = load_manifest(a.manifest);
  fs::create_directories(a.out_dir);

  std::vector<std::string> ids;
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    std::string id = fs::path(manifest.entries[i].path).stem().string();
    if (auto [it, fresh] = seen.emplace(id, i); !fresh)
      throw InputError(a.manifest + ": entries " + std::to_string(it->second + 1) + " and " +
                       std::to_string(i + 1) + " map to the same clip id '" + id + "'");
    ids.push_back(std::move(id));
  }

  FrontendConfig cfg;
  cfg.clip_seconds = a.clip_seconds;
  const auto n = static_cast<long>(manifest.entries.size());
  std::vector<std::string> failure(manifest.entries.size());

#pragma omp parallel for schedule(dynamic) num_threads(a.jobs)
  for (long i = 0; i < n; ++i) {
    const auto& e = manifest.entries[static_cast<std::size_t>(i)];
    const std::string id = ids[static_cast<std::size_t>(i)];
    try {
      const AudioClip clip = read_wav((fs::path(a.audio_dir) / e.path).string());
      const auto label = static_cast<std::uint32_t>(scene_index(e.label));
      const HpdFeature f = extract_hpd(clip, cfg, label, id);
      save_hpd((fs::path(a.out_dir) / (id + ".hpdf")).string(), f);
    } catch (const std::exception& ex) {
      failure[static_cast<std::size_t>(i)] = ex.what();
    }
  }

  std::size_t failed = 0;
  std::string report;
  for (std::size_t i = 0; i < failure.size(); ++i)
    if (!failure[i].empty()) {
      ++failed;
      report += manifest.entries[i].path + "\t" + failure[i] + "\n";
    }
  if (failed > 0) {
    write_text(fs::path(a.out_dir) / "extract_failures.txt", report);
    std::cerr << "failed clips:\n" << report;
  }
  std::cout << "extracted " << failure.size() - failed << " of " << failure.size() << " clips, " << failed
            << " failed\n";
  return failed > 0 && !a.skip_bad ? kExitData : kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string features_dir;
  std::string config;
  std::string block_kind;
  std::size_t runs = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir;
  std::size_t max_epochs = 500;
  std::size_t batch_size = 32;
};

void check_sample_shape(const Dataset& d, const NetworkConfig& cfg, const std::string& what) {
  if (d.size() == 0) throw InputError(what + ": no *.hpdf feature files");
  if (d.sample_shape != cfg.input_shape())
    throw InputError(what + ": features have shape " + shape_to_string(d.sample_shape) +
                     " but the network expects " + shape_to_string(cfg.input_shape()));
}

int run_train(const TrainArgs& a) {
  NetworkConfig net = a.config.empty() ? NetworkConfig::standard(BlockKind::ConvStandardPost)
                                       : load_network_config(a.config);
  if (!a.block_kind.empty()) net.block_kind = parse_block_kind(a.block_kind);
  net.validate();

  const fs::path root(a.features_dir);
  const Dataset train = load_feature_dir((root / "train").string());
  const Dataset val = load_feature_dir((root / "validation").string());
  check_sample_shape(train, net, (root / "train").string());
  check_sample_shape(val, net, (root / "validation").string());

  TrainConfig tc;
  tc.runs = a.runs;
  tc.seed = a.seed;
  tc.max_epochs = a.max_epochs;
  tc.batch_size = a.batch_size;

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_text(out / "config.txt", format_network_config(net));

  std::ostringstream timing;
  auto on_run = [&](std::size_t run, Model& model, RunRecord& rec) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "run_%02zu", run + 1);
    rec.checkpoint = std::string(stem) + ".sesn";
    model.params().save((out / rec.checkpoint).string());
    write_text(out / (std::string(stem) + ".jsonl"), run_record_jsonl(rec));
    timing << stem << '\t' << std::fixed << std::setprecision(3) << rec.wall_seconds << '\n';
  };
  const MultiRunResult result = train_multi(net, train, val, tc, on_run);
  write_text(out / "summary.json", summary_json(result.summary));
  write_text(out / "timing.txt", timing.str());

  std::cout << to_string(net.block_kind) << ": validation accuracy " << std::fixed << std::setprecision(4)
            << result.summary.mean;
  if (!result.summary.single_run) std::cout << " +- " << result.summary.stddev;
  std::cout << " over " << result.runs.size() << " run(s)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string checkpoint;
  std::string features_dir;
  std::string out_dir;
  std::string config;
};

int run_evaluate(const EvaluateArgs& a) {
  const std::string cfg_path =
      a.config.empty() ? (fs::path(a.checkpoint).parent_path() / "config.txt").string() : a.config;
  const NetworkConfig net = load_network_config(cfg_path);
  Model model = build_model(net, 0);
  model.params().assign_from(ModelParams::load(a.checkpoint));

  const Dataset data = load_feature_dir(a.features_dir);
  check_sample_shape(data, net, a.features_dir);

  const std::vector<int> pred = predict_dataset(model, data);
  const ConfusionMatrix cm = confusion(pred, data.labels, net.num_classes);
  CorrectnessVector cv{fs::path(a.checkpoint).filename().string(), data.fingerprint(), {}};
  for (std::size_t i = 0; i < pred.size(); ++i) cv.values.push_back(pred[i] == data.labels[i]);

  const fs::path out(a.out_dir);
  fs::create_directories(out);
  const auto labels = scene_names();
  std::ostringstream acc;
  acc << std::fixed << std::setprecision(6) << cm.accuracy() << '\n';
  write_text(out / "accuracy.txt", acc.str());
  write_text(out / "confusion.csv", confusion_csv(cm, labels));
  write_text(out / "confusion.txt", confusion_text(cm, labels));
  save_correctness((out / "correctness.txt").string(), cv);

  std::cout << "accuracy " << std::fixed << std::setprecision(4) << cm.accuracy() << " (" << cm.trace() << "/"
            << cm.total() << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> files;
  std::vector<std::string> names;
  std::string out;
};

std::string default_name(const fs::path& p) {
  if (p.filename() == "correctness.txt" && p.has_parent_path() && !p.parent_path().filename().empty())
    return p.parent_path().filename().string();
  return p.stem().string();
}

int run_compare(const CompareArgs& a) {
  if (a.files.size() < 2) throw InputError("compare needs at least two correctness files");
  if (!a.names.empty() && a.names.size() != a.files.size())
    throw InputError("--names needs one entry per correctness file");

  std::vector<std::vector<bool>> systems;
  std::vector<std::string> names;
  std::uint64_t hash = 0;
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    const CorrectnessVector v = load_correctness(a.files[i]);
    if (i == 0)
      hash = v.dataset_hash;
    else if (v.dataset_hash != hash)
      throw InputError(a.files[i] + ": evaluated on a different dataset than " + a.files[0]);
    systems.push_back(v.values);
    std::string name = a.names.empty() ? default_name(a.files[i]) : a.names[i];
    if (std::find(names.begin(), names.end(), name) != names.end()) name += "#" + std::to_string(i + 1);
    names.push_back(std::move(name));
  }

  const SignificanceGrid grid = significance_grid(names, systems);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "significance.csv", grid_csv(grid));
  const std::string text = grid_text(grid);
  write_text(out / "significance.txt", text);
  std::cout << text;
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  std::uint64_t seed = kDefaultSeed;
  std::size_t per_class = 4;
  std::size_t val_per_class = 2;
};

void write_split(const Dataset& d, const fs::path& dir, const std::string& prefix) {
  fs::create_directories(dir);
  const std::size_t n = d.sample_size();
  for (std::size_t i = 0; i < d.size(); ++i) {
    HpdFeature f;
    f.mels = static_cast<std::uint32_t>(d.sample_shape[0]);
    f.frames = static_cast<std::uint32_t>(d.sample_shape[1]);
    f.channels = static_cast<std::uint32_t>(d.sample_shape[2]);
    f.label = static_cast<std::uint32_t>(d.labels[i]);
    char id[64];
    std::snprintf(id, sizeof id, "%s_%04zu", prefix.c_str(), i);
    f.clip_id = id;
    f.data.assign(d.data.begin() + static_cast<std::ptrdiff_t>(i * n),
                  d.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    save_hpd((dir / (f.clip_id + ".hpdf")).string(), f);
  }
}

int run_synth(const SynthArgs& a) {
  const NetworkConfig net = NetworkConfig::reduced(BlockKind::ConvStandardPost);
  const fs::path out(a.out_dir);
  const Shape shape = net.input_shape();
  write_split(synth_dataset(net.num_classes, a.per_class, shape, a.seed, 0), out / "train", "train");
  write_split(synth_dataset(net.num_classes, a.val_per_class, shape, a.seed, 1), out / "validation", "val");
  write_text(out / "network.cfg", format_network_config(net));
  std::cout << "wrote " << net.num_classes * a.per_class << " training and " << net.num_classes * a.val_per_class
            << " validation samples of shape " << shape_to_string(shape) << " to " << out.string() << '\n';
  return kExitOk;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();

  CLI::App app{"Squeeze-excitation residual networks for acoustic scene classification"};
  app.require_subcommand(1, 1);

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute HPD features for every clip of a manifest");
  extract->add_option("--audio-dir", ex.audio_dir, "Root directory the manifest paths are relative to")->required();
  extract->add_option("--manifest", ex.manifest, "TAB-separated file/label list")->required();
  extract->add_option("--out-dir", ex.out_dir, "Destination for .hpdf files")->required();
  extract->add_option("--jobs", ex.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  extract->add_flag("--skip-bad", ex.skip_bad, "Exit 0 even when some clips fail");
  extract->add_option("--clip-seconds", ex.clip_seconds, "Required clip duration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one block kind for several seeded runs");
  train->add_option("--features-dir", tr.features_dir, "Directory holding train/ and validation/ features")
      ->required();
  train->add_option("--config", tr.config, "Network config file (default: the full-size network)");
  train->add_option("--block-kind", tr.block_kind, "One of: " + block_kind_names());
  train->add_option("--runs", tr.runs, "Independent runs")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", tr.seed, "Seed of the first run; run r uses seed + r")->capture_default_str();
  train->add_option("--out-dir", tr.out_dir, "Destination for run records and checkpoints")->required();
  train->add_option("--max-epochs", tr.max_epochs, "Epoch limit")->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch-size", tr.batch_size, "Mini-batch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a feature directory");
  evaluate->add_option("--checkpoint", ev.checkpoint, "Checkpoint written by train")->required();
  evaluate->add_option("--features-dir", ev.features_dir, "Directory of .hpdf files")->required();
  evaluate->add_option("--out-dir", ev.out_dir, "Destination for reports")->required();
  evaluate->add_option("--config", ev.config, "Network config (default: config.txt beside the checkpoint)");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Pairwise McNemar tests over correctness files");
  compare->add_option("--correctness-files", cmp.files, "Files written by evaluate")->required()->expected(2, -1);
  compare->add_option("--names", cmp.names, "Display names, one per file");
  compare->add_option("--out", cmp.out, "Destination directory")->required();

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Write a small synthetic feature set and matching network config");
  synth->add_option("--out-dir", sy.out_dir, "Destination directory")->required();
  synth->add_option("--seed", sy.seed, "Generator seed")->capture_default_str();
  synth->add_option("--per-class", sy.per_class, "Training samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--val-per-class", sy.val_per_class, "Validation samples per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*extract) return guarded([&] { return run_extract(ex); });
  if (*train) return guarded([&] { return run_train(tr); });
  if (*evaluate) return guarded([&] { return run_evaluate(ev); });
  if (*compare) return guarded([&] { return run_compare(cmp); });
  return guarded([&] { return run_synth(sy); });
}
