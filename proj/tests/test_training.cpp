#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sesn/training.hpp"

using namespace sesn;

namespace {

const Shape kSynthShape{8, 20, 3};

struct SynthData {
  Dataset train = synth_dataset(10, 4, kSynthShape, 11, 0);
  Dataset validation = synth_dataset(10, 2, kSynthShape, 11, 1);
};

TrainConfig quick(std::size_t epochs) {
  TrainConfig c;
  c.max_epochs = epochs;
  return c;
}

}  // namespace

TEST(TrainConfig, Validation) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  TrainConfig c;
  c.lr_decay_factor = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.early_stop_patience = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.runs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(TrainConfig{}.max_epochs, 500u);
  EXPECT_EQ(TrainConfig{}.batch_size, 32u);
}

TEST(Scheduler, FrozenMetricHalvesAtTwentyAndStopsAtFifty) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvResidual), 1);
  TrainHooks hooks;
  hooks.validator = [](const Model&, std::size_t) { return 0.25; };
  const RunRecord r = train_one(model, d.train, d.validation, TrainConfig{}, hooks);
  ASSERT_EQ(r.epochs.size(), 51u);
  EXPECT_EQ(r.stop_reason, "early_stop");
  EXPECT_EQ(r.best_epoch, 1u);
  const auto lr = r.lr_trace();
  for (std::size_t i = 0; i <= 20; ++i) EXPECT_EQ(lr[i], 1e-3) << i;
  for (std::size_t i = 21; i <= 40; ++i) EXPECT_EQ(lr[i], 5e-4) << i;
  for (std::size_t i = 41; i < 51; ++i) EXPECT_EQ(lr[i], 2.5e-4) << i;
}

TEST(Scheduler, ImprovementResetsBothCounters) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvResidual), 1);
  TrainHooks hooks;
  // Improves at epochs 1 and 15, flat otherwise.
  hooks.validator = [](const Model&, std::size_t e) { return e < 15 ? 0.1 : 0.2; };
  const RunRecord r = train_one(model, d.train, d.validation, TrainConfig{}, hooks);
  EXPECT_EQ(r.best_epoch, 15u);
  ASSERT_EQ(r.epochs.size(), 65u);
  const auto lr = r.lr_trace();
  EXPECT_EQ(lr[34], 1e-3);  // epoch 35 still at the initial rate
  EXPECT_EQ(lr[35], 5e-4);
  for (std::size_t i = 1; i < lr.size(); ++i)
    EXPECT_TRUE(lr[i] == lr[i - 1] || lr[i] == lr[i - 1] * 0.5) << i;
}

TEST(Scheduler, MaxEpochsAndHookStops) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvPost), 1);
  TrainHooks hooks;
  hooks.validator = [](const Model&, std::size_t e) { return static_cast<Real>(e) / 100.0; };
  const RunRecord r = train_one(model, d.train, d.validation, quick(7), hooks);
  EXPECT_EQ(r.epochs.size(), 7u);
  EXPECT_EQ(r.stop_reason, "max_epochs");
  hooks.on_epoch = [](const Model&, const EpochRecord& e) { return e.epoch == 3; };
  Model m2 = build_model(NetworkConfig::reduced(BlockKind::ConvPost), 1);
  const RunRecord h = train_one(m2, d.train, d.validation, quick(7), hooks);
  EXPECT_EQ(h.epochs.size(), 3u);
  EXPECT_EQ(h.stop_reason, "hook");
}

TEST(Summary, ClosedForms) {
  const auto s = summarize_accuracies({0.7, 0.8, 0.9});
  EXPECT_NEAR(s.mean, 0.8, 1e-15);
  EXPECT_NEAR(s.stddev, 0.1, 1e-15);
  EXPECT_FALSE(s.single_run);
  const auto one = summarize_accuracies({0.65});
  EXPECT_EQ(one.mean, 0.65);
  EXPECT_EQ(one.stddev, 0.0);
  EXPECT_TRUE(one.single_run);
  EXPECT_THROW(summarize_accuracies({}), InputError);
}

TEST(TrainOne, DeterministicRecordAndWeights) {
  const SynthData d;
  const NetworkConfig net = NetworkConfig::reduced(BlockKind::ConvStandardPost);
  Model a = build_model(net, 3), b = build_model(net, 3);
  const RunRecord ra = train_one(a, d.train, d.validation, quick(12));
  const RunRecord rb = train_one(b, d.train, d.validation, quick(12));
  EXPECT_EQ(run_record_jsonl(ra), run_record_jsonl(rb));
  EXPECT_EQ(a.params().serialize(), b.params().serialize());
}

TEST(TrainOne, RecordInvariantsAndBestRestore) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvPostElu), 4);
  const RunRecord r = train_one(model, d.train, d.validation, quick(40));
  ASSERT_FALSE(r.epochs.empty());
  Real best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& e : r.epochs) {
    EXPECT_GE(e.val_accuracy, 0.0);
    EXPECT_LE(e.val_accuracy, 1.0);
    EXPECT_TRUE(std::isfinite(e.train_loss));
    if (e.val_accuracy > best) {
      best = e.val_accuracy;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.best_val_accuracy, best);
  EXPECT_LE(r.epochs.size() - r.best_epoch, 50u);
  EXPECT_EQ(evaluate_accuracy(model, d.validation), r.best_val_accuracy);
}

TEST(TrainOne, EarlyStopBoundOnRealValidation) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvResidual), 5);
  TrainConfig cfg;
  cfg.early_stop_patience = 6;
  cfg.lr_decay_patience = 3;
  const RunRecord r = train_one(model, d.train, d.validation, cfg);
  EXPECT_EQ(r.stop_reason, "early_stop");
  EXPECT_EQ(r.epochs.size() - r.best_epoch, 6u);
  EXPECT_EQ(evaluate_accuracy(model, d.validation), r.best_val_accuracy);
}

TEST(TrainOne, NonFiniteLossNamesEpochAndBatch) {
  Dataset train = synth_dataset(10, 4, kSynthShape, 11, 0);
  const Dataset validation = synth_dataset(10, 1, kSynthShape, 11, 1);
  train.data[5] = std::numeric_limits<float>::quiet_NaN();
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvResidual), 1);
  try {
    train_one(model, train, validation, quick(3));
    FAIL();
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch"), std::string::npos) << msg;
  }
}

TEST(TrainOne, OverfitsSyntheticTrainingSet) {
  const SynthData d;
  Model model = build_model(NetworkConfig::reduced(BlockKind::ConvStandardPost), 20190);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  TrainHooks hooks;
  hooks.validator = [&d](const Model& m, std::size_t) { return evaluate_accuracy(m, d.train); };
  hooks.on_epoch = [](const Model&, const EpochRecord& e) { return e.val_accuracy == 1.0; };
  const RunRecord r = train_one(model, d.train, d.validation, cfg, hooks);
  EXPECT_EQ(r.best_val_accuracy, 1.0);
  EXPECT_LE(r.best_epoch, 300u);
  EXPECT_EQ(evaluate_accuracy(model, d.train), 1.0);
}

TEST(TrainMulti, DistinctReproducibleRuns) {
  const SynthData d;
  const NetworkConfig net = NetworkConfig::reduced(BlockKind::ConvStandard);
  TrainConfig cfg = quick(3);
  cfg.runs = 10;
  cfg.seed = 100;
  std::vector<std::vector<std::uint8_t>> weights;
  const auto first = train_multi(net, d.train, d.validation, cfg,
                                 [&](std::size_t, Model& m, RunRecord&) { weights.push_back(m.params().serialize()); });
  const auto second = train_multi(net, d.train, d.validation, cfg);
  ASSERT_EQ(first.runs.size(), 10u);
  ASSERT_EQ(weights.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(first.runs[i].seed, 100u + i);
    EXPECT_EQ(run_record_jsonl(first.runs[i]), run_record_jsonl(second.runs[i]));
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(weights[i], weights[j]);
  }
  EXPECT_EQ(first.summary.accuracies.size(), 10u);
  EXPECT_FALSE(first.summary.single_run);
  EXPECT_EQ(summary_json(first.summary), summary_json(second.summary));
}

TEST(RunRecordJson, OneLinePerEpochPlusSummary) {
  RunRecord r;
  r.seed = 9;
  r.epochs = {{1, 2.0, 0.1, 0.2, 1e-3}, {2, 1.5, 0.3, 0.4, 1e-3}};
  r.best_epoch = 2;
  r.best_val_accuracy = 0.4;
  r.stop_reason = "max_epochs";
  r.checkpoint = "run_00.sesn";
  r.wall_seconds = 12.5;
  const std::string text = run_record_jsonl(r);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            R"({"epoch":1,"train_loss":2.0,"train_accuracy":0.1,"val_accuracy":0.2,"lr":0.001})");
  EXPECT_NE(text.find(R"("stop_reason":"max_epochs")"), std::string::npos);
  EXPECT_EQ(text.find("12.5"), std::string::npos);
}
