#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sesn/dataset.hpp"
#include "sesn/network.hpp"
#include "sesn/optim.hpp"

namespace sesn {

struct TrainConfig {
  std::size_t max_epochs = 500;
  std::size_t early_stop_patience = 50;
  std::size_t lr_decay_patience = 20;
  Real lr_decay_factor = 0.5;
  Real initial_lr = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 20190;
  std::size_t runs = 1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  Real train_loss = 0.0;
  Real train_accuracy = 0.0;  // on the training batches, in training mode
  Real val_accuracy = 0.0;
  Real lr = 0.0;  // rate used during this epoch
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  Real best_val_accuracy = 0.0;
  std::string stop_reason;  // "early_stop", "max_epochs" or "hook"
  std::string checkpoint;   // path of the best-epoch checkpoint, when persisted
  Real wall_seconds = 0.0;

  std::vector<Real> lr_trace() const;
};

/// Validation metric; defaults to inference-mode accuracy on the validation set.
using Validator = std::function<Real(const Model&, std::size_t epoch)>;

struct TrainHooks {
  Validator validator;
  /// Called after every epoch; returning true stops training.
  std::function<bool(const Model&, const EpochRecord&)> on_epoch;
};

/// Adam on categorical cross-entropy with plateau LR decay and early stopping
/// on validation accuracy ("improvement" means strictly greater). Both patience
/// counters reset on improvement; the decay counter also resets after a decay.
/// The best-validation parameters are restored before returning.
/// Throws NumericError naming the epoch and batch if the loss is not finite.
RunRecord train_one(Model& model, const Dataset& train, const Dataset& validation, const TrainConfig& cfg,
                    const TrainHooks& hooks = {});

std::vector<int> predict_dataset(const Model& model, const Dataset& data, std::size_t batch_size = 32);
Real evaluate_accuracy(const Model& model, const Dataset& data, std::size_t batch_size = 32);

struct AccuracySummary {
  Real mean = 0.0;
  Real stddev = 0.0;  // sample standard deviation (n - 1)
  bool single_run = false;
  std::vector<Real> accuracies;
};

AccuracySummary summarize_accuracies(const std::vector<Real>& accuracies);

struct MultiRunResult {
  AccuracySummary summary;
  std::vector<RunRecord> runs;
};

/// Repeats train_one with seeds cfg.seed + run for model init and batching.
/// `on_run` sees each trained model before it is discarded.
MultiRunResult train_multi(const NetworkConfig& net, const Dataset& train, const Dataset& validation,
                           const TrainConfig& cfg,
                           const std::function<void(std::size_t, Model&, RunRecord&)>& on_run = {},
                           const TrainHooks& hooks = {});

/// One JSON object per epoch, then a summary object. Wall-clock time is left
/// out so identical runs serialize identically.
std::string run_record_jsonl(const RunRecord& record);
std::string summary_json(const AccuracySummary& summary);

}  // namespace sesn
