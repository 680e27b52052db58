#include "sesn/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include <spdlog/spdlog.h>

namespace sesn {

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (early_stop_patience == 0 || lr_decay_patience == 0) throw ConfigError("patience values must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0)) throw ConfigError("lr decay factor must lie in (0,1)");
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (runs == 0) throw ConfigError("runs must be at least 1");
}

std::vector<Real> RunRecord::lr_trace() const {
  std::vector<Real> out;
  for (const auto& e : epochs) out.push_back(e.lr);
  return out;
}

std::vector<int> predict_dataset(const Model& model, const Dataset& data, std::size_t batch_size) {
  std::vector<int> out;
  out.reserve(data.size());
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = make_batch(data, idx, model.config().num_classes);
    const auto pred = model.predict(b.features);
    out.insert(out.end(), pred.begin(), pred.end());
  }
  return out;
}

Real evaluate_accuracy(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) throw InputError("evaluate_accuracy: empty dataset");
  const auto pred = predict_dataset(model, data, batch_size);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[i];
  return static_cast<Real>(correct) / static_cast<Real>(data.size());
}

RunRecord train_one(Model& model, const Dataset& train, const Dataset& validation, const TrainConfig& cfg,
                    const TrainHooks& hooks) {
  cfg.validate();
  const auto start_time = std::chrono::steady_clock::now();
  const std::size_t K = model.config().num_classes;

  Validator validate = hooks.validator;
  if (!validate)
    validate = [&validation, &cfg](const Model& m, std::size_t) { return evaluate_accuracy(m, validation, cfg.batch_size); };

  Batcher batcher(train, cfg.batch_size, cfg.seed ^ 0xB47C4E5ull, K, true);
  Rng dropout_rng(cfg.seed ^ 0xD50F0417ull);
  ModelParams& params = model.params();
  AdamState adam = AdamState::for_params(params);

  RunRecord record;
  record.seed = cfg.seed;
  record.stop_reason = "max_epochs";
  Real best = -std::numeric_limits<Real>::infinity();
  std::vector<Tensor> best_values = params.snapshot();
  std::size_t since_improvement = 0, since_decay = 0;
  Real lr = cfg.initial_lr;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochRecord er;
    er.epoch = epoch;
    er.lr = lr;
    Real loss_sum = 0.0;
    std::size_t correct = 0, seen = 0, batch_no = 0;
    for (const auto& idx : batcher.next_epoch()) {
      ++batch_no;
      const Batch batch = make_batch(train, idx, K);
      params.zero_grads();
      Var scores = model.logits(constant(batch.features), true, dropout_rng);
      Var loss = softmax_cross_entropy(scores, batch.labels);
      const Real l = loss->value[0];
      if (!std::isfinite(l))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no));
      backward(loss);
      adam_step(params, adam, lr);

      const std::size_t B = idx.size();
      loss_sum += l * static_cast<Real>(B);
      for (std::size_t r = 0; r < B; ++r) {
        std::size_t arg = 0;
        for (std::size_t k = 1; k < K; ++k)
          if (scores->value[r * K + k] > scores->value[r * K + arg]) arg = k;
        correct += batch.labels[r * K + arg] == 1.0;
      }
      seen += B;
    }
    er.train_loss = loss_sum / static_cast<Real>(seen);
    er.train_accuracy = static_cast<Real>(correct) / static_cast<Real>(seen);
    er.val_accuracy = validate(model, epoch);
    record.epochs.push_back(er);
    spdlog::debug("epoch {} loss {:.6f} train_acc {:.4f} val_acc {:.4f} lr {:.3g}", epoch, er.train_loss,
                  er.train_accuracy, er.val_accuracy, lr);

    bool stop = false;
    if (er.val_accuracy > best) {
      best = er.val_accuracy;
      record.best_epoch = epoch;
      record.best_val_accuracy = er.val_accuracy;
      best_values = params.snapshot();
      since_improvement = 0;
      since_decay = 0;
    } else {
      ++since_improvement;
      ++since_decay;
      if (since_improvement >= cfg.early_stop_patience) {
        record.stop_reason = "early_stop";
        stop = true;
      } else if (since_decay >= cfg.lr_decay_patience) {
        lr *= cfg.lr_decay_factor;
        since_decay = 0;
        spdlog::info("epoch {}: no improvement for {} epochs, learning rate now {:.3g}", epoch,
                     cfg.lr_decay_patience, lr);
      }
    }
    if (!stop && hooks.on_epoch && hooks.on_epoch(model, er)) {
      record.stop_reason = "hook";
      stop = true;
    }
    if (stop) break;
  }

  params.restore(best_values);
  record.wall_seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - start_time).count();
  return record;
}

AccuracySummary summarize_accuracies(const std::vector<Real>& accuracies) {
  if (accuracies.empty()) throw InputError("summarize_accuracies: no runs");
  AccuracySummary s;
  s.accuracies = accuracies;
  const auto n = static_cast<Real>(accuracies.size());
  s.mean = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  if (accuracies.size() == 1) {
    s.single_run = true;
    s.stddev = 0.0;
  } else {
    Real ss = 0.0;
    for (Real a : accuracies) ss += (a - s.mean) * (a - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

MultiRunResult train_multi(const NetworkConfig& net, const Dataset& train, const Dataset& validation,
                           const TrainConfig& cfg,
                           const std::function<void(std::size_t, Model&, RunRecord&)>& on_run,
                           const TrainHooks& hooks) {
  cfg.validate();
  MultiRunResult result;
  std::vector<Real> accuracies;
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + run;
    Model model = build_model(net, run_cfg.seed);
    RunRecord rec = train_one(model, train, validation, run_cfg, hooks);
    spdlog::info("run {}/{}: best validation accuracy {:.4f} at epoch {}", run + 1, cfg.runs,
                 rec.best_val_accuracy, rec.best_epoch);
    if (on_run) on_run(run, model, rec);
    accuracies.push_back(rec.best_val_accuracy);
    result.runs.push_back(std::move(rec));
  }
  result.summary = summarize_accuracies(accuracies);
  return result;
}

std::string run_record_jsonl(const RunRecord& record) {
  std::string out;
  for (const auto& e : record.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["train_accuracy"] = e.train_accuracy;
    j["val_accuracy"] = e.val_accuracy;
    j["lr"] = e.lr;
    out += j.dump() + '\n';
  }
  nlohmann::ordered_json s;
  s["summary"] = true;
  s["seed"] = record.seed;
  s["epochs_run"] = record.epochs.size();
  s["best_epoch"] = record.best_epoch;
  s["best_val_accuracy"] = record.best_val_accuracy;
  s["stop_reason"] = record.stop_reason;
  s["checkpoint"] = record.checkpoint;
  out += s.dump() + '\n';
  return out;
}

std::string summary_json(const AccuracySummary& summary) {
  nlohmann::ordered_json j;
  j["runs"] = summary.accuracies.size();
  j["mean_accuracy"] = summary.mean;
  j["std_accuracy"] = summary.stddev;
  j["single_run"] = summary.single_run;
  j["accuracies"] = summary.accuracies;
  return j.dump(2) + '\n';
}

}  // namespace sesn
