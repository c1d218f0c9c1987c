#pragma once

// Minibatch training with Adam, per-epoch validation and best-model tracking.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skipnet/adam.hpp"
#include "skipnet/metrics.hpp"
#include "skipnet/model.hpp"

namespace skipnet {

struct TrainRunConfig {
  std::size_t batch_size = 300;
  double learning_rate = 0.0005;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;  // 0: no limit
  std::uint64_t seed = 1;
  double validation_fraction = 0.05;
  std::size_t checkpoint_every = 0;  // steps between checkpoint callbacks, 0: never
  double time_limit_seconds = 0;     // 0: no limit

  void validate() const {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
    if (!(validation_fraction >= 0 && validation_fraction < 1)) {
      throw ConfigError("validation fraction must lie in [0, 1)");
    }
  }
};

inline std::vector<SessionPrediction> predict(const SkipModel& model, const TrackCatalog& catalog,
                                              const FeatureSchema& schema,
                                              std::span<const SessionRecord> sessions,
                                              std::size_t batch_size = 256) {
  std::vector<SessionPrediction> out;
  out.reserve(sessions.size());
  for (std::size_t start = 0; start < sessions.size(); start += batch_size) {
    const auto chunk = sessions.subspan(start, std::min(batch_size, sessions.size() - start));
    const Batch batch = build_batch(chunk, catalog, schema);
    const Tensor probs = model.forward(batch, catalog);
    const std::size_t D = batch.shape.predictor_steps;
    for (std::size_t i = 0; i < batch.size; ++i) {
      SessionPrediction p{batch.session_ids[i], {}, {}};
      for (std::size_t t = 0; t < batch.upcoming_count[i]; ++t) {
        const double prob = probs.data()[i * D + t];
        p.probabilities.push_back(prob);
        p.predictions.push_back(decide(prob));
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

struct EpochReport {
  std::size_t epoch = 0;
  std::size_t steps = 0;  // cumulative
  double mean_loss = 0.0;
  std::optional<EvalReport> validation;
};

struct TrainResult {
  ParamStore best;  // parameters with the best validation MAA (last ones without validation)
  double best_validation_maa = NAN;
  std::vector<double> losses;  // one per step
  std::vector<EpochReport> epochs;
  AdamState optimizer;
  std::size_t steps = 0;
  std::vector<std::size_t> validation_indices;
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

inline DataSplit split_train_validation(std::size_t n, double fraction, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (fraction > 0 && n_val == 0 && n > 1) n_val = 1;
  n_val = std::min(n_val, n - 1);
  DataSplit split;
  split.validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  return split;
}

struct TrainHooks {
  std::function<void(std::size_t step, double loss)> on_step;
  std::function<void(const EpochReport&)> on_epoch;
  std::function<void(const SkipModel&, const AdamState&, std::size_t step)> on_checkpoint;
};

inline TrainResult train(SkipModel& model, const TrainRunConfig& config,
                         std::span<const SessionRecord> sessions, const TrackCatalog& catalog,
                         const FeatureSchema& schema, const TrainHooks& hooks = {}) {
  config.validate();
  if (sessions.size() < 2) throw ContractError("training needs at least two sessions");
  const auto started = std::chrono::steady_clock::now();
  Rng rng(config.seed ^ 0x5eed5eed5eed5eedull);
  DataSplit split = split_train_validation(sessions.size(), config.validation_fraction, rng);

  std::vector<SessionRecord> validation;
  for (std::size_t i : split.validation) validation.push_back(sessions[i]);

  TrainResult result;
  result.validation_indices = split.validation;
  ParamStore& params = model.params();
  params.zero_grad();
  result.best = params.clone();

  auto out_of_time = [&] {
    if (config.time_limit_seconds <= 0) return false;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    return elapsed.count() >= config.time_limit_seconds;
  };

  bool stop = false;
  std::vector<SessionRecord> chunk;
  for (std::size_t epoch = 1; epoch <= config.epochs && !stop; ++epoch) {
    shuffle(split.train, rng);
    double loss_total = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < split.train.size(); start += config.batch_size) {
      if ((config.max_steps && result.steps >= config.max_steps) || out_of_time()) {
        stop = true;
        break;
      }
      chunk.clear();
      const std::size_t end = std::min(start + config.batch_size, split.train.size());
      for (std::size_t k = start; k < end; ++k) chunk.push_back(sessions[split.train[k]]);
      const Batch batch = build_batch(chunk, catalog, schema);

      const std::string step_name = "step " + std::to_string(result.steps + 1);
      double loss = 0.0;
      try {
        const ForwardResult fwd = model.forward_loss(batch, catalog);
        loss = fwd.loss.item();
        if (!std::isfinite(loss)) throw NumericError("non-finite loss");
        params.zero_grad();
        backward(fwd.loss);
        adam_step(params, result.optimizer, config.learning_rate);
      } catch (const NumericError& e) {
        throw NumericError(step_name + ": " + e.what());
      }
      ++result.steps;
      result.losses.push_back(loss);
      loss_total += loss;
      ++loss_count;
      if (hooks.on_step) hooks.on_step(result.steps, loss);
      if (hooks.on_checkpoint && config.checkpoint_every && result.steps % config.checkpoint_every == 0) {
        hooks.on_checkpoint(model, result.optimizer, result.steps);
      }
    }
    if (loss_count == 0) break;

    EpochReport report{epoch, result.steps, loss_total / static_cast<double>(loss_count), std::nullopt};
    if (!validation.empty()) {
      const auto preds = predict(model, catalog, schema, validation);
      report.validation = evaluate(preds, validation);
      const double maa = report.validation->mean_average_accuracy;
      if (std::isnan(result.best_validation_maa) || maa > result.best_validation_maa) {
        result.best_validation_maa = maa;
        result.best = params.clone();
      }
    } else {
      result.best = params.clone();
    }
    result.epochs.push_back(report);
    if (hooks.on_epoch) hooks.on_epoch(report);
  }
  return result;
}

}  // namespace skipnet
