#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>

#include "aec/autoencoder.hpp"
#include "aec/dataset.hpp"
#include "aec/errors.hpp"

namespace aec {
namespace {

void require_matching_length(const Autoencoder<float>& model, const DatasetReader& data) {
  if (data.num_samples() != model.config().num_samples) {
    throw ConfigError("dataset " + data.path().string() + " has N=" + std::to_string(data.num_samples()) +
                      " samples per signal but the model expects N=" + std::to_string(model.config().num_samples));
  }
}

double sum_squared_error(const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
  return (a.array().cast<double>() - b.array().cast<double>()).square().sum();
}

double mean_objective(const Autoencoder<float>& model, const DatasetReader& data, int batch_size) {
  BatchIterator batches(data, batch_size, std::nullopt);
  Batch batch;
  double weighted = 0.0;
  std::int64_t seen = 0;
  while (batches.next(batch)) {
    const auto k = static_cast<std::int64_t>(batch.indices.size());
    weighted += static_cast<double>(model.objective(batch.dirty, batch.clean)) * static_cast<double>(k);
    seen += k;
  }
  return seen > 0 ? weighted / static_cast<double>(seen) : 0.0;
}

}  // namespace

TrainingLog train(Autoencoder<float>& model, const DatasetReader& data, nn::AdamState<float>& adam,
                  const TrainOptions& options, const DatasetReader* holdout) {
  require_matching_length(model, data);
  if (holdout) require_matching_length(model, *holdout);
  if (options.epochs < 0) throw ConfigError("train: epochs must be non-negative");
  if (options.batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (!adam.initialized()) adam.config = options.adam;

  TrainingLog log;
  log.best_loss = std::numeric_limits<double>::infinity();
  // Shuffle streams continue across resumed runs because they are keyed on
  // the optimizer step count at the start of each epoch.
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    BatchIterator batches(data, options.batch_size, derive_seed(options.seed, adam.step), options.limit);
    Batch batch;
    double weighted = 0.0;
    std::int64_t seen = 0;
    while (batches.next(batch)) {
      const double loss = model.train_step(batch.dirty, batch.clean, adam);
      const auto k = static_cast<std::int64_t>(batch.indices.size());
      weighted += loss * static_cast<double>(k);
      seen += k;
    }
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = seen > 0 ? weighted / static_cast<double>(seen) : 0.0;
    if (holdout) row.holdout_loss = mean_objective(model, *holdout, options.batch_size);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.epochs.push_back(row);

    const double monitored = row.holdout_loss.value_or(row.train_loss);
    if (monitored < log.best_loss) {
      log.best_loss = monitored;
      log.best_epoch = epoch;
      if (!options.checkpoint_path.empty()) save_checkpoint(options.checkpoint_path, model, &adam);
    }
    if (options.verbose) {
      std::fprintf(stderr, "epoch %d  train_loss %.6g", epoch, row.train_loss);
      if (row.holdout_loss) std::fprintf(stderr, "  holdout_loss %.6g", *row.holdout_loss);
      std::fprintf(stderr, "  %.1fs\n", row.seconds);
    }
  }
  return log;
}

ReconstructionScore evaluate_reconstruction(const Autoencoder<float>& model, const DatasetReader& data,
                                            int batch_size) {
  require_matching_length(model, data);
  BatchIterator batches(data, batch_size, std::nullopt);
  Batch batch;
  double model_sse = 0.0, dirty_sse = 0.0;
  std::int64_t count = 0;
  while (batches.next(batch)) {
    const auto out = model.forward(batch.dirty);
    model_sse += sum_squared_error(out, batch.clean);
    dirty_sse += sum_squared_error(batch.dirty, batch.clean);
    count += batch.clean.size();
  }
  return {model_sse / static_cast<double>(count), dirty_sse / static_cast<double>(count)};
}

void write_training_log_csv(const std::filesystem::path& path, const TrainingLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,train_loss,holdout_loss\n";
  out.precision(9);
  for (const auto& row : log.epochs) {
    out << row.epoch << ',' << row.train_loss << ',';
    if (row.holdout_loss) out << *row.holdout_loss;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace aec
