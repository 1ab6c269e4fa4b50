#pragma once

// Convolution-only denoising autoencoder.
//
//   IQ-Mixer   [B,2,N] -> [B,1,N]
//   encoder    3 x (conv1d K -> leaky ReLU -> maxpool 2)      N -> N/8
//   decoder    3 x (max-unpool 2 -> conv1d^T K -> leaky ReLU)  N/8 -> N
//   IQ-Unmixer [B,1,N] -> [B,2,N], linear
//
// Each decoder stage unpools with the indices recorded by its mirrored
// encoder stage, so the decoder sees where the encoder maxima were.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aec/nn/adam.hpp"
#include "aec/nn/layers.hpp"

namespace aec {

struct ModelConfig {
  std::int64_t num_samples = 1000;
  std::int64_t kernel_size = 200;
  std::int64_t channels = 64;
  std::int64_t num_stages = 3;
  std::int64_t pool_window = 2;
  // Channels of the last encoder convolution. Equal to `channels` by default;
  // 1 gives a strict element-count bottleneck.
  std::int64_t latent_channels = 64;
  double activation_slope = 0.2;
  std::int64_t mixer_channels = 1;
  // Divide each example by its RMS before the network and multiply the
  // output back. Training then minimises the MSE of the rescaled signals.
  bool normalize_input = true;

  void validate() const;
  std::int64_t latent_length() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename Scalar>
class Autoencoder {
 public:
  using TensorT = nn::Tensor<Scalar>;

  Autoencoder() = default;
  Autoencoder(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  // Denoise a batch [B, 2, N]. Safe to call concurrently.
  TensorT forward(const TensorT& dirty) const;

  // Training objective without gradients: MSE, taken after per-example
  // rescaling when normalize_input is set.
  Scalar objective(const TensorT& dirty, const TensorT& clean) const;

  // One optimizer step on a batch; returns the pre-update objective.
  Scalar train_step(const TensorT& dirty, const TensorT& clean, nn::AdamState<Scalar>& adam);

  // Objective and parameter gradients (accumulated, not applied).
  Scalar loss_and_gradients(const TensorT& dirty, const TensorT& clean);

  // Recompute cached kernel spectra after parameters change externally.
  void sync();
  void zero_grad();

  // Layers in checkpoint order: mixer, encoder stages, decoder stages, unmixer.
  std::vector<nn::LayerParams<Scalar>*> parameters();
  std::vector<const nn::LayerParams<Scalar>*> parameters() const;
  std::int64_t parameter_count() const;

  // Temporal length after each block, input through output:
  // N, N (mixer), then the stage outputs, then N (unmixer).
  std::vector<std::int64_t> layer_lengths() const;
  // Input length of each encoder pooling stage and the decoder stage
  // consuming its indices.
  std::vector<std::pair<int, int>> unpool_routing() const;
  // (2 N) / latent temporal length.
  double compression_ratio() const;

  template <typename Other>
  Autoencoder<Other> cast() const;

 private:
  template <typename>
  friend class Autoencoder;

  struct Trace;
  // Per-example RMS of a [B, 2, N] batch, 1 for all-zero examples.
  std::vector<Scalar> input_scales(const TensorT& dirty) const;
  TensorT run(const TensorT& dirty, Trace* trace) const;
  void backward(const TensorT& grad_out, const Trace& trace);

  ModelConfig config_;
  nn::IQMixer<Scalar> mixer_;
  std::vector<nn::Conv1d<Scalar>> encoder_;
  std::vector<nn::Conv1dTransposed<Scalar>> decoder_;
  nn::IQUnmixer<Scalar> unmixer_;
};

// Build a model with seeded uniform initialization.
template <typename Scalar>
Autoencoder<Scalar> build_model(const ModelConfig& config, std::uint64_t seed) {
  return Autoencoder<Scalar>(config, seed);
}

// ---------------------------------------------------------------------------
// Checkpoints ("AECW").

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Autoencoder<float> model;
  std::optional<nn::AdamState<float>> adam;
};

void save_checkpoint(const std::filesystem::path& path, const Autoencoder<float>& model,
                     const nn::AdamState<float>* adam = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct CheckpointHeader {
  std::uint32_t version = 0;
  ModelConfig config;
  std::uint32_t tensor_count = 0;
  bool has_adam = false;
  std::uint64_t adam_step = 0;
  std::uint64_t file_size = 0;
};
// Header only; validates magic and version but not the payload.
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Training.

class DatasetReader;

struct TrainOptions {
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 1;
  nn::AdamConfig adam;
  // Checkpoint written whenever the monitored loss improves (holdout when
  // provided, otherwise train). Empty path disables checkpointing.
  std::filesystem::path checkpoint_path;
  // Restrict training to the first `limit` examples (0 = all).
  std::int64_t limit = 0;
  bool verbose = false;
};

// Losses are the model objective (see Autoencoder::objective).
struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> holdout_loss;
  double seconds = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  double best_loss = 0.0;
  int best_epoch = 0;
};

TrainingLog train(Autoencoder<float>& model, const DatasetReader& data, nn::AdamState<float>& adam,
                  const TrainOptions& options, const DatasetReader* holdout = nullptr);

// Mean MSE(forward(dirty), clean) and MSE(dirty, clean) over a dataset.
struct ReconstructionScore {
  double model_mse = 0.0;
  double dirty_mse = 0.0;
};
ReconstructionScore evaluate_reconstruction(const Autoencoder<float>& model, const DatasetReader& data,
                                            int batch_size = 16);

void write_training_log_csv(const std::filesystem::path& path, const TrainingLog& log);

}  // namespace aec
