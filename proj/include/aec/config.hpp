#pragma once

// Run configuration shared by every CLI command. The file is JSON with the
// sections below; every key is optional and falls back to the documented
// default, and unknown keys are rejected. See configs/desk.json.
//
//   chirp       ChirpParams (shared by generation, model, sweep and sim)
//   fading      FadingParams (shared)
//   generation  GenerationConfig minus chirp/fading
//   model       ModelConfig; num_samples follows chirp.num_samples and
//               kernel_size null picks 300 below N = 40000 and 200 at 40000
//   training    epochs, batch_size, seed, Adam hyper-parameters, holdout
//   sweep       EvalSweepConfig minus chirp/fading
//   sim         SimConfig minus chirp/fading
//   threads     worker cap (0 = all cores)

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aec/altsim.hpp"
#include "aec/autoencoder.hpp"
#include "aec/dataset.hpp"
#include "aec/metrics.hpp"

namespace aec {

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 1;
  // Learning rates of 3e-4 and above diverge or collapse to a zero output
  // at N = 1000, K = 300, 64 channels.
  nn::AdamConfig adam{.learning_rate = 1e-4};
  // Examples generated for the held-out set by gen-data --holdout.
  std::int64_t holdout_examples = 200;
};

struct RunConfig {
  ChirpParams chirp;
  FadingParams fading;
  GenerationConfig generation;
  ModelConfig model;
  std::optional<std::int64_t> kernel_size;  // null = automatic
  TrainingConfig training;
  EvalSweepConfig sweep;
  SimConfig sim;
  int threads = 0;

  // Copies the shared sections into the sub-configs and validates them all.
  void finalize();
};

// Parse (and finalize) from JSON text/object. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);

// Load a file (or defaults when path is empty), apply "section.key=value"
// overrides, then parse. The value is read as JSON, falling back to a plain
// string. Throws ConfigError for bad content and IoError for unreadable files.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json to_json(const RunConfig& cfg);

TrainOptions train_options(const RunConfig& cfg);

}  // namespace aec
