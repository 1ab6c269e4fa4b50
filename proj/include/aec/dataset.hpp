#pragma once

// (clean, dirty) example synthesis and the "AEDS" dataset file.
//
// Binary layout, all little-endian:
//   char[4]  "AEDS"
//   u32      version (1)
//   u64      num_examples
//   u64      num_samples
//   f64      sample_rate_hz
//   then per example: clean I,Q interleaved (f32 x 2N), dirty likewise.
//
// The sidecar "<file>.meta" is line-oriented text. Lines starting with '#'
// are comments (format version, generating config). Every other line
// describes one example as space-separated key=value fields:
//   index seed delay_s snr_db mode tones qpsk
// where tones is "none" or "freq_hz:sir_db:phase_rad" entries joined by ','
// and qpsk is "none" or "bandwidth_hz:center_hz:start_frac:duration_frac:sir_db:rolloff".

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aec/channel.hpp"
#include "aec/nn/tensor.hpp"
#include "aec/signal.hpp"
#include "aec/waveform.hpp"

namespace aec {

enum class InterferenceMode { none, tones, qpsk, mixed };
enum class TonePlacement { random, grid };
// Interference actually drawn for one example.
enum class InterferenceKind { none, tones, qpsk, both };

const char* to_string(InterferenceMode m);
const char* to_string(TonePlacement p);
const char* to_string(InterferenceKind k);
InterferenceMode parse_interference_mode(const std::string& s);
TonePlacement parse_tone_placement(const std::string& s);
InterferenceKind parse_interference_kind(const std::string& s);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Range&) const = default;
};

struct GenerationConfig {
  ChirpParams chirp;
  std::int64_t num_examples = 10000;
  // Delay as a fraction of the record duration.
  Range delay_frac_range{0.0, 0.01};
  Range snr_db_range{-25.0, 30.0};
  InterferenceMode interference_mode = InterferenceMode::mixed;
  std::array<std::int64_t, 2> num_tones_range{1, 5};
  Range tone_sir_db_range{-20.0, 20.0};
  TonePlacement tone_placement = TonePlacement::random;
  Range qpsk_sir_db_range{-20.0, 0.0};
  // QPSK occupied bandwidth as a fraction of the chirp bandwidth. The band is
  // placed uniformly at random inside [-B/2, B/2].
  Range qpsk_bandwidth_frac_range{0.05, 1.0};
  Range qpsk_duration_frac_range{0.25, 1.0};
  double qpsk_rolloff = 0.35;
  // Weights of tones-only, QPSK-only and both when the mode is mixed.
  std::array<double, 3> mixture_weights{1.0, 1.0, 1.0};
  FadingParams fading;
  // When false the label is the delayed chirp without the fading envelope.
  bool faded_label = true;
  std::uint64_t master_seed = 1;

  // Throws ConfigError.
  void validate() const;
};

struct ExampleMeta {
  std::int64_t index = 0;
  std::uint64_t seed = 0;
  double delay_s = 0.0;
  // nullopt disables noise entirely.
  std::optional<double> snr_db;
  InterferenceKind kind = InterferenceKind::none;
  std::vector<ToneSpec> tones;
  std::optional<QpskSpec> qpsk;
};

struct ExamplePair {
  IQSignal clean;
  IQSignal dirty;
  ExampleMeta meta;
};

// Draw the random parameters of example `index` from seed derive_seed(master, index).
ExampleMeta draw_example_meta(const GenerationConfig& cfg, std::int64_t index);

// Deterministic synthesis from already drawn parameters.
//   clean = fading(delay(chirp))          (or delay(chirp) when !faded_label)
//   dirty = interference(noise(fading(delay(chirp))))
// SNR is measured against the faded echo and SIR against the clean label power.
ExamplePair synthesize_example(const ChirpParams& chirp, const FadingParams& fading, const ExampleMeta& meta,
                               bool faded_label = true);

ExamplePair generate_example(const GenerationConfig& cfg, std::int64_t index);

struct DatasetHeader {
  std::uint32_t version = 0;
  std::uint64_t num_examples = 0;
  std::uint64_t num_samples = 0;
  double sample_rate_hz = 0.0;
  std::uint64_t file_size = 0;
};

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::uint64_t kDatasetHeaderBytes = 32;

// Header plus num_examples x 2 signals x num_samples x 2 floats x 4 bytes.
constexpr std::uint64_t dataset_file_size(std::uint64_t num_examples, std::uint64_t num_samples) {
  return kDatasetHeaderBytes + num_examples * 2 * num_samples * 2 * sizeof(float);
}

std::filesystem::path sidecar_path(const std::filesystem::path& dataset);

// Writes the dataset and its sidecar. Both are produced under temporary
// names and renamed into place, so a failure leaves nothing behind.
// `comments` lines are copied into the sidecar as comments.
void generate_dataset(const GenerationConfig& cfg, const std::filesystem::path& path,
                      const std::vector<std::string>& comments = {});

// Writes already materialised pairs (same atomic rules).
void write_dataset(const std::filesystem::path& path, std::span<const ExamplePair> pairs,
                   const std::vector<std::string>& comments = {});

// Validates magic, version and payload size without reading the payload.
DatasetHeader read_dataset_header(const std::filesystem::path& path);

std::string format_meta_line(const ExampleMeta& meta);
ExampleMeta parse_meta_line(const std::string& line);

// Random-access reader. Reads are serialized internally, so one reader can
// be shared between threads.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  const DatasetHeader& header() const { return header_; }
  std::int64_t size() const { return static_cast<std::int64_t>(header_.num_examples); }
  std::int64_t num_samples() const { return static_cast<std::int64_t>(header_.num_samples); }
  double sample_rate_hz() const { return header_.sample_rate_hz; }
  const std::filesystem::path& path() const { return path_; }

  // Throws OutOfRangeError for index outside [0, size()).
  ExamplePair read(std::int64_t index) const;

  // Per-example metadata from the sidecar (empty if the sidecar is missing).
  const std::vector<ExampleMeta>& meta() const { return meta_; }

  // Fill [k, 2, N] tensors for the given example indices.
  void load_batch(std::span<const std::int64_t> indices, nn::Tensor<float>& dirty, nn::Tensor<float>& clean) const;

 private:
  void read_raw(std::int64_t index, std::vector<float>& buffer) const;

  std::filesystem::path path_;
  DatasetHeader header_;
  std::vector<ExampleMeta> meta_;
  mutable std::ifstream stream_;
  mutable std::mutex mutex_;
};

// (dirty, clean) batches of shape [batch, 2, N], channel 0 = I, 1 = Q.
struct Batch {
  nn::Tensor<float> dirty;
  nn::Tensor<float> clean;
  std::vector<std::int64_t> indices;
};

class BatchIterator {
 public:
  // shuffle_seed = nullopt keeps stored order. `count` restricts iteration to
  // the first `count` examples (0 = all).
  BatchIterator(const DatasetReader& reader, std::int64_t batch_size, std::optional<std::uint64_t> shuffle_seed,
                std::int64_t count = 0);

  // False once every example has been yielded; the last batch may be partial.
  bool next(Batch& batch);
  std::int64_t num_batches() const;
  const std::vector<std::int64_t>& order() const { return order_; }

 private:
  const DatasetReader* reader_;
  std::int64_t batch_size_;
  std::vector<std::int64_t> order_;
  std::size_t cursor_ = 0;
};

BatchIterator batch_iterator(const DatasetReader& reader, std::int64_t batch_size,
                             std::optional<std::uint64_t> shuffle_seed, std::int64_t count = 0);

// Signal <-> tensor row conversions for [B, 2, N] tensors.
void write_signal(const IQSignal& sig, nn::Tensor<float>& t, nn::Index b);
IQSignal read_signal(const nn::Tensor<float>& t, nn::Index b, double sample_rate_hz);
nn::Tensor<float> to_tensor(std::span<const IQSignal> signals);

}  // namespace aec
