#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "aec/autoencoder.hpp"
#include "aec/channel.hpp"
#include "aec/dataset.hpp"
#include "aec/rangeproc.hpp"
#include "aec/waveform.hpp"

namespace aec {

enum class SweepInterference { tones, qpsk };

const char* to_string(SweepInterference s);
SweepInterference parse_sweep_interference(const std::string& s);

struct EvalSweepConfig {
  std::vector<double> sir_grid_db{-30, -25, -20, -15, -10, -5, 0, 5, 10, 15, 20};
  SweepInterference interference_type = SweepInterference::tones;
  // Tones per trial, each at the grid SIR, frequencies uniform in [-B/2, B/2].
  int num_tones = 5;
  TonePlacement tone_placement = TonePlacement::random;
  // Full-record QPSK centred at 0 with this fraction of the chirp bandwidth.
  double qpsk_bandwidth_frac = 1.0;
  double qpsk_rolloff = 0.35;
  int num_trials = 100;
  // nullopt disables noise.
  std::optional<double> snr_db = 0.0;
  ChirpParams chirp;
  FadingParams fading;
  Range delay_frac_range{0.0, 0.01};
  std::uint64_t seed = 1;
  double false_report_gate_m = 50.0;
  int dc_guard_bins = 0;
  Window window = Window::rectangular;

  void validate() const;
};

struct EvalRow {
  double sir_db = 0.0;
  int trials = 0;
  double pslr_no_aec_db = 0.0;
  double pslr_aec_db = 0.0;
  double rmse_no_aec_m = 0.0;
  double rmse_aec_m = 0.0;
  int false_reports_no_aec = 0;
  int false_reports_aec = 0;
  double sinr_no_aec_db = 0.0;
  double sinr_aec_db = 0.0;
};

// Parameters of trial `trial` at the given SIR. Delay, noise, tone
// frequencies and phases depend only on (seed, trial), so every grid point
// sees the same realizations apart from the interference level.
ExampleMeta sweep_trial_meta(const EvalSweepConfig& cfg, int trial, double sir_db);

std::vector<EvalRow> run_sweep(const Autoencoder<float>& model, const EvalSweepConfig& cfg);

// Mean PSLR over the two detected peaks of a profile.
double profile_pslr(const RangeProfile& profile, const RangeEstimate& estimate);

// Estimates with |estimate - truth| > gate_m.
int false_report_count(std::span<const double> estimates, std::span<const double> truths, double gate_m = 50.0);

double rms_error(std::span<const double> estimates, std::span<const double> truths);

// 10 log10(|clean|^2 / |output/alpha - clean|^2) with alpha = <output, clean> / |clean|^2.
// Capped at kDbCap, floored at kDbFloor.
double sinr_residual(const IQSignal& output, const IQSignal& clean);

// Scanning the grid from high to low SIR, the first SIR whose RMS range error
// exceeds threshold_m. nullopt if no grid point does.
std::optional<double> threshold_sir(std::span<const EvalRow> rows, bool with_aec, double threshold_m);

// Columns: sir_db, trials, pslr_no_aec_db, pslr_aec_db, rmse_no_aec_m,
// rmse_aec_m, false_reports_no_aec, false_reports_aec, sinr_no_aec_db, sinr_aec_db.
void write_sweep_csv(const std::filesystem::path& path, std::span<const EvalRow> rows);

// Runs the model over signals in batches (forward is batch independent).
std::vector<IQSignal> denoise(const Autoencoder<float>& model, std::span<const IQSignal> signals, int batch_size = 16);

}  // namespace aec
