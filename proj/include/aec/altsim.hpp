#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "aec/autoencoder.hpp"
#include "aec/channel.hpp"
#include "aec/dataset.hpp"
#include "aec/rangeproc.hpp"
#include "aec/waveform.hpp"

namespace aec {

struct Trajectory {
  double duration_s = 175.0;
  double record_interval_s = 0.5;
  // Linear descent from start to end altitude. An unset start altitude means
  // the maximum processable range of the chirp, c (0.01 T) / 2: 2000 m at
  // N = 40000 and 50 m at N = 1000.
  std::optional<double> start_altitude_m;
  double end_altitude_m = 0.0;
  // Overrides the linear profile when set.
  std::function<double(double)> altitude_fn;

  std::int64_t num_records() const;
  double altitude(double t, const ChirpParams& chirp) const;
  void validate() const;
};

struct ClutterParams {
  int num_scatterers = 0;
  // Extra delay of each scatterer, uniform in [0, max_extra_delay_frac] * T.
  double max_extra_delay_frac = 0.002;
  // Power of each scatterer relative to the main echo.
  double relative_power_db = -20.0;
};

struct SimConfig {
  Trajectory trajectory;
  ChirpParams chirp;
  // nullopt disables noise.
  std::optional<double> snr_db = 0.0;
  FadingParams fading;
  bool fading_enabled = true;
  int num_tones = 5;
  double tone_sir_db = -20.0;
  // The landing sim places tones on a deterministic grid across B.
  TonePlacement tone_placement = TonePlacement::grid;
  bool qpsk_enabled = true;
  double qpsk_sir_db = -20.0;
  double qpsk_bandwidth_frac = 1.0;
  ClutterParams clutter;
  std::uint64_t seed = 1;
  double false_report_gate_m = 50.0;
  int dc_guard_bins = 0;

  void validate() const;
  // All corruption off: no noise, fading, interference or clutter.
  SimConfig without_corruption() const;
};

struct SimRow {
  double time_s = 0.0;
  double true_range_m = 0.0;
  double est_no_aec_m = 0.0;
  double est_aec_m = 0.0;
  double pslr_no_aec_db = 0.0;
  double pslr_aec_db = 0.0;
};

struct SimSummary {
  std::int64_t records = 0;
  double rmse_no_aec_m = 0.0;
  double rmse_aec_m = 0.0;
  int false_reports_no_aec = 0;
  int false_reports_aec = 0;
  // Records whose error is within one range bin.
  std::int64_t within_bin_no_aec = 0;
  std::int64_t within_bin_aec = 0;
  double range_bin_m = 0.0;
  double false_report_gate_m = 0.0;
};

struct SimResult {
  std::vector<SimRow> rows;
  SimSummary summary;
};

// Received record at time t: delayed chirp (+ clutter), faded, noisy and
// interfered per cfg. Also returns the clean echo for diagnostics.
struct SimRecord {
  double time_s = 0.0;
  double delay_s = 0.0;
  IQSignal clean;
  IQSignal dirty;
};
SimRecord synthesize_record(const SimConfig& cfg, std::int64_t record);

SimResult run_landing_sim(const Autoencoder<float>& model, const SimConfig& cfg);

// Columns: time_s, true_range_m, est_no_aec_m, est_aec_m, pslr_no_aec_db, pslr_aec_db.
void write_sim_csv(const std::filesystem::path& path, const SimResult& result);
// key = value lines.
std::string format_summary(const SimSummary& s);

}  // namespace aec
