#include "aec/altsim.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "aec/dataset.hpp"
#include "aec/errors.hpp"
#include "aec/metrics.hpp"
#include "aec/parallel.hpp"

namespace aec {

std::int64_t Trajectory::num_records() const {
  return static_cast<std::int64_t>(std::floor(duration_s / record_interval_s + 1e-9)) + 1;
}

double Trajectory::altitude(double t, const ChirpParams& chirp) const {
  if (altitude_fn) return altitude_fn(t);
  const double start = start_altitude_m.value_or(chirp.max_range_m());
  const double frac = duration_s > 0.0 ? std::clamp(t / duration_s, 0.0, 1.0) : 1.0;
  return start + (end_altitude_m - start) * frac;
}

void Trajectory::validate() const {
  if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw ConfigError("trajectory: duration_s must be >= 0");
  if (!(record_interval_s > 0.0)) throw ConfigError("trajectory: record_interval_s must be positive");
  if (start_altitude_m && !(*start_altitude_m >= 0.0)) throw ConfigError("trajectory: start altitude must be >= 0");
  if (!(end_altitude_m >= 0.0)) throw ConfigError("trajectory: end altitude must be >= 0");
}

void SimConfig::validate() const {
  trajectory.validate();
  chirp.validate();
  fading.validate();
  if (num_tones < 0) throw ConfigError("sim: num_tones must be non-negative");
  if (!(qpsk_bandwidth_frac > 0.0) || qpsk_bandwidth_frac * chirp.bandwidth_hz > chirp.sample_rate_hz)
    throw ConfigError("sim: qpsk_bandwidth_frac must be positive and keep the band below sample_rate");
  if (clutter.num_scatterers < 0) throw ConfigError("sim: clutter.num_scatterers must be non-negative");
  if (!(clutter.max_extra_delay_frac >= 0.0)) throw ConfigError("sim: clutter.max_extra_delay_frac must be >= 0");
  const double bound = chirp.max_range_m();
  for (std::int64_t r = 0; r < trajectory.num_records(); ++r) {
    const double alt = trajectory.altitude(static_cast<double>(r) * trajectory.record_interval_s, chirp);
    if (!(alt >= 0.0))
      throw ConfigError("sim: altitude must be non-negative, got " + std::to_string(alt) + " m at record " +
                        std::to_string(r));
    if (alt > bound * (1.0 + 1e-9))
      throw ConfigError("sim: altitude " + std::to_string(alt) + " m exceeds the maximum processable range of " +
                        std::to_string(bound) + " m for N=" + std::to_string(chirp.num_samples) +
                        " (c * 0.01 T / 2)");
  }
}

SimConfig SimConfig::without_corruption() const {
  SimConfig c = *this;
  c.snr_db.reset();
  c.fading_enabled = false;
  c.num_tones = 0;
  c.qpsk_enabled = false;
  c.clutter.num_scatterers = 0;
  return c;
}

SimRecord synthesize_record(const SimConfig& cfg, std::int64_t record) {
  SimRecord rec;
  rec.time_s = static_cast<double>(record) * cfg.trajectory.record_interval_s;
  rec.delay_s = delay_for_range(cfg.trajectory.altitude(rec.time_s, cfg.chirp));

  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(record));
  const IQSignal chirp = generate_cwlfm(cfg.chirp);
  Eigen::ArrayXcd echo = to_double(apply_delay(chirp, rec.delay_s));
  if (cfg.clutter.num_scatterers > 0) {
    std::mt19937_64 rng(derive_seed(seed, 10));
    std::uniform_real_distribution<double> extra(0.0, cfg.clutter.max_extra_delay_frac * cfg.chirp.duration_s());
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    const double amp = std::pow(10.0, cfg.clutter.relative_power_db / 20.0);
    for (int i = 0; i < cfg.clutter.num_scatterers; ++i) {
      const double d = rec.delay_s + extra(rng);
      echo += std::polar(amp, phase(rng)) * to_double(apply_delay(chirp, d));
    }
  }
  IQSignal clean = from_double(echo, cfg.chirp.sample_rate_hz);
  if (cfg.fading_enabled)
    clean = apply_amplitude_fading(clean, cfg.fading, cfg.chirp.bandwidth_hz, derive_seed(seed, 11));

  const double reference = clean.power();
  IQSignal dirty = cfg.snr_db ? add_awgn(clean, NoiseParams{*cfg.snr_db}, derive_seed(seed, 12)) : clean;
  if (cfg.num_tones > 0) {
    std::mt19937_64 rng(derive_seed(seed, 13));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> freq(-cfg.chirp.bandwidth_hz / 2, cfg.chirp.bandwidth_hz / 2);
    const auto grid = tone_grid(cfg.num_tones, cfg.chirp.bandwidth_hz);
    std::vector<ToneSpec> tones;
    for (int i = 0; i < cfg.num_tones; ++i) {
      const double f = cfg.tone_placement == TonePlacement::grid ? grid[static_cast<std::size_t>(i)] : freq(rng);
      tones.push_back({f, cfg.tone_sir_db, phase(rng)});
    }
    dirty = add_tones(dirty, tones, reference);
  }
  if (cfg.qpsk_enabled) {
    QpskSpec q;
    q.bandwidth_hz = cfg.qpsk_bandwidth_frac * cfg.chirp.bandwidth_hz;
    q.sir_db = cfg.qpsk_sir_db;
    dirty = add_qpsk(dirty, q, reference, derive_seed(seed, 14));
  }
  rec.clean = std::move(clean);
  rec.dirty = std::move(dirty);
  return rec;
}

SimResult run_landing_sim(const Autoencoder<float>& model, const SimConfig& cfg) {
  cfg.validate();
  if (model.config().num_samples != cfg.chirp.num_samples)
    throw ConfigError("sim: model expects N=" + std::to_string(model.config().num_samples) +
                      " but the chirp has N=" + std::to_string(cfg.chirp.num_samples));
  const std::int64_t n = cfg.trajectory.num_records();
  std::vector<SimRecord> records(static_cast<std::size_t>(n));
  parallel_for(n, [&](std::int64_t r) { records[static_cast<std::size_t>(r)] = synthesize_record(cfg, r); });

  std::vector<IQSignal> dirty;
  dirty.reserve(records.size());
  for (const auto& r : records) dirty.push_back(r.dirty);
  const auto cleaned = denoise(model, dirty);

  const IQSignal reference = generate_cwlfm(cfg.chirp);
  SimResult result;
  std::vector<double> truth, est_in, est_out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto p_in = stretch_process(records[i].dirty, reference, cfg.chirp);
    const auto p_out = stretch_process(cleaned[i], reference, cfg.chirp);
    const auto e_in = estimate_range(p_in, cfg.dc_guard_bins);
    const auto e_out = estimate_range(p_out, cfg.dc_guard_bins);
    SimRow row;
    row.time_s = records[i].time_s;
    row.true_range_m = range_for_delay(records[i].delay_s);
    row.est_no_aec_m = e_in.range_m;
    row.est_aec_m = e_out.range_m;
    row.pslr_no_aec_db = profile_pslr(p_in, e_in);
    row.pslr_aec_db = profile_pslr(p_out, e_out);
    result.rows.push_back(row);
    truth.push_back(row.true_range_m);
    est_in.push_back(row.est_no_aec_m);
    est_out.push_back(row.est_aec_m);
  }

  SimSummary& s = result.summary;
  s.records = n;
  s.range_bin_m = cfg.chirp.range_bin_m();
  s.false_report_gate_m = cfg.false_report_gate_m;
  s.rmse_no_aec_m = rms_error(est_in, truth);
  s.rmse_aec_m = rms_error(est_out, truth);
  s.false_reports_no_aec = false_report_count(est_in, truth, cfg.false_report_gate_m);
  s.false_reports_aec = false_report_count(est_out, truth, cfg.false_report_gate_m);
  s.within_bin_no_aec = static_cast<std::int64_t>(records.size()) - false_report_count(est_in, truth, s.range_bin_m);
  s.within_bin_aec = static_cast<std::int64_t>(records.size()) - false_report_count(est_out, truth, s.range_bin_m);
  return result;
}

void write_sim_csv(const std::filesystem::path& path, const SimResult& result) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "time_s,true_range_m,est_no_aec_m,est_aec_m,pslr_no_aec_db,pslr_aec_db\n";
  out.precision(9);
  for (const auto& r : result.rows)
    out << r.time_s << ',' << r.true_range_m << ',' << r.est_no_aec_m << ',' << r.est_aec_m << ','
        << r.pslr_no_aec_db << ',' << r.pslr_aec_db << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_summary(const SimSummary& s) {
  std::ostringstream os;
  os.precision(9);
  os << "records = " << s.records << "\n"
     << "range_bin_m = " << s.range_bin_m << "\n"
     << "false_report_gate_m = " << s.false_report_gate_m << "\n"
     << "rmse_no_aec_m = " << s.rmse_no_aec_m << "\n"
     << "rmse_aec_m = " << s.rmse_aec_m << "\n"
     << "false_reports_no_aec = " << s.false_reports_no_aec << "\n"
     << "false_reports_aec = " << s.false_reports_aec << "\n"
     << "within_bin_no_aec = " << s.within_bin_no_aec << "\n"
     << "within_bin_aec = " << s.within_bin_aec << "\n";
  return os.str();
}

}  // namespace aec
