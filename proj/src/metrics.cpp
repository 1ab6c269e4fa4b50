#include "aec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "aec/errors.hpp"
#include "aec/parallel.hpp"

namespace aec {

const char* to_string(SweepInterference s) { return s == SweepInterference::qpsk ? "qpsk" : "tones"; }

SweepInterference parse_sweep_interference(const std::string& s) {
  if (s == "tones") return SweepInterference::tones;
  if (s == "qpsk") return SweepInterference::qpsk;
  throw ConfigError("unknown sweep interference '" + s + "' (expected tones or qpsk)");
}

void EvalSweepConfig::validate() const {
  chirp.validate();
  fading.validate();
  if (sir_grid_db.empty()) throw ConfigError("sweep: sir_grid_db must not be empty");
  for (double s : sir_grid_db)
    if (!std::isfinite(s)) throw ConfigError("sweep: sir_grid_db values must be finite");
  if (num_trials < 1) throw ConfigError("sweep: num_trials must be at least 1");
  if (num_tones < 1) throw ConfigError("sweep: num_tones must be at least 1");
  if (!(qpsk_bandwidth_frac > 0.0) || qpsk_bandwidth_frac * chirp.bandwidth_hz > chirp.sample_rate_hz)
    throw ConfigError("sweep: qpsk_bandwidth_frac must be positive and keep the band below sample_rate");
  if (delay_frac_range.lo < 0.0 || delay_frac_range.lo > delay_frac_range.hi)
    throw ConfigError("sweep: delay_frac_range must be an ordered non-negative range");
  if (!(false_report_gate_m >= 0.0)) throw ConfigError("sweep: false_report_gate_m must be non-negative");
  if (dc_guard_bins < 0) throw ConfigError("sweep: dc_guard_bins must be non-negative");
}

ExampleMeta sweep_trial_meta(const EvalSweepConfig& cfg, int trial, double sir_db) {
  ExampleMeta meta;
  meta.index = trial;
  meta.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(trial));
  std::mt19937_64 rng(derive_seed(meta.seed, 100));
  const double T = cfg.chirp.duration_s();
  const double B = cfg.chirp.bandwidth_hz;
  meta.delay_s = std::uniform_real_distribution<double>(cfg.delay_frac_range.lo, cfg.delay_frac_range.hi)(rng) * T;
  meta.snr_db = cfg.snr_db;
  if (cfg.interference_type == SweepInterference::tones) {
    meta.kind = InterferenceKind::tones;
    const auto grid = tone_grid(cfg.num_tones, B);
    for (int i = 0; i < cfg.num_tones; ++i) {
      ToneSpec t;
      t.frequency_hz = cfg.tone_placement == TonePlacement::grid
                           ? grid[static_cast<std::size_t>(i)]
                           : std::uniform_real_distribution<double>(-B / 2, B / 2)(rng);
      t.phase_rad = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
      t.sir_db = sir_db;
      meta.tones.push_back(t);
    }
  } else {
    meta.kind = InterferenceKind::qpsk;
    QpskSpec q;
    q.bandwidth_hz = cfg.qpsk_bandwidth_frac * B;
    q.rolloff = cfg.qpsk_rolloff;
    q.sir_db = sir_db;
    meta.qpsk = q;
  }
  return meta;
}

double profile_pslr(const RangeProfile& profile, const RangeEstimate& e) {
  return 0.5 * (pslr(profile, e.up_peak_bin) + pslr(profile, e.down_peak_bin));
}

std::vector<IQSignal> denoise(const Autoencoder<float>& model, std::span<const IQSignal> signals, int batch_size) {
  std::vector<IQSignal> out(signals.size());
  const auto bs = static_cast<std::size_t>(std::max(1, batch_size));
  const auto batches = static_cast<std::int64_t>((signals.size() + bs - 1) / bs);
  parallel_for(batches, [&](std::int64_t b) {
    const std::size_t begin = static_cast<std::size_t>(b) * bs;
    const std::size_t count = std::min(bs, signals.size() - begin);
    const auto y = model.forward(to_tensor(signals.subspan(begin, count)));
    for (std::size_t i = 0; i < count; ++i)
      out[begin + i] = read_signal(y, static_cast<nn::Index>(i), signals[begin + i].sample_rate_hz);
  });
  return out;
}

std::vector<EvalRow> run_sweep(const Autoencoder<float>& model, const EvalSweepConfig& cfg) {
  cfg.validate();
  if (model.config().num_samples != cfg.chirp.num_samples)
    throw ConfigError("sweep: model expects N=" + std::to_string(model.config().num_samples) +
                      " but the chirp has N=" + std::to_string(cfg.chirp.num_samples));
  const IQSignal reference = generate_cwlfm(cfg.chirp);
  const auto trials = static_cast<std::size_t>(cfg.num_trials);

  std::vector<EvalRow> rows;
  for (const double sir : cfg.sir_grid_db) {
    std::vector<ExamplePair> pairs(trials);
    parallel_for(cfg.num_trials, [&](std::int64_t t) {
      pairs[static_cast<std::size_t>(t)] =
          synthesize_example(cfg.chirp, cfg.fading, sweep_trial_meta(cfg, static_cast<int>(t), sir));
    });
    std::vector<IQSignal> dirty(trials);
    for (std::size_t t = 0; t < trials; ++t) dirty[t] = pairs[t].dirty;
    const std::vector<IQSignal> cleaned = denoise(model, dirty);

    std::vector<double> truth(trials), est_in(trials), est_out(trials);
    double pslr_in = 0.0, pslr_out = 0.0, sinr_in = 0.0, sinr_out = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      truth[t] = range_for_delay(pairs[t].meta.delay_s);
      const auto p_in = stretch_process(dirty[t], reference, cfg.chirp, cfg.window);
      const auto p_out = stretch_process(cleaned[t], reference, cfg.chirp, cfg.window);
      const auto e_in = estimate_range(p_in, cfg.dc_guard_bins);
      const auto e_out = estimate_range(p_out, cfg.dc_guard_bins);
      est_in[t] = e_in.range_m;
      est_out[t] = e_out.range_m;
      pslr_in += profile_pslr(p_in, e_in);
      pslr_out += profile_pslr(p_out, e_out);
      sinr_in += sinr_residual(dirty[t], pairs[t].clean);
      sinr_out += sinr_residual(cleaned[t], pairs[t].clean);
    }
    const double n = static_cast<double>(trials);
    EvalRow row;
    row.sir_db = sir;
    row.trials = cfg.num_trials;
    row.pslr_no_aec_db = pslr_in / n;
    row.pslr_aec_db = pslr_out / n;
    row.rmse_no_aec_m = rms_error(est_in, truth);
    row.rmse_aec_m = rms_error(est_out, truth);
    row.false_reports_no_aec = false_report_count(est_in, truth, cfg.false_report_gate_m);
    row.false_reports_aec = false_report_count(est_out, truth, cfg.false_report_gate_m);
    row.sinr_no_aec_db = sinr_in / n;
    row.sinr_aec_db = sinr_out / n;
    rows.push_back(row);
  }
  return rows;
}

int false_report_count(std::span<const double> estimates, std::span<const double> truths, double gate_m) {
  if (estimates.size() != truths.size()) throw ArgumentError("false_report_count: length mismatch");
  int count = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (std::abs(estimates[i] - truths[i]) > gate_m) ++count;
  return count;
}

double rms_error(std::span<const double> estimates, std::span<const double> truths) {
  if (estimates.size() != truths.size()) throw ArgumentError("rms_error: length mismatch");
  if (estimates.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) acc += (estimates[i] - truths[i]) * (estimates[i] - truths[i]);
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

double sinr_residual(const IQSignal& output, const IQSignal& clean) {
  require_compatible(output, clean, "sinr_residual");
  const Eigen::ArrayXcd y = to_double(output);
  const Eigen::ArrayXcd c = to_double(clean);
  const double clean_energy = c.abs2().sum();
  if (!(clean_energy > 0.0)) throw ArgumentError("sinr_residual: clean signal has zero energy");
  const std::complex<double> alpha = (y * c.conjugate()).sum() / clean_energy;
  const double signal = std::norm(alpha) * clean_energy;
  const double residual = (y - alpha * c).abs2().sum();
  if (signal <= 0.0) return kDbFloor;
  if (residual <= signal * 1e-30) return kDbCap;
  return std::clamp(10.0 * std::log10(signal / residual), kDbFloor, kDbCap);
}

std::optional<double> threshold_sir(std::span<const EvalRow> rows, bool with_aec, double threshold_m) {
  std::vector<EvalRow> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [](const EvalRow& a, const EvalRow& b) { return a.sir_db > b.sir_db; });
  for (const auto& r : sorted)
    if ((with_aec ? r.rmse_aec_m : r.rmse_no_aec_m) > threshold_m) return r.sir_db;
  return std::nullopt;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const EvalRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "sir_db,trials,pslr_no_aec_db,pslr_aec_db,rmse_no_aec_m,rmse_aec_m,false_reports_no_aec,false_reports_aec,"
         "sinr_no_aec_db,sinr_aec_db\n";
  out.precision(9);
  for (const auto& r : rows)
    out << r.sir_db << ',' << r.trials << ',' << r.pslr_no_aec_db << ',' << r.pslr_aec_db << ',' << r.rmse_no_aec_m
        << ',' << r.rmse_aec_m << ',' << r.false_reports_no_aec << ',' << r.false_reports_aec << ','
        << r.sinr_no_aec_db << ',' << r.sinr_aec_db << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace aec
