#include "aec/channel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "aec/errors.hpp"
#include "aec/fft.hpp"

namespace aec {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }

void require_positive_power(double reference_power, const char* what) {
  if (!(reference_power > 0.0) || !std::isfinite(reference_power))
    throw ArgumentError(std::string(what) + ": reference_power must be positive and finite");
}

}  // namespace

void FadingParams::validate() const {
  if (!(relative_bandwidth > 0.0 && relative_bandwidth <= 1.0))
    throw ConfigError("fading: relative_bandwidth must lie in (0, 1], got " + std::to_string(relative_bandwidth));
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("fading: sigma must be non-negative, got " + std::to_string(sigma));
}

void QpskSpec::validate(double sample_rate_hz) const {
  if (!(bandwidth_hz > 0.0) || bandwidth_hz > sample_rate_hz)
    throw ArgumentError("qpsk: bandwidth_hz must lie in (0, sample_rate], got " + std::to_string(bandwidth_hz));
  if (!(rolloff >= 0.0 && rolloff <= 1.0))
    throw ArgumentError("qpsk: rolloff must lie in [0, 1]");
  if (!(start_frac >= 0.0) || !(duration_frac >= 0.0) || start_frac + duration_frac > 1.0 + 1e-12)
    throw ArgumentError("qpsk: placement must satisfy 0 <= start_frac and start_frac + duration_frac <= 1");
  if (std::abs(center_hz) > sample_rate_hz / 2.0)
    throw ArgumentError("qpsk: |center_hz| must not exceed sample_rate / 2");
  if (!std::isfinite(sir_db)) throw ArgumentError("qpsk: sir_db must be finite");
}

Eigen::ArrayXd fading_envelope(Eigen::Index n, double sample_rate_hz, const FadingParams& p,
                               double chirp_bandwidth_hz, std::uint64_t seed) {
  p.validate();
  Eigen::ArrayXd g = Eigen::ArrayXd::Zero(n);
  if (p.sigma == 0.0 || n < 2) return g;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::ArrayXcd white(n);
  for (Eigen::Index i = 0; i < n; ++i) white[i] = normal(rng);

  const double cutoff = p.relative_bandwidth * chirp_bandwidth_hz;
  Eigen::ArrayXcd spectrum = fft(white);
  spectrum[0] = 0.0;
  for (Eigen::Index m = 1; m < n; ++m)
    if (std::abs(bin_frequency(m, n, sample_rate_hz)) > cutoff) spectrum[m] = 0.0;
  // Real input and a mask symmetric in |f| keep the result real, except for
  // the unpaired Nyquist bin which the mask removes whenever cutoff < fs/2.
  g = ifft(spectrum).real();

  g -= g.mean();
  const double sd = std::sqrt(g.square().mean());
  if (sd > 0.0) g *= p.sigma / sd;
  return g;
}

IQSignal apply_amplitude_fading(const IQSignal& sig, const FadingParams& p, double chirp_bandwidth_hz,
                                std::uint64_t seed) {
  sig.validate();
  const Eigen::ArrayXd g = fading_envelope(sig.size(), sig.sample_rate_hz, p, chirp_bandwidth_hz, seed);
  return from_double(to_double(sig) * (1.0 + g).cast<std::complex<double>>(), sig.sample_rate_hz);
}

IQSignal add_awgn(const IQSignal& sig, const NoiseParams& p, std::uint64_t seed) {
  sig.validate();
  if (!std::isfinite(p.snr_db)) throw ArgumentError("add_awgn: snr_db must be finite");
  const double noise_power = sig.power() * db_to_power(-p.snr_db);
  const double per_axis = std::sqrt(noise_power / 2.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::ArrayXcd x = to_double(sig);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    x[i] += per_axis * std::complex<double>(re, im);
  }
  return from_double(x, sig.sample_rate_hz);
}

IQSignal add_tones(const IQSignal& sig, std::span<const ToneSpec> tones, double reference_power) {
  sig.validate();
  if (tones.empty()) return sig;
  require_positive_power(reference_power, "add_tones");
  const double fs = sig.sample_rate_hz;
  Eigen::ArrayXcd x = to_double(sig);
  for (const ToneSpec& tone : tones) {
    if (std::abs(tone.frequency_hz) > fs / 2.0)
      throw ArgumentError("add_tones: |frequency_hz| must not exceed sample_rate / 2");
    const double amp = std::sqrt(reference_power * db_to_power(-tone.sir_db));
    const double w = kTwoPi * tone.frequency_hz / fs;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] += std::polar(amp, std::fma(w, static_cast<double>(i), tone.phase_rad));
  }
  return from_double(x, fs);
}

double rrc_pulse(double t, double rolloff) {
  const double beta = rolloff;
  if (std::abs(t) < 1e-12) return 1.0 + beta * (4.0 / std::numbers::pi - 1.0);
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9)
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / std::numbers::pi) * std::sin(std::numbers::pi / (4.0 * beta)) +
            (1.0 - 2.0 / std::numbers::pi) * std::cos(std::numbers::pi / (4.0 * beta)));
  const double pt = std::numbers::pi * t;
  return (std::sin(pt * (1.0 - beta)) + 4.0 * beta * t * std::cos(pt * (1.0 + beta))) /
         (pt * (1.0 - 16.0 * beta * beta * t * t));
}

Eigen::ArrayXd rrc_taps(double rolloff, double sps, int span) {
  const int half = static_cast<int>(std::ceil(span * sps));
  Eigen::ArrayXd h(2 * half + 1);
  for (int i = -half; i <= half; ++i) h[i + half] = rrc_pulse(i / sps, rolloff);
  return h / std::sqrt(h.square().sum());
}

Eigen::ArrayXcd qpsk_waveform(Eigen::Index n, double fs, const QpskSpec& spec, double reference_power,
                              std::uint64_t seed) {
  spec.validate(fs);
  Eigen::ArrayXcd out = Eigen::ArrayXcd::Zero(n);
  const auto begin = static_cast<Eigen::Index>(std::llround(spec.start_frac * static_cast<double>(n)));
  const auto end = std::min<Eigen::Index>(
      n, static_cast<Eigen::Index>(std::llround((spec.start_frac + spec.duration_frac) * static_cast<double>(n))));
  if (end <= begin) return out;
  require_positive_power(reference_power, "add_qpsk");

  const double sps = fs / spec.symbol_rate_hz();
  constexpr int kSpan = 8;
  const auto half = static_cast<Eigen::Index>(std::ceil(kSpan * sps));

  // Symbols cover the record plus the filter span on both sides so the gated
  // window never sees filter start-up transients.
  const auto first = static_cast<std::int64_t>(std::floor(-static_cast<double>(half) / sps)) - 1;
  const auto last = static_cast<std::int64_t>(std::ceil(static_cast<double>(n + half) / sps)) + 1;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bits(0, 3);
  // Gray map: 00 -> (+,+), 01 -> (-,+), 11 -> (-,-), 10 -> (+,-).
  static constexpr std::array<std::complex<double>, 4> kConstellation = {
      std::complex<double>(1, 1), std::complex<double>(-1, 1), std::complex<double>(1, -1),
      std::complex<double>(-1, -1)};
  std::vector<std::complex<double>> symbols;
  symbols.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::int64_t s = first; s <= last; ++s) symbols.push_back(kConstellation[bits(rng)] / std::sqrt(2.0));

  // Each symbol is an impulse at s * sps; evaluating the shaped sum at
  // integer sample times handles non-integer samples per symbol.
  const double w = kTwoPi * spec.center_hz / fs;
  for (Eigen::Index i = begin; i < end; ++i) {
    const double t = static_cast<double>(i);
    const auto s_lo = static_cast<std::int64_t>(std::ceil((t - static_cast<double>(half)) / sps));
    const auto s_hi = static_cast<std::int64_t>(std::floor((t + static_cast<double>(half)) / sps));
    std::complex<double> acc = 0.0;
    for (std::int64_t s = s_lo; s <= s_hi; ++s) {
      const double offset = t - static_cast<double>(s) * sps;
      acc += symbols[static_cast<std::size_t>(s - first)] * rrc_pulse(offset / sps, spec.rolloff);
    }
    out[i] = acc * std::polar(1.0, w * t);
  }

  const double active = out.segment(begin, end - begin).abs2().mean();
  if (active > 0.0) out *= std::sqrt(reference_power * db_to_power(-spec.sir_db) / active);
  return out;
}

IQSignal add_qpsk(const IQSignal& sig, const QpskSpec& spec, double reference_power, std::uint64_t seed) {
  sig.validate();
  const Eigen::ArrayXcd q = qpsk_waveform(sig.size(), sig.sample_rate_hz, spec, reference_power, seed);
  return from_double(to_double(sig) + q, sig.sample_rate_hz);
}

std::vector<double> tone_grid(int count, double bandwidth_hz) {
  std::vector<double> f;
  for (int i = 0; i < count; ++i)
    f.push_back(-bandwidth_hz / 2.0 + (i + 0.5) * bandwidth_hz / count);
  return f;
}

}  // namespace aec
