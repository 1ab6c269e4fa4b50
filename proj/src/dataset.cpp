#include "aec/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include "aec/errors.hpp"
#include "aec/parallel.hpp"

namespace aec {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'A', 'E', 'D', 'S'};

// Sub-streams of an example seed.
enum Stream : std::uint64_t { kDraw = 0, kFading = 1, kNoise = 2, kQpsk = 3 };

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
    throw ConfigError(std::string("generation: ") + name + " must be an ordered finite range, got [" +
                      std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
}

double uniform(std::mt19937_64& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const std::string& line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("bad number '" + std::string(s) + "' in metadata line: " + line);
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_interleaved(const IQSignal& sig, float* out) {
  for (Eigen::Index i = 0; i < sig.size(); ++i) {
    out[2 * i] = sig.samples[i].real();
    out[2 * i + 1] = sig.samples[i].imag();
  }
}

IQSignal read_interleaved(const float* in, Eigen::Index n, double fs) {
  IQSignal sig{Eigen::ArrayXcf(n), fs};
  for (Eigen::Index i = 0; i < n; ++i) sig.samples[i] = {in[2 * i], in[2 * i + 1]};
  return sig;
}

class TempFile {
 public:
  explicit TempFile(std::filesystem::path target) : target_(std::move(target)) {
    tmp_ = target_;
    tmp_ += ".partial";
  }
  ~TempFile() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  const std::filesystem::path& path() const { return tmp_; }
  void commit() {
    std::filesystem::rename(tmp_, target_);
    committed_ = true;
  }

 private:
  std::filesystem::path target_, tmp_;
  bool committed_ = false;
};

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

void write_header(std::ofstream& out, std::uint64_t count, std::uint64_t n, double fs) {
  out.write(kMagic, 4);
  const std::uint32_t version = kDatasetVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&count), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&fs), 8);
}

void write_pair(std::ofstream& out, const ExamplePair& pair, std::vector<float>& buffer) {
  const auto n = pair.clean.size();
  buffer.resize(static_cast<std::size_t>(4 * n));
  write_interleaved(pair.clean, buffer.data());
  write_interleaved(pair.dirty, buffer.data() + 2 * n);
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * 4));
}

void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.close();
  if (!out) throw IoError("failed writing " + p.string());
}

void write_sidecar_header(std::ofstream& out, const std::vector<std::string>& comments) {
  out << "# AEDS metadata v" << kDatasetVersion << "\n";
  out << "# fields: index seed delay_s snr_db mode tones qpsk\n";
  for (const auto& line : comments) out << "# " << line << "\n";
}

}  // namespace

const char* to_string(InterferenceMode m) {
  switch (m) {
    case InterferenceMode::none: return "none";
    case InterferenceMode::tones: return "tones";
    case InterferenceMode::qpsk: return "qpsk";
    case InterferenceMode::mixed: return "mixed";
  }
  return "?";
}

const char* to_string(TonePlacement p) { return p == TonePlacement::grid ? "grid" : "random"; }

const char* to_string(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::none: return "none";
    case InterferenceKind::tones: return "tones";
    case InterferenceKind::qpsk: return "qpsk";
    case InterferenceKind::both: return "both";
  }
  return "?";
}

InterferenceMode parse_interference_mode(const std::string& s) {
  for (auto m : {InterferenceMode::none, InterferenceMode::tones, InterferenceMode::qpsk, InterferenceMode::mixed})
    if (s == to_string(m)) return m;
  throw ConfigError("unknown interference mode '" + s + "' (expected none, tones, qpsk or mixed)");
}

TonePlacement parse_tone_placement(const std::string& s) {
  if (s == "random") return TonePlacement::random;
  if (s == "grid") return TonePlacement::grid;
  throw ConfigError("unknown tone placement '" + s + "' (expected random or grid)");
}

InterferenceKind parse_interference_kind(const std::string& s) {
  for (auto k : {InterferenceKind::none, InterferenceKind::tones, InterferenceKind::qpsk, InterferenceKind::both})
    if (s == to_string(k)) return k;
  throw FormatError("unknown interference kind '" + s + "'");
}

void GenerationConfig::validate() const {
  chirp.validate();
  fading.validate();
  if (num_examples <= 0) throw ConfigError("generation: num_examples must be positive");
  check_range(delay_frac_range, "delay_frac_range");
  if (delay_frac_range.lo < 0.0) throw ConfigError("generation: delay_frac_range must be non-negative");
  check_range(snr_db_range, "snr_db_range");
  check_range(tone_sir_db_range, "tone_sir_db_range");
  check_range(qpsk_sir_db_range, "qpsk_sir_db_range");
  check_range(qpsk_bandwidth_frac_range, "qpsk_bandwidth_frac_range");
  check_range(qpsk_duration_frac_range, "qpsk_duration_frac_range");
  if (num_tones_range[0] < 0 || num_tones_range[0] > num_tones_range[1])
    throw ConfigError("generation: num_tones_range must be an ordered non-negative range");
  if (qpsk_bandwidth_frac_range.lo <= 0.0 || qpsk_bandwidth_frac_range.hi * chirp.bandwidth_hz > chirp.sample_rate_hz)
    throw ConfigError("generation: qpsk_bandwidth_frac_range must be positive and keep the band below sample_rate");
  if (qpsk_duration_frac_range.lo < 0.0 || qpsk_duration_frac_range.hi > 1.0)
    throw ConfigError("generation: qpsk_duration_frac_range must lie in [0, 1]");
  if (!(qpsk_rolloff >= 0.0 && qpsk_rolloff <= 1.0)) throw ConfigError("generation: qpsk_rolloff must lie in [0, 1]");
  if (std::any_of(mixture_weights.begin(), mixture_weights.end(), [](double w) { return !(w >= 0.0); }) ||
      mixture_weights[0] + mixture_weights[1] + mixture_weights[2] <= 0.0)
    throw ConfigError("generation: mixture_weights must be non-negative with a positive sum");
}

ExampleMeta draw_example_meta(const GenerationConfig& cfg, std::int64_t index) {
  ExampleMeta meta;
  meta.index = index;
  meta.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(derive_seed(meta.seed, kDraw));

  const double T = cfg.chirp.duration_s();
  const double B = cfg.chirp.bandwidth_hz;
  meta.delay_s = uniform(rng, cfg.delay_frac_range) * T;
  meta.snr_db = uniform(rng, cfg.snr_db_range);

  switch (cfg.interference_mode) {
    case InterferenceMode::none: meta.kind = InterferenceKind::none; break;
    case InterferenceMode::tones: meta.kind = InterferenceKind::tones; break;
    case InterferenceMode::qpsk: meta.kind = InterferenceKind::qpsk; break;
    case InterferenceMode::mixed: {
      std::discrete_distribution<int> pick(cfg.mixture_weights.begin(), cfg.mixture_weights.end());
      static constexpr InterferenceKind kinds[] = {InterferenceKind::tones, InterferenceKind::qpsk,
                                                   InterferenceKind::both};
      meta.kind = kinds[pick(rng)];
      break;
    }
  }

  if (meta.kind == InterferenceKind::tones || meta.kind == InterferenceKind::both) {
    const auto count = std::uniform_int_distribution<std::int64_t>(cfg.num_tones_range[0], cfg.num_tones_range[1])(rng);
    const auto grid = tone_grid(static_cast<int>(count), B);
    for (std::int64_t i = 0; i < count; ++i) {
      ToneSpec tone;
      tone.frequency_hz = cfg.tone_placement == TonePlacement::grid
                              ? grid[static_cast<std::size_t>(i)]
                              : std::uniform_real_distribution<double>(-B / 2, B / 2)(rng);
      tone.sir_db = uniform(rng, cfg.tone_sir_db_range);
      tone.phase_rad = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
      meta.tones.push_back(tone);
    }
  }
  if (meta.kind == InterferenceKind::qpsk || meta.kind == InterferenceKind::both) {
    QpskSpec q;
    q.rolloff = cfg.qpsk_rolloff;
    q.bandwidth_hz = uniform(rng, cfg.qpsk_bandwidth_frac_range) * B;
    const double slack = std::max(0.0, (B - q.bandwidth_hz) / 2);
    q.center_hz = slack > 0.0 ? std::uniform_real_distribution<double>(-slack, slack)(rng) : 0.0;
    q.duration_frac = uniform(rng, cfg.qpsk_duration_frac_range);
    const double room = 1.0 - q.duration_frac;
    q.start_frac = room > 0.0 ? std::uniform_real_distribution<double>(0.0, room)(rng) : 0.0;
    q.sir_db = uniform(rng, cfg.qpsk_sir_db_range);
    meta.qpsk = q;
  }
  return meta;
}

ExamplePair synthesize_example(const ChirpParams& chirp, const FadingParams& fading, const ExampleMeta& meta,
                               bool faded_label) {
  const IQSignal delayed = apply_delay(generate_cwlfm(chirp), meta.delay_s);
  const IQSignal faded = apply_amplitude_fading(delayed, fading, chirp.bandwidth_hz, derive_seed(meta.seed, kFading));
  ExamplePair pair;
  pair.meta = meta;
  pair.clean = faded_label ? faded : delayed;
  const double reference = pair.clean.power();

  IQSignal dirty = meta.snr_db ? add_awgn(faded, NoiseParams{*meta.snr_db}, derive_seed(meta.seed, kNoise)) : faded;
  dirty = add_tones(dirty, meta.tones, reference);
  if (meta.qpsk) dirty = add_qpsk(dirty, *meta.qpsk, reference, derive_seed(meta.seed, kQpsk));
  pair.dirty = std::move(dirty);
  return pair;
}

ExamplePair generate_example(const GenerationConfig& cfg, std::int64_t index) {
  return synthesize_example(cfg.chirp, cfg.fading, draw_example_meta(cfg, index), cfg.faded_label);
}

std::filesystem::path sidecar_path(const std::filesystem::path& dataset) {
  auto p = dataset;
  p += ".meta";
  return p;
}

std::string format_meta_line(const ExampleMeta& m) {
  std::ostringstream os;
  os << "index=" << m.index << " seed=" << m.seed << " delay_s=" << fmt(m.delay_s)
     << " snr_db=" << (m.snr_db ? fmt(*m.snr_db) : std::string("none")) << " mode=" << to_string(m.kind) << " tones=";
  if (m.tones.empty()) os << "none";
  for (std::size_t i = 0; i < m.tones.size(); ++i)
    os << (i ? "," : "") << fmt(m.tones[i].frequency_hz) << ':' << fmt(m.tones[i].sir_db) << ':'
       << fmt(m.tones[i].phase_rad);
  os << " qpsk=";
  if (!m.qpsk) {
    os << "none";
  } else {
    const auto& q = *m.qpsk;
    os << fmt(q.bandwidth_hz) << ':' << fmt(q.center_hz) << ':' << fmt(q.start_frac) << ':' << fmt(q.duration_frac)
       << ':' << fmt(q.sir_db) << ':' << fmt(q.rolloff);
  }
  return os.str();
}

ExampleMeta parse_meta_line(const std::string& line) {
  ExampleMeta m;
  int seen = 0;
  for (const auto field : split(line, ' ')) {
    if (field.empty()) continue;
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw FormatError("metadata field without '=': " + line);
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    ++seen;
    if (key == "index") {
      const auto res = std::from_chars(value.data(), value.data() + value.size(), m.index);
      if (res.ec != std::errc()) throw FormatError("bad index in metadata line: " + line);
    } else if (key == "seed") {
      const auto res = std::from_chars(value.data(), value.data() + value.size(), m.seed);
      if (res.ec != std::errc()) throw FormatError("bad seed in metadata line: " + line);
    } else if (key == "delay_s") {
      m.delay_s = parse_double(value, line);
    } else if (key == "snr_db") {
      if (value != "none") m.snr_db = parse_double(value, line);
    } else if (key == "mode") {
      m.kind = parse_interference_kind(std::string(value));
    } else if (key == "tones") {
      if (value == "none") continue;
      for (const auto entry : split(value, ',')) {
        const auto parts = split(entry, ':');
        if (parts.size() != 3) throw FormatError("bad tone entry in metadata line: " + line);
        m.tones.push_back({parse_double(parts[0], line), parse_double(parts[1], line), parse_double(parts[2], line)});
      }
    } else if (key == "qpsk") {
      if (value == "none") continue;
      const auto parts = split(value, ':');
      if (parts.size() != 6) throw FormatError("bad qpsk entry in metadata line: " + line);
      QpskSpec q;
      q.bandwidth_hz = parse_double(parts[0], line);
      q.center_hz = parse_double(parts[1], line);
      q.start_frac = parse_double(parts[2], line);
      q.duration_frac = parse_double(parts[3], line);
      q.sir_db = parse_double(parts[4], line);
      q.rolloff = parse_double(parts[5], line);
      m.qpsk = q;
    } else {
      throw FormatError("unknown metadata key '" + std::string(key) + "'");
    }
  }
  if (seen != 7) throw FormatError("metadata line must have 7 fields: " + line);
  return m;
}

void generate_dataset(const GenerationConfig& cfg, const std::filesystem::path& path,
                      const std::vector<std::string>& comments) {
  cfg.validate();
  const std::int64_t n = cfg.chirp.num_samples;
  TempFile data_tmp(path), meta_tmp(sidecar_path(path));
  std::ofstream out = open_out(data_tmp.path());
  std::ofstream meta = open_out(meta_tmp.path());
  write_header(out, static_cast<std::uint64_t>(cfg.num_examples), static_cast<std::uint64_t>(n),
               cfg.chirp.sample_rate_hz);
  write_sidecar_header(meta, comments);

  // Generate in blocks so memory stays bounded; each block is produced in
  // parallel and written in index order.
  constexpr std::int64_t kBlock = 256;
  std::vector<ExamplePair> block;
  std::vector<float> buffer;
  for (std::int64_t start = 0; start < cfg.num_examples; start += kBlock) {
    const std::int64_t count = std::min(kBlock, cfg.num_examples - start);
    block.assign(static_cast<std::size_t>(count), ExamplePair{});
    parallel_for(count, [&](std::int64_t i) { block[static_cast<std::size_t>(i)] = generate_example(cfg, start + i); });
    for (const auto& pair : block) {
      write_pair(out, pair, buffer);
      meta << format_meta_line(pair.meta) << '\n';
    }
  }
  finish(out, data_tmp.path());
  finish(meta, meta_tmp.path());
  data_tmp.commit();
  meta_tmp.commit();
}

void write_dataset(const std::filesystem::path& path, std::span<const ExamplePair> pairs,
                   const std::vector<std::string>& comments) {
  if (pairs.empty()) throw ArgumentError("write_dataset: no examples");
  const auto& first = pairs.front().clean;
  for (const auto& p : pairs) {
    require_compatible(p.clean, first, "write_dataset");
    require_compatible(p.dirty, first, "write_dataset");
  }
  TempFile data_tmp(path), meta_tmp(sidecar_path(path));
  std::ofstream out = open_out(data_tmp.path());
  std::ofstream meta = open_out(meta_tmp.path());
  write_header(out, pairs.size(), static_cast<std::uint64_t>(first.size()), first.sample_rate_hz);
  write_sidecar_header(meta, comments);
  std::vector<float> buffer;
  for (const auto& pair : pairs) {
    write_pair(out, pair, buffer);
    meta << format_meta_line(pair.meta) << '\n';
  }
  finish(out, data_tmp.path());
  finish(meta, meta_tmp.path());
  data_tmp.commit();
  meta_tmp.commit();
}

DatasetHeader read_dataset_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  DatasetHeader h;
  h.file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (h.file_size < kDatasetHeaderBytes)
    throw SizeMismatchError(path.string() + ": file has " + std::to_string(h.file_size) +
                            " bytes, shorter than the " + std::to_string(kDatasetHeaderBytes) + "-byte header");
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path.string() + ": bad magic at offset 0, expected \"AEDS\"");
  in.read(reinterpret_cast<char*>(&h.version), 4);
  if (h.version != kDatasetVersion)
    throw FormatError(path.string() + ": unsupported dataset version " + std::to_string(h.version) + " at offset 4");
  in.read(reinterpret_cast<char*>(&h.num_examples), 8);
  in.read(reinterpret_cast<char*>(&h.num_samples), 8);
  in.read(reinterpret_cast<char*>(&h.sample_rate_hz), 8);
  if (h.num_examples == 0) throw FormatError(path.string() + ": num_examples is zero at offset 8");
  if (h.num_samples == 0 || h.num_samples > (std::uint64_t{1} << 32))
    throw FormatError(path.string() + ": implausible num_samples " + std::to_string(h.num_samples) + " at offset 16");
  if (!(h.sample_rate_hz > 0.0) || !std::isfinite(h.sample_rate_hz))
    throw FormatError(path.string() + ": invalid sample rate at offset 24");
  const std::uint64_t expected = dataset_file_size(h.num_examples, h.num_samples);
  if (h.file_size != expected)
    throw SizeMismatchError(path.string() + ": payload size mismatch, header implies " + std::to_string(expected) +
                            " bytes but file has " + std::to_string(h.file_size));
  return h;
}

DatasetReader::DatasetReader(const std::filesystem::path& path)
    : path_(path), header_(read_dataset_header(path)), stream_(path, std::ios::binary) {
  if (!stream_) throw IoError("cannot open " + path.string());
  std::ifstream meta(sidecar_path(path));
  std::string line;
  while (meta && std::getline(meta, line)) {
    if (line.empty() || line[0] == '#') continue;
    meta_.push_back(parse_meta_line(line));
  }
  if (!meta_.empty() && meta_.size() != header_.num_examples)
    throw FormatError(sidecar_path(path).string() + ": sidecar lists " + std::to_string(meta_.size()) +
                      " examples, dataset holds " + std::to_string(header_.num_examples));
}

void DatasetReader::read_raw(std::int64_t index, std::vector<float>& buffer) const {
  if (index < 0 || index >= size())
    throw OutOfRangeError("dataset index " + std::to_string(index) + " outside [0, " + std::to_string(size()) + ")");
  const std::uint64_t floats = 4 * header_.num_samples;
  buffer.resize(floats);
  const std::uint64_t offset = kDatasetHeaderBytes + static_cast<std::uint64_t>(index) * floats * sizeof(float);
  std::lock_guard lock(mutex_);
  stream_.clear();
  stream_.seekg(static_cast<std::streamoff>(offset));
  stream_.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(floats * sizeof(float)));
  if (!stream_) throw IoError(path_.string() + ": read failed at offset " + std::to_string(offset));
}

ExamplePair DatasetReader::read(std::int64_t index) const {
  std::vector<float> buffer;
  read_raw(index, buffer);
  const auto n = num_samples();
  ExamplePair pair;
  pair.clean = read_interleaved(buffer.data(), n, sample_rate_hz());
  pair.dirty = read_interleaved(buffer.data() + 2 * n, n, sample_rate_hz());
  if (!meta_.empty()) pair.meta = meta_[static_cast<std::size_t>(index)];
  return pair;
}

void DatasetReader::load_batch(std::span<const std::int64_t> indices, nn::Tensor<float>& dirty,
                               nn::Tensor<float>& clean) const {
  const auto n = num_samples();
  const nn::Shape shape{static_cast<nn::Index>(indices.size()), 2, n};
  if (dirty.shape() != shape) dirty = nn::Tensor<float>(shape);
  if (clean.shape() != shape) clean = nn::Tensor<float>(shape);
  std::vector<float> buffer;
  for (std::size_t b = 0; b < indices.size(); ++b) {
    read_raw(indices[b], buffer);
    const auto bi = static_cast<nn::Index>(b);
    for (nn::Index i = 0; i < n; ++i) {
      clean(bi, 0, i) = buffer[static_cast<std::size_t>(2 * i)];
      clean(bi, 1, i) = buffer[static_cast<std::size_t>(2 * i + 1)];
      dirty(bi, 0, i) = buffer[static_cast<std::size_t>(2 * n + 2 * i)];
      dirty(bi, 1, i) = buffer[static_cast<std::size_t>(2 * n + 2 * i + 1)];
    }
  }
}

BatchIterator::BatchIterator(const DatasetReader& reader, std::int64_t batch_size,
                             std::optional<std::uint64_t> shuffle_seed, std::int64_t count)
    : reader_(&reader), batch_size_(batch_size) {
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  const std::int64_t total = count > 0 ? std::min(count, reader.size()) : reader.size();
  order_.resize(static_cast<std::size_t>(total));
  std::iota(order_.begin(), order_.end(), 0);
  if (shuffle_seed) {
    // Fisher-Yates with an explicit engine so the order does not depend on
    // the standard library's shuffle implementation.
    std::mt19937_64 rng(*shuffle_seed);
    for (std::size_t i = order_.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order_[i - 1], order_[j]);
    }
  }
}

bool BatchIterator::next(Batch& batch) {
  if (cursor_ >= order_.size()) return false;
  const std::size_t end = std::min(order_.size(), cursor_ + static_cast<std::size_t>(batch_size_));
  batch.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                       order_.begin() + static_cast<std::ptrdiff_t>(end));
  reader_->load_batch(batch.indices, batch.dirty, batch.clean);
  cursor_ = end;
  return true;
}

std::int64_t BatchIterator::num_batches() const {
  return (static_cast<std::int64_t>(order_.size()) + batch_size_ - 1) / batch_size_;
}

BatchIterator batch_iterator(const DatasetReader& reader, std::int64_t batch_size,
                             std::optional<std::uint64_t> shuffle_seed, std::int64_t count) {
  return BatchIterator(reader, batch_size, shuffle_seed, count);
}

void write_signal(const IQSignal& sig, nn::Tensor<float>& t, nn::Index b) {
  nn::require_rank(t.shape(), 3, "write_signal");
  nn::require_axis(t.shape(), 1, 2, "write_signal", "channel");
  nn::require_axis(t.shape(), 2, sig.size(), "write_signal", "time");
  t.rows(b).row(0) = sig.samples.real().transpose();
  t.rows(b).row(1) = sig.samples.imag().transpose();
}

IQSignal read_signal(const nn::Tensor<float>& t, nn::Index b, double sample_rate_hz) {
  nn::require_rank(t.shape(), 3, "read_signal");
  nn::require_axis(t.shape(), 1, 2, "read_signal", "channel");
  const auto rows = t.rows(b);
  IQSignal sig{Eigen::ArrayXcf(t.dim(2)), sample_rate_hz};
  sig.samples.real() = rows.row(0).transpose();
  sig.samples.imag() = rows.row(1).transpose();
  return sig;
}

nn::Tensor<float> to_tensor(std::span<const IQSignal> signals) {
  if (signals.empty()) throw ArgumentError("to_tensor: no signals");
  nn::Tensor<float> t({static_cast<nn::Index>(signals.size()), 2, signals.front().size()});
  for (std::size_t b = 0; b < signals.size(); ++b) write_signal(signals[b], t, static_cast<nn::Index>(b));
  return t;
}

}  // namespace aec
