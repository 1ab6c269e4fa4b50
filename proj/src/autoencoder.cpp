#include "aec/autoencoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "aec/errors.hpp"

namespace aec {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
  if (num_stages < 1) fail("num_stages must be >= 1");
  if (pool_window < 1) fail("pool_window must be >= 1");
  if (kernel_size < 2) fail("kernel_size must be >= 2, got " + std::to_string(kernel_size));
  if (channels < 1) fail("channels must be >= 1");
  if (latent_channels < 1) fail("latent_channels must be >= 1");
  if (mixer_channels < 1) fail("mixer_channels must be >= 1");
  if (!(activation_slope >= 0.0 && activation_slope < 1.0)) fail("activation_slope must lie in [0, 1)");
  std::int64_t factor = 1;
  for (std::int64_t i = 0; i < num_stages; ++i) factor *= pool_window;
  if (num_samples < factor || num_samples % factor != 0) {
    fail("num_samples " + std::to_string(num_samples) + " is not divisible by pool_window^num_stages = " +
         std::to_string(factor));
  }
}

std::int64_t ModelConfig::latent_length() const {
  std::int64_t len = num_samples;
  for (std::int64_t i = 0; i < num_stages; ++i) len /= pool_window;
  return len;
}

template <typename Scalar>
struct Autoencoder<Scalar>::Trace {
  TensorT input;
  std::vector<nn::ConvCache<Scalar>> enc_cache, dec_cache;
  std::vector<TensorT> enc_pre, dec_pre;  // pre-activation
  std::vector<nn::PoolIndices> pools;
  TensorT unmixer_input;
};

template <typename Scalar>
Autoencoder<Scalar>::Autoencoder(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const auto S = config_.num_stages;
  const auto K = config_.kernel_size;

  mixer_ = nn::IQMixer<Scalar>(config_.mixer_channels);
  mixer_.params.init_uniform(4, rng);

  std::int64_t len = config_.num_samples;
  std::int64_t in_ch = config_.mixer_channels;
  std::vector<std::int64_t> stage_len, stage_in;
  for (std::int64_t i = 0; i < S; ++i) {
    const std::int64_t out_ch = (i == S - 1) ? config_.latent_channels : config_.channels;
    encoder_.emplace_back(in_ch, out_ch, K, len);
    encoder_.back().params.init_uniform(in_ch * K, rng);
    stage_len.push_back(len);
    stage_in.push_back(in_ch);
    in_ch = out_ch;
    len /= config_.pool_window;
  }
  // Decoder stage j mirrors encoder stage S-1-j.
  for (std::int64_t j = 0; j < S; ++j) {
    const std::int64_t mirror = S - 1 - j;
    const std::int64_t out_ch = stage_in[static_cast<std::size_t>(mirror)];
    decoder_.emplace_back(in_ch, out_ch, K, stage_len[static_cast<std::size_t>(mirror)]);
    decoder_.back().params.init_uniform(in_ch * K, rng);
    in_ch = out_ch;
  }
  unmixer_ = nn::IQUnmixer<Scalar>(config_.mixer_channels);
  unmixer_.params.init_uniform(config_.mixer_channels * 2, rng);
  sync();
}

template <typename Scalar>
void Autoencoder<Scalar>::sync() {
  for (auto& e : encoder_) e.sync();
  for (auto& d : decoder_) d.sync();
}

template <typename Scalar>
void Autoencoder<Scalar>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename Scalar>
std::vector<nn::LayerParams<Scalar>*> Autoencoder<Scalar>::parameters() {
  std::vector<nn::LayerParams<Scalar>*> out{&mixer_.params};
  for (auto& e : encoder_) out.push_back(&e.params);
  for (auto& d : decoder_) out.push_back(&d.params);
  out.push_back(&unmixer_.params);
  return out;
}

template <typename Scalar>
std::vector<const nn::LayerParams<Scalar>*> Autoencoder<Scalar>::parameters() const {
  std::vector<const nn::LayerParams<Scalar>*> out{&mixer_.params};
  for (const auto& e : encoder_) out.push_back(&e.params);
  for (const auto& d : decoder_) out.push_back(&d.params);
  out.push_back(&unmixer_.params);
  return out;
}

template <typename Scalar>
std::int64_t Autoencoder<Scalar>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto* p : parameters()) n += p->weight.size() + p->bias.size();
  return n;
}

template <typename Scalar>
typename Autoencoder<Scalar>::TensorT Autoencoder<Scalar>::run(const TensorT& dirty, Trace* trace) const {
  nn::require_rank(dirty.shape(), 3, "autoencoder forward");
  nn::require_axis(dirty.shape(), 1, 2, "autoencoder forward", "IQ");
  nn::require_axis(dirty.shape(), 2, config_.num_samples, "autoencoder forward", "length");
  const auto slope = static_cast<Scalar>(config_.activation_slope);
  const std::size_t S = encoder_.size();

  std::vector<nn::PoolIndices> local_pools(S);
  std::vector<nn::PoolIndices>& pools = trace ? trace->pools : local_pools;
  if (trace) {
    trace->input = dirty;
    trace->enc_cache.assign(S, {});
    trace->dec_cache.assign(S, {});
    trace->enc_pre.assign(S, {});
    trace->dec_pre.assign(S, {});
    pools.assign(S, {});
  }

  TensorT h = mixer_.forward(dirty);
  for (std::size_t i = 0; i < S; ++i) {
    TensorT a = encoder_[i].forward(h, trace ? &trace->enc_cache[i] : nullptr);
    auto pooled = nn::maxpool(nn::leaky_relu(a, slope), config_.pool_window);
    pools[i] = std::move(pooled.indices);
    h = std::move(pooled.values);
    if (trace) trace->enc_pre[i] = std::move(a);
  }
  for (std::size_t j = 0; j < S; ++j) {
    const TensorT up = nn::max_unpool(h, pools[S - 1 - j]);
    TensorT t = decoder_[j].forward(up, trace ? &trace->dec_cache[j] : nullptr);
    h = nn::leaky_relu(t, slope);
    if (trace) trace->dec_pre[j] = std::move(t);
  }
  if (trace) trace->unmixer_input = h;
  return unmixer_.forward(h);
}

template <typename Scalar>
void Autoencoder<Scalar>::backward(const TensorT& grad_out, const Trace& trace) {
  const auto slope = static_cast<Scalar>(config_.activation_slope);
  const std::size_t S = encoder_.size();
  TensorT g = unmixer_.backward(trace.unmixer_input, grad_out);
  for (std::size_t jj = S; jj-- > 0;) {
    g = nn::leaky_relu_backward(trace.dec_pre[jj], g, slope);
    g = decoder_[jj].backward(g, trace.dec_cache[jj]);
    g = nn::max_unpool_backward(g, trace.pools[S - 1 - jj]);
  }
  for (std::size_t i = S; i-- > 0;) {
    g = nn::maxpool_backward(g, trace.pools[i]);
    g = nn::leaky_relu_backward(trace.enc_pre[i], g, slope);
    g = encoder_[i].backward(g, trace.enc_cache[i]);
  }
  mixer_.backward(trace.input, g);
}

namespace {

template <typename Scalar>
nn::Tensor<Scalar> scale_examples(const nn::Tensor<Scalar>& t, const std::vector<Scalar>& scales, bool divide) {
  nn::Tensor<Scalar> out = t;
  for (std::size_t b = 0; b < scales.size(); ++b) {
    auto rows = out.rows(static_cast<nn::Index>(b));
    if (divide)
      rows /= scales[b];
    else
      rows *= scales[b];
  }
  return out;
}

}  // namespace

template <typename Scalar>
std::vector<Scalar> Autoencoder<Scalar>::input_scales(const TensorT& dirty) const {
  nn::require_rank(dirty.shape(), 3, "autoencoder forward");
  std::vector<Scalar> scales(static_cast<std::size_t>(dirty.dim(0)));
  for (nn::Index b = 0; b < dirty.dim(0); ++b) {
    const auto rows = dirty.rows(b);
    const double ms = rows.template cast<double>().square().mean();
    scales[static_cast<std::size_t>(b)] = ms > 0.0 && std::isfinite(ms) ? static_cast<Scalar>(std::sqrt(ms)) : Scalar(1);
  }
  return scales;
}

template <typename Scalar>
typename Autoencoder<Scalar>::TensorT Autoencoder<Scalar>::forward(const TensorT& dirty) const {
  if (!config_.normalize_input) return run(dirty, nullptr);
  const auto scales = input_scales(dirty);
  return scale_examples(run(scale_examples(dirty, scales, true), nullptr), scales, false);
}

template <typename Scalar>
Scalar Autoencoder<Scalar>::objective(const TensorT& dirty, const TensorT& clean) const {
  if (!config_.normalize_input) return nn::mse_loss(run(dirty, nullptr), clean).loss;
  const auto scales = input_scales(dirty);
  return nn::mse_loss(run(scale_examples(dirty, scales, true), nullptr), scale_examples(clean, scales, true)).loss;
}

template <typename Scalar>
Scalar Autoencoder<Scalar>::loss_and_gradients(const TensorT& dirty, const TensorT& clean) {
  Trace trace;
  if (!config_.normalize_input) {
    auto loss = nn::mse_loss(run(dirty, &trace), clean);
    backward(loss.grad, trace);
    return loss.loss;
  }
  const auto scales = input_scales(dirty);
  auto loss = nn::mse_loss(run(scale_examples(dirty, scales, true), &trace), scale_examples(clean, scales, true));
  backward(loss.grad, trace);
  return loss.loss;
}

template <typename Scalar>
Scalar Autoencoder<Scalar>::train_step(const TensorT& dirty, const TensorT& clean, nn::AdamState<Scalar>& adam) {
  const Scalar loss = loss_and_gradients(dirty, clean);
  const auto params = parameters();
  nn::adam_step<Scalar>(params, adam);
  sync();
  return loss;
}

template <typename Scalar>
std::vector<std::int64_t> Autoencoder<Scalar>::layer_lengths() const {
  std::vector<std::int64_t> out{config_.num_samples, config_.num_samples};
  std::int64_t len = config_.num_samples;
  for (std::int64_t i = 0; i < config_.num_stages; ++i) out.push_back(len /= config_.pool_window);
  for (std::int64_t j = 0; j < config_.num_stages; ++j) out.push_back(len *= config_.pool_window);
  out.push_back(config_.num_samples);
  return out;
}

template <typename Scalar>
std::vector<std::pair<int, int>> Autoencoder<Scalar>::unpool_routing() const {
  std::vector<std::pair<int, int>> out;
  const int S = static_cast<int>(config_.num_stages);
  for (int j = 0; j < S; ++j) out.emplace_back(S - 1 - j, j);
  return out;
}

template <typename Scalar>
double Autoencoder<Scalar>::compression_ratio() const {
  return 2.0 * static_cast<double>(config_.num_samples) / static_cast<double>(config_.latent_length());
}

template <typename Scalar>
template <typename Other>
Autoencoder<Other> Autoencoder<Scalar>::cast() const {
  Autoencoder<Other> out(config_, 0);
  auto dst = out.parameters();
  auto src = parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i]->weight = src[i]->weight.template cast<Other>();
    dst[i]->bias = src[i]->bias.template cast<Other>();
  }
  out.sync();
  return out;
}

template class Autoencoder<float>;
template class Autoencoder<double>;
template Autoencoder<double> Autoencoder<float>::cast<double>() const;
template Autoencoder<float> Autoencoder<double>::cast<float>() const;

// ---------------------------------------------------------------------------
// Checkpoint I/O. Little-endian throughout:
//   "AECW" u32 version
//   config: i64 num_samples, kernel_size, channels, num_stages, pool_window,
//           latent_channels, mixer_channels; f64 activation_slope;
//           u8 normalize_input
//   u32 tensor_count, then per tensor: u32 rank, i64 dims[rank], f32 data
//   u8 has_adam; if set: u64 step, f64 lr, beta1, beta2, epsilon,
//           then first and second moment for every tensor (dims + data)

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'A', 'E', 'C', 'W'};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void tensor(const nn::Tensor<float>& t) {
    pod(static_cast<std::uint32_t>(t.rank()));
    for (const auto d : t.shape()) pod(static_cast<std::int64_t>(d));
    out_.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0);
  }
  std::uint64_t size() const { return size_; }
  std::uint64_t offset() { return static_cast<std::uint64_t>(in_.tellg()); }

  void read(char* p, std::size_t n) {
    const std::uint64_t at = offset();
    if (at + n > size_) {
      throw SizeMismatchError(path_.string() + ": truncated checkpoint, need " + std::to_string(n) +
                              " bytes at offset " + std::to_string(at) + " but file has " + std::to_string(size_));
    }
    in_.read(p, static_cast<std::streamsize>(n));
  }
  template <typename T>
  T pod() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  nn::Tensor<float> tensor(const nn::Shape& expected) {
    const std::uint64_t at = offset();
    const auto rank = pod<std::uint32_t>();
    if (rank > 8) throw FormatError(path_.string() + ": implausible tensor rank at offset " + std::to_string(at));
    nn::Shape shape(rank);
    for (auto& d : shape) d = pod<std::int64_t>();
    if (shape != expected) {
      throw FormatError(path_.string() + ": tensor at offset " + std::to_string(at) + " has shape " +
                        nn::shape_string(shape) + ", config implies " + nn::shape_string(expected));
    }
    nn::Tensor<float> t(shape);
    read(reinterpret_cast<char*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(float));
    return t;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
};

void write_config(Writer& w, const ModelConfig& c) {
  for (const std::int64_t v : {c.num_samples, c.kernel_size, c.channels, c.num_stages, c.pool_window,
                               c.latent_channels, c.mixer_channels}) {
    w.pod(v);
  }
  w.pod(c.activation_slope);
  w.pod(static_cast<std::uint8_t>(c.normalize_input));
}

ModelConfig read_config(Reader& r) {
  ModelConfig c;
  c.num_samples = r.pod<std::int64_t>();
  c.kernel_size = r.pod<std::int64_t>();
  c.channels = r.pod<std::int64_t>();
  c.num_stages = r.pod<std::int64_t>();
  c.pool_window = r.pod<std::int64_t>();
  c.latent_channels = r.pod<std::int64_t>();
  c.mixer_channels = r.pod<std::int64_t>();
  c.activation_slope = r.pod<double>();
  const auto norm = r.pod<std::uint8_t>();
  if (norm > 1) throw FormatError("normalize_input flag must be 0 or 1");
  c.normalize_input = norm == 1;
  return c;
}

CheckpointHeader read_header(Reader& r, const std::filesystem::path& path) {
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": bad magic at offset 0, expected \"AECW\"");
  }
  CheckpointHeader h;
  h.version = r.pod<std::uint32_t>();
  if (h.version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(h.version) +
                      " at offset 4");
  }
  h.config = read_config(r);
  try {
    h.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": stored " + e.what());
  }
  h.tensor_count = r.pod<std::uint32_t>();
  h.file_size = r.size();
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Autoencoder<float>& model,
                     const nn::AdamState<float>* adam) {
  auto partial = path;
  partial += ".partial";
  Writer w(partial);
  w.raw(kMagic, 4);
  w.pod(kCheckpointVersion);
  write_config(w, model.config());
  const auto params = model.parameters();
  w.pod(static_cast<std::uint32_t>(params.size() * 2));
  for (const auto* p : params) {
    w.tensor(p->weight);
    w.tensor(p->bias);
  }
  const bool has_adam = adam != nullptr && adam->initialized();
  w.pod(static_cast<std::uint8_t>(has_adam ? 1 : 0));
  if (has_adam) {
    w.pod(adam->step);
    w.pod(adam->config.learning_rate);
    w.pod(adam->config.beta1);
    w.pod(adam->config.beta2);
    w.pod(adam->config.epsilon);
    for (std::size_t i = 0; i < adam->first_moment.size(); ++i) {
      w.tensor(adam->first_moment[i]);
      w.tensor(adam->second_moment[i]);
    }
  }
  try {
    w.close();
    std::filesystem::rename(partial, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(partial, ec);
    throw;
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  const CheckpointHeader h = read_header(r, path);
  Checkpoint ck{Autoencoder<float>(h.config, 0), std::nullopt};
  auto params = ck.model.parameters();
  if (h.tensor_count != params.size() * 2) {
    throw FormatError(path.string() + ": checkpoint holds " + std::to_string(h.tensor_count) +
                      " tensors, config implies " + std::to_string(params.size() * 2));
  }
  std::vector<nn::Shape> shapes;
  for (auto* p : params) {
    p->weight = r.tensor(p->weight.shape());
    p->bias = r.tensor(p->bias.shape());
    shapes.push_back(p->weight.shape());
    shapes.push_back(p->bias.shape());
  }
  const auto has_adam = r.pod<std::uint8_t>();
  if (has_adam > 1) throw FormatError(path.string() + ": bad optimizer flag");
  if (has_adam == 1) {
    nn::AdamState<float> adam;
    adam.step = r.pod<std::uint64_t>();
    adam.config.learning_rate = r.pod<double>();
    adam.config.beta1 = r.pod<double>();
    adam.config.beta2 = r.pod<double>();
    adam.config.epsilon = r.pod<double>();
    for (const auto& s : shapes) {
      adam.first_moment.push_back(r.tensor(s));
      adam.second_moment.push_back(r.tensor(s));
    }
    ck.adam = std::move(adam);
  }
  if (r.offset() != r.size()) {
    throw SizeMismatchError(path.string() + ": " + std::to_string(r.size() - r.offset()) +
                            " trailing bytes after checkpoint payload");
  }
  ck.model.sync();
  return ck;
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  Reader r(path);
  CheckpointHeader h = read_header(r, path);
  // Skip tensors to reach the optimizer flag.
  for (std::uint32_t i = 0; i < h.tensor_count; ++i) {
    const auto rank = r.pod<std::uint32_t>();
    std::int64_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) count *= r.pod<std::int64_t>();
    std::vector<char> skip(static_cast<std::size_t>(count) * sizeof(float));
    r.read(skip.data(), skip.size());
  }
  h.has_adam = r.pod<std::uint8_t>() == 1;
  if (h.has_adam) h.adam_step = r.pod<std::uint64_t>();
  return h;
}

}  // namespace aec
