#include "aec/config.hpp"

#include <fstream>
#include <set>

#include "aec/errors.hpp"

namespace aec {

using nlohmann::json;

namespace {

// Reads keys from one JSON object, remembering which ones were consumed so
// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void operator()(const char* key, T& value) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const std::string name = where(key);
    try {
      read(j_.at(key), value, name);
    } catch (const json::exception& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }

  template <typename Visit>
  void section(const char* key, Visit&& visit) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    Reader sub(j_.at(key), where(key));
    visit(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError("unknown config key '" + where(item.key()) + "'");
  }

 private:
  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  static void read(const json& v, T& out, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + " must be a boolean");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(name + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) {
          out = v.get<T>();
        } else {
          const auto s = v.get<std::int64_t>();
          if (s < 0) throw ConfigError(name + " must be non-negative");
          out = static_cast<T>(s);
        }
      } else {
        out = v.get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name + " must be a number");
      out = v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(name + " must be a string");
      out = v.get<std::string>();
    } else if constexpr (std::is_same_v<T, Range>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(name + " must be a [lo, hi] pair of numbers");
      out = Range{v[0].get<double>(), v[1].get<double>()};
    } else if constexpr (std::is_same_v<T, std::optional<double>> || std::is_same_v<T, std::optional<std::int64_t>>) {
      if (v.is_null()) {
        out.reset();
      } else {
        typename T::value_type inner{};
        read(v, inner, name);
        out = inner;
      }
    } else {
      // std::array / std::vector of numbers
      if (!v.is_array()) throw ConfigError(name + " must be an array");
      if constexpr (requires { out.resize(0); }) {
        out.resize(v.size());
      } else if (v.size() != out.size()) {
        throw ConfigError(name + " must have " + std::to_string(out.size()) + " elements");
      }
      for (std::size_t i = 0; i < v.size(); ++i) read(v[i], out[i], name + "[" + std::to_string(i) + "]");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

class Writer {
 public:
  explicit Writer(json& j) : j_(j) { j_ = json::object(); }

  template <typename T>
  void operator()(const char* key, T& value) {
    if constexpr (std::is_same_v<T, Range>) {
      j_[key] = json::array({value.lo, value.hi});
    } else if constexpr (std::is_same_v<T, std::optional<double>> || std::is_same_v<T, std::optional<std::int64_t>>) {
      j_[key] = value ? json(*value) : json(nullptr);
    } else {
      j_[key] = value;
    }
  }

  template <typename Visit>
  void section(const char* key, Visit&& visit) {
    Writer sub(j_[key]);
    visit(sub);
  }

  void finish() const {}

 private:
  json& j_;
};

// Enum fields travel as strings.
template <typename A, typename E, typename Parse, typename Name>
void enum_field(A& a, const char* key, E& value, Parse parse, Name name) {
  std::string s = name(value);
  a(key, s);
  value = parse(s);
}

template <typename A>
void visit(A& a, ChirpParams& c) {
  a("sample_rate_hz", c.sample_rate_hz);
  a("bandwidth_hz", c.bandwidth_hz);
  a("num_samples", c.num_samples);
  a("amplitude", c.amplitude);
}

template <typename A>
void visit(A& a, FadingParams& f) {
  a("relative_bandwidth", f.relative_bandwidth);
  a("sigma", f.sigma);
}

template <typename A>
void visit(A& a, GenerationConfig& g) {
  a("num_examples", g.num_examples);
  a("delay_frac_range", g.delay_frac_range);
  a("snr_db_range", g.snr_db_range);
  enum_field(a, "interference_mode", g.interference_mode, parse_interference_mode,
             [](InterferenceMode m) { return to_string(m); });
  a("num_tones_range", g.num_tones_range);
  a("tone_sir_db_range", g.tone_sir_db_range);
  enum_field(a, "tone_placement", g.tone_placement, parse_tone_placement,
             [](TonePlacement p) { return to_string(p); });
  a("qpsk_sir_db_range", g.qpsk_sir_db_range);
  a("qpsk_bandwidth_frac_range", g.qpsk_bandwidth_frac_range);
  a("qpsk_duration_frac_range", g.qpsk_duration_frac_range);
  a("qpsk_rolloff", g.qpsk_rolloff);
  a("mixture_weights", g.mixture_weights);
  a("faded_label", g.faded_label);
  a("seed", g.master_seed);
}

template <typename A>
void visit(A& a, RunConfig& r) {
  ModelConfig& m = r.model;
  a.section("model", [&](auto& s) {
    s("kernel_size", r.kernel_size);
    s("channels", m.channels);
    s("num_stages", m.num_stages);
    s("pool_window", m.pool_window);
    s("latent_channels", m.latent_channels);
    s("activation_slope", m.activation_slope);
    s("mixer_channels", m.mixer_channels);
    s("normalize_input", m.normalize_input);
  });
  a.section("training", [&](auto& s) {
    TrainingConfig& t = r.training;
    s("epochs", t.epochs);
    s("batch_size", t.batch_size);
    s("seed", t.seed);
    s("learning_rate", t.adam.learning_rate);
    s("beta1", t.adam.beta1);
    s("beta2", t.adam.beta2);
    s("epsilon", t.adam.epsilon);
    s("holdout_examples", t.holdout_examples);
  });
  a.section("sweep", [&](auto& s) {
    EvalSweepConfig& e = r.sweep;
    s("sir_grid_db", e.sir_grid_db);
    enum_field(s, "interference_type", e.interference_type, parse_sweep_interference,
               [](SweepInterference i) { return to_string(i); });
    s("num_tones", e.num_tones);
    enum_field(s, "tone_placement", e.tone_placement, parse_tone_placement,
               [](TonePlacement p) { return to_string(p); });
    s("qpsk_bandwidth_frac", e.qpsk_bandwidth_frac);
    s("qpsk_rolloff", e.qpsk_rolloff);
    s("num_trials", e.num_trials);
    s("snr_db", e.snr_db);
    s("delay_frac_range", e.delay_frac_range);
    s("seed", e.seed);
    s("false_report_gate_m", e.false_report_gate_m);
    s("dc_guard_bins", e.dc_guard_bins);
    bool hann = e.window == Window::hann;
    s("hann_window", hann);
    e.window = hann ? Window::hann : Window::rectangular;
  });
  a.section("sim", [&](auto& s) {
    SimConfig& c = r.sim;
    s("duration_s", c.trajectory.duration_s);
    s("record_interval_s", c.trajectory.record_interval_s);
    s("start_altitude_m", c.trajectory.start_altitude_m);
    s("end_altitude_m", c.trajectory.end_altitude_m);
    s("snr_db", c.snr_db);
    s("fading_enabled", c.fading_enabled);
    s("num_tones", c.num_tones);
    s("tone_sir_db", c.tone_sir_db);
    enum_field(s, "tone_placement", c.tone_placement, parse_tone_placement,
               [](TonePlacement p) { return to_string(p); });
    s("qpsk_enabled", c.qpsk_enabled);
    s("qpsk_sir_db", c.qpsk_sir_db);
    s("qpsk_bandwidth_frac", c.qpsk_bandwidth_frac);
    s("clutter_scatterers", c.clutter.num_scatterers);
    s("clutter_max_extra_delay_frac", c.clutter.max_extra_delay_frac);
    s("clutter_relative_power_db", c.clutter.relative_power_db);
    s("seed", c.seed);
    s("false_report_gate_m", c.false_report_gate_m);
    s("dc_guard_bins", c.dc_guard_bins);
  });
  a.section("chirp", [&](auto& s) { visit(s, r.chirp); });
  a.section("fading", [&](auto& s) { visit(s, r.fading); });
  a.section("generation", [&](auto& s) { visit(s, r.generation); });
  a("threads", r.threads);
}

}  // namespace

void RunConfig::finalize() {
  chirp.validate();
  fading.validate();
  generation.chirp = chirp;
  generation.fading = fading;
  sweep.chirp = chirp;
  sweep.fading = fading;
  sim.chirp = chirp;
  sim.fading = fading;
  model.num_samples = chirp.num_samples;
  model.kernel_size = kernel_size.value_or(chirp.num_samples >= 40000 ? 200 : 300);
  generation.validate();
  model.validate();
  if (training.epochs < 0) throw ConfigError("training.epochs must be non-negative");
  if (training.batch_size < 1) throw ConfigError("training.batch_size must be at least 1");
  if (!(training.adam.learning_rate > 0.0)) throw ConfigError("training.learning_rate must be positive");
  if (!(training.adam.beta1 >= 0.0 && training.adam.beta1 < 1.0) ||
      !(training.adam.beta2 >= 0.0 && training.adam.beta2 < 1.0))
    throw ConfigError("training.beta1 and training.beta2 must lie in [0, 1)");
  if (!(training.adam.epsilon > 0.0)) throw ConfigError("training.epsilon must be positive");
  if (training.holdout_examples < 0) throw ConfigError("training.holdout_examples must be non-negative");
  sweep.validate();
  sim.validate();
  if (threads < 0) throw ConfigError("threads must be non-negative");
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  Reader reader(j, "");
  visit(reader, cfg);
  reader.finish();
  cfg.finalize();
  return cfg;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key");
    if (!node->is_object()) throw ConfigError("override '" + assignment + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError("cannot open config " + path->string());
    j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw ConfigError("config " + path->string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return parse_run_config(j);
}

json to_json(const RunConfig& cfg) {
  json j;
  RunConfig copy = cfg;
  Writer writer(j);
  visit(writer, copy);
  return j;
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions o;
  o.epochs = cfg.training.epochs;
  o.batch_size = cfg.training.batch_size;
  o.seed = cfg.training.seed;
  o.adam = cfg.training.adam;
  return o;
}

}  // namespace aec
