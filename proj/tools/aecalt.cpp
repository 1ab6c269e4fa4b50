// Command-line front end: gen-data, train, eval, simulate, inspect.
//
// Exit codes: 0 success, 1 configuration or argument error, 2 I/O or file
// format error.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aec/altsim.hpp"
#include "aec/autoencoder.hpp"
#include "aec/config.hpp"
#include "aec/dataset.hpp"
#include "aec/errors.hpp"
#include "aec/metrics.hpp"
#include "aec/parallel.hpp"

namespace {

using namespace aec;
using ull = unsigned long long;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  int threads = -1;

  RunConfig load(const std::vector<std::string>& extra = {}) const {
    std::vector<std::string> all = overrides;
    all.insert(all.end(), extra.begin(), extra.end());
    const auto path = config.empty() ? std::nullopt : std::optional<std::filesystem::path>(config);
    RunConfig cfg = load_run_config(path, all);
    set_thread_limit(threads >= 0 ? threads : cfg.threads);
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c, const std::string& config_flag = "--config") {
  cmd->add_option(config_flag, c.config, "JSON run configuration");
  cmd->add_option("--set", c.overrides, "Override a config value, e.g. --set training.epochs=5");
  cmd->add_option("--threads", c.threads, "Worker thread cap (0 = all cores)");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const char* suffix) {
  auto out = p;
  out += suffix;
  return out;
}

void print_dataset_line(const std::filesystem::path& path, std::uint64_t seed) {
  const auto h = read_dataset_header(path);
  std::printf("examples=%llu N=%llu bytes=%llu seed=%llu path=%s\n", static_cast<ull>(h.num_examples),
              static_cast<ull>(h.num_samples), static_cast<ull>(h.file_size), static_cast<ull>(seed),
              path.string().c_str());
}

int cmd_gen_data(const Common& common, const std::string& out, std::optional<std::uint64_t> seed,
                 const std::string& holdout) {
  std::vector<std::string> extra;
  if (seed) extra.push_back("generation.seed=" + std::to_string(*seed));
  const RunConfig cfg = common.load(extra);
  const std::string echo = "config " + to_json(cfg).dump();
  generate_dataset(cfg.generation, out, {"command gen-data", echo});
  print_dataset_line(out, cfg.generation.master_seed);
  if (!holdout.empty()) {
    GenerationConfig g = cfg.generation;
    if (cfg.training.holdout_examples < 1) throw ConfigError("training.holdout_examples must be positive for --holdout");
    g.num_examples = cfg.training.holdout_examples;
    // Held-out examples use a seed stream disjoint from the training set.
    g.master_seed = derive_seed(cfg.generation.master_seed, 0x686f6c646f7574ULL);
    generate_dataset(g, holdout, {"command gen-data --holdout", echo});
    print_dataset_line(holdout, g.master_seed);
  }
  return 0;
}

int cmd_train(const Common& common, const std::string& data, const std::string& holdout, const std::string& out,
              std::optional<int> epochs, std::optional<std::uint64_t> seed, const std::string& resume,
              const std::string& log_path, bool quiet) {
  std::vector<std::string> extra;
  if (epochs) extra.push_back("training.epochs=" + std::to_string(*epochs));
  if (seed) extra.push_back("training.seed=" + std::to_string(*seed));
  const RunConfig cfg = common.load(extra);

  DatasetReader train_data(data);
  std::optional<DatasetReader> holdout_data;
  if (!holdout.empty()) holdout_data.emplace(holdout);

  Autoencoder<float> model;
  nn::AdamState<float> adam;
  if (!resume.empty()) {
    Checkpoint ck = load_checkpoint(resume);
    model = std::move(ck.model);
    if (ck.adam) adam = std::move(*ck.adam);
  } else {
    model = build_model<float>(cfg.model, cfg.training.seed);
  }

  TrainOptions options = train_options(cfg);
  options.checkpoint_path = out;
  options.verbose = !quiet;
  const TrainingLog log = train(model, train_data, adam, options, holdout_data ? &*holdout_data : nullptr);
  if (log.epochs.empty()) save_checkpoint(out, model, &adam);

  const std::filesystem::path csv = log_path.empty() ? with_suffix(out, ".log.csv") : std::filesystem::path(log_path);
  write_training_log_csv(csv, log);
  nlohmann::json echo = to_json(cfg);
  echo["model_used"] = {{"num_samples", model.config().num_samples}, {"kernel_size", model.config().kernel_size},
                        {"channels", model.config().channels}};
  write_json(with_suffix(out, ".config.json"), echo);
  std::printf("epochs=%zu best_epoch=%d best_loss=%.9g adam_step=%llu checkpoint=%s log=%s\n", log.epochs.size(),
              log.best_epoch, log.best_loss, static_cast<ull>(adam.step), out.c_str(), csv.string().c_str());
  return 0;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& out_csv,
             std::optional<std::uint64_t> seed) {
  std::vector<std::string> extra;
  if (seed) extra.push_back("sweep.seed=" + std::to_string(*seed));
  RunConfig cfg = common.load(extra);
  const Checkpoint ck = load_checkpoint(checkpoint);
  const auto rows = run_sweep(ck.model, cfg.sweep);
  write_sweep_csv(out_csv, rows);
  write_json(with_suffix(out_csv, ".config.json"), to_json(cfg));
  const double limit = 10.0 * cfg.chirp.range_bin_m();
  const auto t_in = threshold_sir(rows, false, limit);
  const auto t_out = threshold_sir(rows, true, limit);
  auto show = [](const std::optional<double>& t) { return t ? std::to_string(*t) : std::string("none"); };
  std::printf("rows=%zu threshold_no_aec_db=%s threshold_aec_db=%s csv=%s\n", rows.size(), show(t_in).c_str(),
              show(t_out).c_str(), out_csv.c_str());
  return 0;
}

int cmd_simulate(const Common& common, const std::string& checkpoint, const std::string& out_csv,
                 std::optional<std::uint64_t> seed, bool clean) {
  std::vector<std::string> extra;
  if (seed) extra.push_back("sim.seed=" + std::to_string(*seed));
  RunConfig cfg = common.load(extra);
  const Checkpoint ck = load_checkpoint(checkpoint);
  const SimConfig sim = clean ? cfg.sim.without_corruption() : cfg.sim;
  const SimResult result = run_landing_sim(ck.model, sim);
  write_sim_csv(out_csv, result);
  const std::string summary = format_summary(result.summary);
  {
    std::ofstream s(with_suffix(out_csv, ".summary.txt"), std::ios::trunc);
    if (!s) throw IoError("cannot write summary next to " + out_csv);
    s << summary;
  }
  write_json(with_suffix(out_csv, ".config.json"), to_json(cfg));
  std::fputs(summary.c_str(), stdout);
  return 0;
}

int cmd_inspect(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, "AEDS", 4) == 0) {
    const auto h = read_dataset_header(path);
    std::printf("magic AEDS\nversion %u\nexamples %llu\nnum_samples %llu\nsample_rate_hz %.9g\nfile_bytes %llu\n",
                h.version, static_cast<ull>(h.num_examples), static_cast<ull>(h.num_samples), h.sample_rate_hz,
                static_cast<ull>(h.file_size));
    const bool sidecar = std::filesystem::exists(sidecar_path(path));
    std::printf("sidecar %s\n", sidecar ? sidecar_path(path).string().c_str() : "missing");
    return 0;
  }
  if (in.gcount() == 4 && std::memcmp(magic, "AECW", 4) == 0) {
    const auto h = read_checkpoint_header(path);
    const auto& c = h.config;
    const std::int64_t latent = c.latent_length();
    std::printf("magic AECW\nversion %u\nnum_samples %lld\nkernel_size %lld\nchannels %lld\nnum_stages %lld\n"
                "pool_window %lld\nlatent_channels %lld\nmixer_channels %lld\nactivation_slope %.9g\n"
                "normalize_input %s\ntensors %u\nlatent_length %lld\ncompression_ratio %.9g\nadam %s\nadam_step %llu\nfile_bytes %llu\n",
                h.version, static_cast<long long>(c.num_samples), static_cast<long long>(c.kernel_size),
                static_cast<long long>(c.channels), static_cast<long long>(c.num_stages),
                static_cast<long long>(c.pool_window), static_cast<long long>(c.latent_channels),
                static_cast<long long>(c.mixer_channels), c.activation_slope, c.normalize_input ? "yes" : "no",
                h.tensor_count,
                static_cast<long long>(latent), 2.0 * static_cast<double>(c.num_samples) / static_cast<double>(latent),
                h.has_adam ? "yes" : "no", static_cast<ull>(h.adam_step), static_cast<ull>(h.file_size));
    return 0;
  }
  throw FormatError(path + ": unrecognised magic at offset 0, expected \"AEDS\" or \"AECW\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FMCW radar-altimeter interference mitigation with a convolutional autoencoder"};
  app.require_subcommand(1);

  Common gen_common;
  std::string gen_out, gen_holdout;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen-data", "Generate a (clean, dirty) dataset");
  add_common(gen, gen_common);
  gen->add_option("--out", gen_out, "Dataset file to write")->required();
  gen->add_option("--seed", gen_seed, "Master seed (overrides generation.seed)");
  gen->add_option("--holdout", gen_holdout, "Also write training.holdout_examples held-out pairs here");

  Common train_common;
  std::string train_data, train_holdout, train_out, train_resume, train_log;
  std::optional<int> train_epochs;
  std::optional<std::uint64_t> train_seed;
  bool train_quiet = false;
  auto* tr = app.add_subcommand("train", "Train the autoencoder");
  add_common(tr, train_common);
  tr->add_option("--data", train_data, "Training dataset")->required();
  tr->add_option("--holdout", train_holdout, "Held-out dataset for per-epoch evaluation");
  tr->add_option("--out-checkpoint", train_out, "Checkpoint to write (best epoch)")->required();
  tr->add_option("--epochs", train_epochs, "Epochs (overrides training.epochs)");
  tr->add_option("--seed", train_seed, "Initialization and shuffle seed (overrides training.seed)");
  tr->add_option("--resume", train_resume, "Continue from this checkpoint, including optimizer state");
  tr->add_option("--log", train_log, "Training log CSV (default <checkpoint>.log.csv)");
  tr->add_flag("--quiet", train_quiet, "No per-epoch progress on stderr");

  Common eval_common;
  std::string eval_ckpt, eval_out;
  std::optional<std::uint64_t> eval_seed;
  auto* ev = app.add_subcommand("eval", "PSLR / range-error sweep over SIR");
  add_common(ev, eval_common, "--sweep-config");
  ev->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
  ev->add_option("--out-csv", eval_out, "Sweep table")->required();
  ev->add_option("--seed", eval_seed, "Sweep seed (overrides sweep.seed)");

  Common sim_common;
  std::string sim_ckpt, sim_out;
  std::optional<std::uint64_t> sim_seed;
  bool sim_clean = false;
  auto* sm = app.add_subcommand("simulate", "Landing-trajectory simulation");
  add_common(sm, sim_common, "--sim-config");
  sm->add_option("--checkpoint", sim_ckpt, "Model checkpoint")->required();
  sm->add_option("--out-csv", sim_out, "Per-record table")->required();
  sm->add_option("--seed", sim_seed, "Simulation seed (overrides sim.seed)");
  sm->add_flag("--no-corruption", sim_clean, "Disable noise, fading, interference and clutter");

  std::string inspect_path;
  auto* in = app.add_subcommand("inspect", "Print the header of a dataset or checkpoint");
  in->add_option("--path", inspect_path, "File to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_common, gen_out, gen_seed, gen_holdout);
    if (tr->parsed())
      return cmd_train(train_common, train_data, train_holdout, train_out, train_epochs, train_seed, train_resume,
                       train_log, train_quiet);
    if (ev->parsed()) return cmd_eval(eval_common, eval_ckpt, eval_out, eval_seed);
    if (sm->parsed()) return cmd_simulate(sim_common, sim_ckpt, sim_out, sim_seed, sim_clean);
    if (in->parsed()) return cmd_inspect(inspect_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return 1;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 2;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
