// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aec/altsim.hpp"
#include "aec/autoencoder.hpp"
#include "aec/channel.hpp"
#include "aec/dataset.hpp"
#include "aec/fft.hpp"
#include "aec/metrics.hpp"
#include "aec/parallel.hpp"
#include "aec/rangeproc.hpp"
#include "aec/waveform.hpp"
#include "oracles.hpp"

using namespace aec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Report {
  int failures = 0;
  void line(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

void criterion1(Report& r) {
  const auto t0 = Clock::now();
  ChirpParams c;
  c.num_samples = 40000;
  const auto ref = generate_cwlfm(c);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, c.max_training_delay_s());
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double tau = u(rng);
    const auto est = estimate_range(stretch_process(apply_delay(ref, tau), ref, c));
    worst = std::max(worst, std::abs(est.range_m - range_for_delay(tau)));
  }
  const double secs = seconds_since(t0);
  r.line(1, worst <= c.range_bin_m() && secs < 30.0,
         fmt("max |error| %.3f m (bin %.3f m) over 100 delays, %.1f s", worst, c.range_bin_m(), secs));
}

// ---------------------------------------------------------------------------

double rel(const nn::Tensor<double>& a, const nn::Tensor<double>& b) { return test::relative_error(a, b); }

void criterion2(Report& r) {
  using nn::Tensor;
  using test::dot;
  using test::numeric_gradient;
  using test::random_params;
  using test::random_tensor;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> small(1, 4), len(5, 24), ker(1, 9);
  double worst = 0.0;
  const double eps = 1e-6;
  auto track = [&](double e) { worst = std::max(worst, e); };

  for (int trial = 0; trial < 4; ++trial) {
    const nn::Index B = small(rng), Ci = small(rng), Co = small(rng), L = len(rng), K = ker(rng);
    for (const bool transposed : {false, true}) {
      auto params = random_params<double>(transposed ? nn::Shape{Ci, Co, K} : nn::Shape{Co, Ci, K}, {Co}, rng);
      auto x = random_tensor<double>({B, Ci, L}, rng);
      const auto R = random_tensor<double>({B, Co, L}, rng);
      auto loss = [&] { return dot(transposed ? nn::conv1d_transposed(x, params) : nn::conv1d(x, params), R); };
      Tensor<double> dx;
      nn::LayerParams<double> g;
      nn::ConvCache<double> cache;
      if (transposed) {
        nn::Conv1dTransposed<double> layer(params, L);
        layer.forward(x, &cache);
        dx = layer.backward(R, cache);
        g = layer.params;
      } else {
        nn::Conv1d<double> layer(params, L);
        layer.forward(x, &cache);
        dx = layer.backward(R, cache);
        g = layer.params;
      }
      track(rel(dx, numeric_gradient<double>(loss, x, eps)));
      track(rel(g.grad_weight, numeric_gradient<double>(loss, params.weight, eps)));
      track(rel(g.grad_bias, numeric_gradient<double>(loss, params.bias, eps)));
    }

    const nn::Index M = small(rng);
    nn::IQMixer<double> mixer(M);
    mixer.params = random_params<double>({M, 1, 2, 2}, {M}, rng);
    auto iq = random_tensor<double>({B, 2, L}, rng);
    const auto Rm = random_tensor<double>({B, M, L}, rng);
    auto mix_loss = [&] { return dot(mixer.forward(iq), Rm); };
    auto ml = mixer;
    ml.params.zero_grad();
    track(rel(ml.backward(iq, Rm), numeric_gradient<double>(mix_loss, iq, eps)));
    track(rel(ml.params.grad_weight, numeric_gradient<double>(mix_loss, mixer.params.weight, eps)));
    track(rel(ml.params.grad_bias, numeric_gradient<double>(mix_loss, mixer.params.bias, eps)));

    nn::IQUnmixer<double> unmixer(M);
    unmixer.params = random_params<double>({M, 1, 2, 2}, {1}, rng);
    auto h = random_tensor<double>({B, M, L}, rng);
    const auto Ru = random_tensor<double>({B, 2, L}, rng);
    auto unmix_loss = [&] { return dot(unmixer.forward(h), Ru); };
    auto ul = unmixer;
    ul.params.zero_grad();
    track(rel(ul.backward(h, Ru), numeric_gradient<double>(unmix_loss, h, eps)));
    track(rel(ul.params.grad_weight, numeric_gradient<double>(unmix_loss, unmixer.params.weight, eps)));
    track(rel(ul.params.grad_bias, numeric_gradient<double>(unmix_loss, unmixer.params.bias, eps)));

    auto p = random_tensor<double>({B, Ci, 2 * L}, rng);
    const auto Rp = random_tensor<double>({B, Ci, 2 * L}, rng);
    const auto idx = nn::maxpool(p, 2).indices;
    auto pool_loss = [&] { return dot(nn::max_unpool(nn::maxpool(p, 2).values, idx), Rp); };
    track(rel(nn::maxpool_backward(nn::max_unpool_backward(Rp, idx), idx),
              numeric_gradient<double>(pool_loss, p, eps)));

    auto a = random_tensor<double>({B, 2, L}, rng);
    const auto target = random_tensor<double>({B, 2, L}, rng);
    auto act_loss = [&] { return nn::mse_loss(nn::leaky_relu(a, 0.2), target).loss; };
    const auto lr = nn::mse_loss(nn::leaky_relu(a, 0.2), target);
    track(rel(nn::leaky_relu_backward(a, lr.grad, 0.2), numeric_gradient<double>(act_loss, a, eps)));
  }

  double worst_adjoint = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const nn::Index B = small(rng), Ci = small(rng), Co = small(rng), L = 40 + len(rng) * 20, K = 1 + ker(rng) * 10;
    auto p = random_params<float>({Co, Ci, K}, {Co}, rng);
    p.bias.fill(0.0f);
    nn::LayerParams<float> pt({Co, Ci, K}, {Ci});
    pt.weight = p.weight;
    auto x = random_tensor<float>({B, Ci, L}, rng);
    auto y = random_tensor<float>({B, Co, L}, rng);
    const double lhs = dot(nn::conv1d(x, p), y), rhs = dot(x, nn::conv1d_transposed(y, pt));
    worst_adjoint = std::max(worst_adjoint, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  r.line(2, worst < 1e-3 && worst_adjoint < 1e-4,
         fmt("max gradient rel. error %.2e, max adjoint mismatch %.2e", worst, worst_adjoint));
}

// ---------------------------------------------------------------------------

void criterion3(Report& r) {
  bool ok = true;
  std::string detail;
  for (const std::int64_t n : {std::int64_t{1000}, std::int64_t{40000}}) {
    ModelConfig cfg;
    cfg.num_samples = n;
    cfg.kernel_size = n >= 40000 ? 200 : 300;
    const Autoencoder<float> model(cfg, 1);
    const std::vector<std::int64_t> expected{n, n, n / 2, n / 4, n / 8, n / 4, n / 2, n, n};
    ok = ok && model.layer_lengths() == expected && model.compression_ratio() == 16.0;
    std::mt19937_64 rng(3);
    const auto t0 = Clock::now();
    const auto y = model.forward(test::random_tensor<float>({1, 2, n}, rng));
    ok = ok && y.shape() == nn::Shape{1, 2, n} && y.array().isFinite().all();
    detail += fmt("N=%lld lengths %lld..%lld..%lld ratio %.0f:1 forward %.2f s; ", static_cast<long long>(n),
                  static_cast<long long>(n), static_cast<long long>(n / 8), static_cast<long long>(n),
                  model.compression_ratio(), seconds_since(t0));
  }
  r.line(3, ok, detail);
}

// ---------------------------------------------------------------------------

GenerationConfig desk_generation(std::int64_t count, std::uint64_t seed) {
  GenerationConfig g;
  g.chirp.num_samples = 1000;
  g.num_examples = count;
  g.interference_mode = InterferenceMode::tones;
  g.tone_sir_db_range = {-20, 20};
  g.snr_db_range = {0, 0};
  g.master_seed = seed;
  return g;
}

Autoencoder<float> criterion4(Report& r, const fs::path& work, int epochs, bool reuse) {
  const auto t0 = Clock::now();
  const auto train_cfg = desk_generation(2000, 11);
  const auto hold_cfg = desk_generation(200, 12);
  generate_dataset(train_cfg, work / "c4_train.aeds");
  generate_dataset(hold_cfg, work / "c4_holdout.aeds");
  const DatasetReader train_data(work / "c4_train.aeds"), holdout(work / "c4_holdout.aeds");

  ModelConfig mc;
  mc.num_samples = 1000;
  mc.kernel_size = 300;
  const fs::path ckpt = work / "c4_model.aecw";
  Autoencoder<float> model;
  if (reuse && fs::exists(ckpt)) {
    model = load_checkpoint(ckpt).model;
    std::fprintf(stderr, "reusing %s\n", ckpt.c_str());
  } else {
    model = Autoencoder<float>(mc, 1);
    nn::AdamState<float> adam;
    TrainOptions opt;
    opt.epochs = epochs;
    opt.batch_size = 16;
    opt.seed = 1;
    opt.adam.learning_rate = 1e-4;
    opt.checkpoint_path = ckpt;
    opt.verbose = true;
    train(model, train_data, adam, opt, &holdout);
    model = load_checkpoint(ckpt).model;
  }
  const double train_secs = seconds_since(t0);

  const auto score = evaluate_reconstruction(model, holdout);
  const double ratio = score.model_mse / score.dirty_mse;

  // Held-out draws re-synthesized with every tone at -10 dB SIR.
  std::vector<ExamplePair> pairs;
  std::vector<IQSignal> dirty;
  for (std::int64_t i = 0; i < holdout.size(); ++i) {
    ExampleMeta m = draw_example_meta(hold_cfg, i);
    for (auto& t : m.tones) t.sir_db = -10.0;
    pairs.push_back(synthesize_example(hold_cfg.chirp, hold_cfg.fading, m));
    dirty.push_back(pairs.back().dirty);
  }
  const auto out = denoise(model, dirty);
  const auto ref = generate_cwlfm(hold_cfg.chirp);
  double gain = 0.0, se_in = 0.0, se_out = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double truth = range_for_delay(pairs[i].meta.delay_s);
    const auto p_in = stretch_process(dirty[i], ref, hold_cfg.chirp);
    const auto p_out = stretch_process(out[i], ref, hold_cfg.chirp);
    const auto e_in = estimate_range(p_in), e_out = estimate_range(p_out);
    gain += profile_pslr(p_out, e_out) - profile_pslr(p_in, e_in);
    se_in += (e_in.range_m - truth) * (e_in.range_m - truth);
    se_out += (e_out.range_m - truth) * (e_out.range_m - truth);
  }
  const double n = static_cast<double>(pairs.size());
  gain /= n;
  const double rmse_in = std::sqrt(se_in / n), rmse_out = std::sqrt(se_out / n);
  const double total = seconds_since(t0);
  r.line(4, ratio < 0.5 && gain >= 5.0 && rmse_out < rmse_in && total < 7200.0,
         fmt("(a) MSE ratio %.4f (model %.4g / dirty %.4g); (b) PSLR gain %.2f dB at -10 dB; "
             "(c) RMSE %.2f m with AEC vs %.2f m without; %.0f s (training %.0f s)",
             ratio, score.model_mse, score.dirty_mse, gain, rmse_out, rmse_in, total, train_secs));
  return model;
}

// ---------------------------------------------------------------------------

void criterion5(Report& r, const Autoencoder<float>& model, const fs::path& work) {
  EvalSweepConfig cfg;
  cfg.chirp.num_samples = 1000;
  const auto rows = run_sweep(model, cfg);
  write_sweep_csv(work / "c5_sweep.csv", rows);
  const double limit = 10.0 * cfg.chirp.range_bin_m();
  const auto t_in = threshold_sir(rows, false, limit);
  const auto t_out = threshold_sir(rows, true, limit);
  const bool pass = t_in.has_value() && (!t_out.has_value() || *t_out < *t_in);
  auto show = [](const std::optional<double>& t) { return t ? fmt("%g dB", *t) : std::string("not reached"); };
  r.line(5, pass,
         fmt("RMSE > 10 bins first at %s without AEC, %s with AEC (grid %g..%g dB, %d trials)", show(t_in).c_str(),
             show(t_out).c_str(), cfg.sir_grid_db.front(), cfg.sir_grid_db.back(), cfg.num_trials));
}

// ---------------------------------------------------------------------------

void criterion6(Report& r, const Autoencoder<float>& model, const fs::path& work) {
  SimConfig cfg;
  cfg.chirp.num_samples = 1000;
  const auto dirty = run_landing_sim(model, cfg);
  write_sim_csv(work / "c6_sim.csv", dirty);
  const auto clean = run_landing_sim(model, cfg.without_corruption());
  write_sim_csv(work / "c6_sim_clean.csv", clean);
  const auto& d = dirty.summary;
  const auto& c = clean.summary;
  const double need = 0.99 * static_cast<double>(c.records);
  const bool pass = d.false_reports_aec < d.false_reports_no_aec && static_cast<double>(c.within_bin_no_aec) >= need &&
                    static_cast<double>(c.within_bin_aec) >= need;
  r.line(6, pass,
         fmt("false reports %d with AEC vs %d without over %lld records; clean within 1 bin: %lld / %lld (no AEC), "
             "%lld / %lld (AEC)",
             d.false_reports_aec, d.false_reports_no_aec, static_cast<long long>(d.records),
             static_cast<long long>(c.within_bin_no_aec), static_cast<long long>(c.records),
             static_cast<long long>(c.within_bin_aec), static_cast<long long>(c.records)));
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(AECALT_PATH) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion7(Report& r, const fs::path& work) {
  const fs::path dir = work / "c7";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "cli.log";
  const std::string cfg =
      " --set chirp.num_samples=256 --set generation.num_examples=64 --set training.holdout_examples=16"
      " --set model.kernel_size=31 --set model.channels=8 --set model.latent_channels=8"
      " --set sweep.num_trials=5 --set sim.duration_s=20";
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  std::vector<std::string> mismatches;
  bool commands_ok = true;

  for (const char* run : {"1", "2"}) {
    const std::string s = run;
    commands_ok &= run_cli("gen-data --seed 5 --out " + p("data" + s + ".aeds") + " --holdout " + p("hold" + s + ".aeds") + cfg, log) == 0;
    commands_ok &= run_cli("train --threads 1 --quiet --epochs 2 --seed 3 --data " + p("data1.aeds") + " --holdout " +
                               p("hold1.aeds") + " --out-checkpoint " + p("model" + s + ".aecw") + cfg,
                           log) == 0;
    commands_ok &= run_cli("eval --seed 4 --checkpoint " + p("model1.aecw") + " --out-csv " + p("sweep" + s + ".csv") + cfg, log) == 0;
    commands_ok &= run_cli("simulate --seed 6 --checkpoint " + p("model1.aecw") + " --out-csv " + p("sim" + s + ".csv") + cfg, log) == 0;
  }
  for (const char* f : {"data%s.aeds", "data%s.aeds.meta", "hold%s.aeds", "model%s.aecw", "model%s.aecw.log.csv",
                        "sweep%s.csv", "sim%s.csv", "sim%s.csv.summary.txt"}) {
    const std::string a = dir / fmt(f, "1"), b = dir / fmt(f, "2");
    if (!fs::exists(a) || slurp(a) != slurp(b)) mismatches.push_back(fmt(f, "N"));
  }

  // Round trips through the readers and writers.
  const DatasetReader reader(dir / "data1.aeds");
  std::vector<ExamplePair> pairs;
  for (std::int64_t i = 0; i < reader.size(); ++i) pairs.push_back(reader.read(i));
  write_dataset(dir / "rewritten.aeds", pairs);
  if (slurp(dir / "rewritten.aeds") != slurp(dir / "data1.aeds")) mismatches.push_back("dataset round trip");
  const auto ck = load_checkpoint(dir / "model1.aecw");
  save_checkpoint(dir / "resaved.aecw", ck.model, ck.adam ? &*ck.adam : nullptr);
  if (slurp(dir / "resaved.aecw") != slurp(dir / "model1.aecw")) mismatches.push_back("checkpoint round trip");

  std::string detail = commands_ok ? "all commands succeeded; " : "a command failed (see c7/cli.log); ";
  if (mismatches.empty()) {
    detail += "gen-data, train, eval, simulate outputs bit-identical across runs; dataset and checkpoint round-trip";
  } else {
    detail += "differences:";
    for (const auto& m : mismatches) detail += " " + m;
  }
  r.line(7, commands_ok && mismatches.empty(), detail);
}

// ---------------------------------------------------------------------------

void criterion8(Report& r) {
  ChirpParams c;
  c.num_samples = 40000;
  const FadingParams fading;
  const double fs_hz = c.sample_rate_hz;
  double worst_std = 0.0, widest = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Eigen::ArrayXd g = fading_envelope(c.num_samples, fs_hz, fading, c.bandwidth_hz, seed);
    const double sd = std::sqrt((g - g.mean()).square().mean());
    worst_std = std::max(worst_std, std::abs(sd - 0.3));
    const Eigen::ArrayXd power = fft(g.cast<std::complex<double>>()).abs2();
    const double floor = 1e-12 * power.maxCoeff();
    for (Eigen::Index m = 0; m < power.size(); ++m)
      if (power[m] > floor) widest = std::max(widest, std::abs(bin_frequency(m, power.size(), fs_hz)));
  }

  const auto echo = apply_delay(generate_cwlfm(c), 4e-6);
  double worst_snr = 0.0;
  for (const double target : {-25.0, -10.0, 0.0, 10.0, 30.0}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto noisy = add_awgn(echo, NoiseParams{target}, seed);
      const double noise = (to_double(noisy) - to_double(echo)).abs2().mean();
      const double measured = 10.0 * std::log10(echo.power() / noise);
      worst_snr = std::max(worst_snr, std::abs(measured - target));
    }
  }
  r.line(8, worst_std <= 0.05 && widest <= 0.1 * c.bandwidth_hz && worst_snr <= 0.2,
         fmt("envelope std within %.4f of 0.3; highest envelope frequency %.4g Hz (limit %.4g Hz); "
             "SNR error up to %.3f dB over -25..30 dB at N=40000",
             worst_std, widest, 0.1 * c.bandwidth_hz, worst_snr));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance run"};
  std::string workdir = "acceptance_work";
  int epochs = 20;
  bool reuse = false;
  int threads = 0;
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--epochs", epochs, "Training epochs for the desk-scale model");
  app.add_flag("--reuse-model", reuse, "Skip training when the desk-scale checkpoint already exists");
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)");
  CLI11_PARSE(app, argc, argv);
  set_thread_limit(threads);

  const fs::path work(workdir);
  fs::create_directories(work);
  Report report;
  const auto t0 = Clock::now();
  try {
    criterion1(report);
    criterion2(report);
    criterion3(report);
    const auto model = criterion4(report, work, epochs, reuse);
    criterion5(report, model, work);
    criterion6(report, model, work);
    criterion7(report, work);
    criterion8(report);
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 8 criteria failed, %.0f s total\n", report.failures, seconds_since(t0));
  return report.failures == 0 ? 0 : 1;
}
