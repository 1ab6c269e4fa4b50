#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "aec/dataset.hpp"
#include "aec/errors.hpp"
#include "aec/parallel.hpp"

using namespace aec;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path dir = fs::temp_directory_path() / (std::string("aec_dataset_") + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GenerationConfig small_config(std::int64_t count = 24) {
  GenerationConfig g;
  g.chirp.num_samples = 256;
  g.num_examples = count;
  g.master_seed = 77;
  return g;
}

}  // namespace

TEST(Generation, SameConfigByteIdentical) {
  const auto dir = temp_dir();
  const auto cfg = small_config();
  generate_dataset(cfg, dir / "a.aeds");
  generate_dataset(cfg, dir / "b.aeds");
  EXPECT_EQ(slurp(dir / "a.aeds"), slurp(dir / "b.aeds"));
  EXPECT_EQ(slurp(sidecar_path(dir / "a.aeds")), slurp(sidecar_path(dir / "b.aeds")));
  auto other = cfg;
  other.master_seed = 78;
  generate_dataset(other, dir / "c.aeds");
  EXPECT_NE(slurp(dir / "a.aeds"), slurp(dir / "c.aeds"));
}

TEST(Generation, IndependentOfThreadCount) {
  const auto dir = temp_dir();
  const auto cfg = small_config(40);
  set_thread_limit(1);
  generate_dataset(cfg, dir / "one.aeds");
  set_thread_limit(4);
  generate_dataset(cfg, dir / "four.aeds");
  set_thread_limit(0);
  EXPECT_EQ(slurp(dir / "one.aeds"), slurp(dir / "four.aeds"));
}

TEST(Generation, NoCorruptionGivesCleanDirty) {
  auto cfg = small_config(5);
  cfg.interference_mode = InterferenceMode::none;
  cfg.snr_db_range = {200, 200};
  for (std::int64_t i = 0; i < cfg.num_examples; ++i) {
    const auto pair = generate_example(cfg, i);
    const double err = (to_double(pair.dirty) - to_double(pair.clean)).matrix().norm() /
                       to_double(pair.clean).matrix().norm();
    EXPECT_LT(err, 1e-3);
  }
}

TEST(Generation, CleanIsFadedDelayedChirp) {
  const auto cfg = small_config(3);
  for (std::int64_t i = 0; i < 3; ++i) {
    const auto pair = generate_example(cfg, i);
    const auto delayed = apply_delay(generate_cwlfm(cfg.chirp), pair.meta.delay_s);
    const auto expected = apply_amplitude_fading(delayed, cfg.fading, cfg.chirp.bandwidth_hz,
                                                 derive_seed(pair.meta.seed, 1));
    EXPECT_TRUE((pair.clean.samples == expected.samples).all());
  }
  auto unfaded = cfg;
  unfaded.faded_label = false;
  const auto pair = generate_example(unfaded, 0);
  const auto delayed = apply_delay(generate_cwlfm(cfg.chirp), pair.meta.delay_s);
  EXPECT_TRUE((pair.clean.samples == delayed.samples).all());
}

TEST(Generation, PaperScaleFileSize) {
  EXPECT_EQ(dataset_file_size(10000, 1000), 160000000u + kDatasetHeaderBytes);
  const auto dir = temp_dir();
  const auto cfg = small_config(7);
  generate_dataset(cfg, dir / "d.aeds");
  EXPECT_EQ(fs::file_size(dir / "d.aeds"), dataset_file_size(7, 256));
}

TEST(Generation, InvalidConfigLeavesNothing) {
  const auto dir = temp_dir();
  auto cfg = small_config();
  cfg.snr_db_range = {10, -10};
  EXPECT_THROW(generate_dataset(cfg, dir / "bad.aeds"), ConfigError);
  EXPECT_TRUE(fs::is_empty(dir));
  EXPECT_THROW(generate_dataset(small_config(), dir / "missing" / "x.aeds"), IoError);
  EXPECT_FALSE(fs::exists(dir / "missing"));
}

TEST(Reader, RoundTripExact) {
  const auto dir = temp_dir();
  const auto cfg = small_config(6);
  generate_dataset(cfg, dir / "r.aeds");
  DatasetReader reader(dir / "r.aeds");
  ASSERT_EQ(reader.size(), 6);
  EXPECT_EQ(reader.num_samples(), 256);
  EXPECT_EQ(reader.sample_rate_hz(), 30e6);
  for (std::int64_t i = 0; i < 6; ++i) {
    const auto stored = reader.read(i);
    const auto fresh = generate_example(cfg, i);
    EXPECT_TRUE((stored.clean.samples == fresh.clean.samples).all());
    EXPECT_TRUE((stored.dirty.samples == fresh.dirty.samples).all());
    EXPECT_EQ(stored.meta.seed, fresh.meta.seed);
    EXPECT_EQ(stored.meta.delay_s, fresh.meta.delay_s);
  }
}

TEST(Reader, WrongMagic) {
  const auto dir = temp_dir();
  generate_dataset(small_config(2), dir / "m.aeds");
  {
    std::fstream f(dir / "m.aeds", std::ios::binary | std::ios::in | std::ios::out);
    f.write("XXXX", 4);
  }
  try {
    DatasetReader reader(dir / "m.aeds");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("AEDS"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos);
  }
}

TEST(Reader, BadVersionReportsOffset) {
  const auto dir = temp_dir();
  generate_dataset(small_config(2), dir / "v.aeds");
  {
    std::fstream f(dir / "v.aeds", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    const std::uint32_t v = 99;
    f.write(reinterpret_cast<const char*>(&v), 4);
  }
  try {
    read_dataset_header(dir / "v.aeds");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset 4"), std::string::npos);
  }
}

TEST(Reader, TruncatedPayload) {
  const auto dir = temp_dir();
  generate_dataset(small_config(3), dir / "t.aeds");
  fs::resize_file(dir / "t.aeds", fs::file_size(dir / "t.aeds") - 10);
  EXPECT_THROW(DatasetReader(dir / "t.aeds"), SizeMismatchError);
}

TEST(Reader, IndexOutOfRange) {
  const auto dir = temp_dir();
  generate_dataset(small_config(4), dir / "i.aeds");
  DatasetReader reader(dir / "i.aeds");
  EXPECT_THROW(reader.read(4), OutOfRangeError);
  EXPECT_THROW(reader.read(-1), OutOfRangeError);
  EXPECT_NO_THROW(reader.read(3));
}

TEST(Reader, MissingFile) { EXPECT_THROW(DatasetReader("/nonexistent/file.aeds"), IoError); }

TEST(Batches, WholeDatasetInOneBatch) {
  const auto dir = temp_dir();
  generate_dataset(small_config(10), dir / "b.aeds");
  DatasetReader reader(dir / "b.aeds");
  auto it = batch_iterator(reader, 10, std::nullopt);
  Batch b;
  ASSERT_TRUE(it.next(b));
  EXPECT_EQ(b.dirty.shape(), (nn::Shape{10, 2, 256}));
  EXPECT_EQ(b.clean.shape(), (nn::Shape{10, 2, 256}));
  EXPECT_FALSE(it.next(b));
  const auto pair = reader.read(3);
  for (Eigen::Index i = 0; i < 256; ++i) {
    EXPECT_EQ(b.dirty(3, 0, i), pair.dirty.samples[i].real());
    EXPECT_EQ(b.dirty(3, 1, i), pair.dirty.samples[i].imag());
    EXPECT_EQ(b.clean(3, 0, i), pair.clean.samples[i].real());
  }
}

TEST(Batches, ShuffleDeterministicAndComplete) {
  const auto dir = temp_dir();
  generate_dataset(small_config(23), dir / "s.aeds");
  DatasetReader reader(dir / "s.aeds");
  auto a = batch_iterator(reader, 5, 123);
  auto b = batch_iterator(reader, 5, 123);
  auto c = batch_iterator(reader, 5, 124);
  EXPECT_EQ(a.order(), b.order());
  EXPECT_NE(a.order(), c.order());
  EXPECT_EQ(a.num_batches(), 5);

  Batch batch;
  std::int64_t total = 0;
  std::vector<std::int64_t> sizes;
  std::set<std::int64_t> seen;
  while (a.next(batch)) {
    total += batch.dirty.dim(0);
    sizes.push_back(batch.dirty.dim(0));
    seen.insert(batch.indices.begin(), batch.indices.end());
  }
  EXPECT_EQ(total, 23);
  EXPECT_EQ(sizes.back(), 3);
  EXPECT_EQ(seen.size(), 23u);
}

TEST(Batches, RejectsZeroBatch) {
  const auto dir = temp_dir();
  generate_dataset(small_config(2), dir / "z.aeds");
  DatasetReader reader(dir / "z.aeds");
  EXPECT_THROW(batch_iterator(reader, 0, std::nullopt), ArgumentError);
}

TEST(Metadata, SidecarWithinConfiguredRanges) {
  const auto dir = temp_dir();
  auto cfg = small_config(300);
  generate_dataset(cfg, dir / "meta.aeds");
  DatasetReader reader(dir / "meta.aeds");
  ASSERT_EQ(reader.meta().size(), 300u);
  const double T = cfg.chirp.duration_s();
  const double B = cfg.chirp.bandwidth_hz;
  for (const auto& m : reader.meta()) {
    EXPECT_GE(m.delay_s, 0.0);
    EXPECT_LE(m.delay_s, 0.01 * T);
    ASSERT_TRUE(m.snr_db.has_value());
    EXPECT_TRUE(cfg.snr_db_range.contains(*m.snr_db));
    const bool want_tones = m.kind == InterferenceKind::tones || m.kind == InterferenceKind::both;
    const bool want_qpsk = m.kind == InterferenceKind::qpsk || m.kind == InterferenceKind::both;
    EXPECT_EQ(!m.tones.empty(), want_tones);
    EXPECT_EQ(m.qpsk.has_value(), want_qpsk);
    if (want_tones) {
      EXPECT_GE(static_cast<std::int64_t>(m.tones.size()), cfg.num_tones_range[0]);
      EXPECT_LE(static_cast<std::int64_t>(m.tones.size()), cfg.num_tones_range[1]);
    }
    for (const auto& t : m.tones) {
      EXPECT_TRUE(cfg.tone_sir_db_range.contains(t.sir_db));
      EXPECT_LE(std::abs(t.frequency_hz), B / 2);
    }
    if (m.qpsk) {
      EXPECT_TRUE(cfg.qpsk_sir_db_range.contains(m.qpsk->sir_db));
      EXPECT_LE(m.qpsk->start_frac + m.qpsk->duration_frac, 1.0 + 1e-12);
      EXPECT_LE(std::abs(m.qpsk->center_hz) + m.qpsk->bandwidth_hz / 2, B / 2 + 1e-6);
    }
  }
}

TEST(Metadata, LineRoundTrip) {
  const auto cfg = small_config();
  for (std::int64_t i = 0; i < 20; ++i) {
    const auto m = draw_example_meta(cfg, i);
    const auto back = parse_meta_line(format_meta_line(m));
    EXPECT_EQ(format_meta_line(back), format_meta_line(m));
    EXPECT_EQ(back.delay_s, m.delay_s);
    EXPECT_EQ(back.seed, m.seed);
  }
  EXPECT_THROW(parse_meta_line("index=0 bogus=1"), FormatError);
}

TEST(Metadata, DelayDistributionUniform) {
  auto cfg = small_config(2000);
  const double T = cfg.chirp.duration_s();
  std::vector<double> u;
  for (std::int64_t i = 0; i < cfg.num_examples; ++i) u.push_back(draw_example_meta(cfg, i).delay_s / (0.01 * T));
  std::sort(u.begin(), u.end());
  // One-sample Kolmogorov-Smirnov statistic against U(0, 1).
  double d = 0.0;
  const double n = static_cast<double>(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    d = std::max({d, (static_cast<double>(i) + 1) / n - u[i], u[i] - static_cast<double>(i) / n});
  EXPECT_LT(d, 0.05);
}

TEST(Metadata, MixtureRoughlyEqualThirds) {
  auto cfg = small_config(3000);
  int counts[4] = {};
  for (std::int64_t i = 0; i < cfg.num_examples; ++i) ++counts[static_cast<int>(draw_example_meta(cfg, i).kind)];
  EXPECT_EQ(counts[static_cast<int>(InterferenceKind::none)], 0);
  for (const auto k : {InterferenceKind::tones, InterferenceKind::qpsk, InterferenceKind::both})
    EXPECT_NEAR(counts[static_cast<int>(k)] / 3000.0, 1.0 / 3.0, 0.04);
}

TEST(Config, RejectsBadRanges) {
  auto cfg = small_config();
  cfg.num_examples = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.tone_sir_db_range = {5, -5};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.num_tones_range = {3, 1};
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Tensors, SignalRoundTrip) {
  const auto pair = generate_example(small_config(), 0);
  const std::vector<IQSignal> sigs{pair.clean, pair.dirty};
  const auto t = to_tensor(sigs);
  EXPECT_EQ(t.shape(), (nn::Shape{2, 2, 256}));
  EXPECT_TRUE((read_signal(t, 1, 30e6).samples == pair.dirty.samples).all());
}
