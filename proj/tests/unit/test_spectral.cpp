#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"
#include "micclass/fft.hpp"
#include "micclass/rng.hpp"
#include "micclass/spectral.hpp"

using namespace micclass;

namespace {

AudioClip noise_clip(std::size_t n, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  AudioClip c;
  c.samples.resize(n);
  for (auto& x : c.samples) x = sigma * rng.gaussian();
  c.source_id = "noise";
  c.speaker_id = "spk";
  c.class_label = "dev";
  return c;
}

AudioClip sine(double f, std::size_t n, double amp) {
  AudioClip c;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = amp * std::sin(2 * std::numbers::pi * f * i / 16000.0);
  return c;
}

}  // namespace

TEST(Fft, MatchesDirectDft) {
  Rng rng(2);
  std::vector<double> x(16);
  for (auto& v : x) v = rng.gaussian();
  const auto X = rfft(x);
  ASSERT_EQ(X.size(), 9u);
  for (std::size_t k = 0; k < X.size(); ++k) {
    std::complex<double> s = 0;
    for (std::size_t n = 0; n < x.size(); ++n) s += x[n] * std::polar(1.0, -2 * std::numbers::pi * k * n / 16.0);
    EXPECT_NEAR(std::abs(X[k] - s), 0.0, 1e-12);
  }
  const auto back = irfft(X, 16);
  for (std::size_t n = 0; n < x.size(); ++n) EXPECT_NEAR(back[n], x[n], 1e-12);
}

TEST(LogPower, PaperShape) {
  const auto s = log_power(noise_clip(65536, 0.1, 1), StftConfig{});
  EXPECT_EQ(s.frames(), 256u);
  EXPECT_EQ(s.bins(), 256u);
  EXPECT_EQ(s.speaker_id, "spk");
  EXPECT_EQ(s.class_label, "dev");
}

TEST(LogPower, FrameAndBinCounts) {
  StftConfig cfg;
  for (std::size_t n : {512u, 513u, 767u, 768u, 1000u, 4096u, 65535u}) {
    AudioClip c;
    c.samples.assign(n, 0.01);
    const auto s = log_power(c, cfg);
    EXPECT_EQ(s.frames(), n / 256) << n;
    EXPECT_EQ(s.bins(), 256u);
    EXPECT_EQ(frame_count(n, cfg), s.frames());
  }
}

TEST(LogPower, SilenceIsFloor) {
  AudioClip c;
  c.samples.assign(4096, 0.0);
  const auto s = log_power(c, StftConfig{});
  for (double v : s.values.data()) EXPECT_EQ(v, -100.0);
}

TEST(LogPower, TooShortIsError) {
  AudioClip c;
  c.samples.assign(511, 0.1);
  EXPECT_THROW(log_power(c, StftConfig{}), DataError);
}

TEST(LogPower, SinePeakAtBinThirty) {
  const double f = 30.0 * 16000.0 / 512.0;
  const auto s = log_power(sine(f, 16384, 1.0), StftConfig{});
  std::vector<double> mean(s.bins(), 0.0);
  for (std::size_t l = 0; l < s.frames(); ++l)
    for (std::size_t b = 0; b < s.bins(); ++b) mean[b] += s.values(l, b);
  const auto arg = std::max_element(mean.begin(), mean.end()) - mean.begin();
  EXPECT_DOUBLE_EQ(s.bin_frequency(static_cast<std::size_t>(arg)), f);
  EXPECT_EQ(arg + 1, 30);  // column c holds bin c+1
  // a full-scale sinusoid at a bin center reads 0 dB in interior frames
  EXPECT_NEAR(s.values(10, 29), 0.0, 1e-9);
}

TEST(LogPower, MatchesDirectFrameDft) {
  const auto clip = noise_clip(8192, 0.2, 8);
  const StftConfig cfg;
  const auto s = log_power(clip, cfg);
  const auto w = make_window(WindowType::kHann, 512);
  double wsum = 0;
  for (double v : w) wsum += v;
  for (std::size_t l : {0u, 5u, 31u}) {
    const long start = static_cast<long>(l) * 256 - 128;
    for (std::size_t b : {0u, 17u, 255u}) {
      const std::size_t k = b + 1;
      std::complex<double> acc = 0;
      for (long i = 0; i < 512; ++i) {
        const long idx = start + i;
        const double x = (idx >= 0 && idx < 8192) ? clip.samples[idx] : 0.0;
        acc += x * w[i] * std::polar(1.0, -2 * std::numbers::pi * k * i / 512.0);
      }
      const double db = std::clamp(20 * std::log10(std::abs(acc) * 2 / wsum), -100.0, 20.0);
      EXPECT_NEAR(s.values(l, b), db, 1e-9);
    }
  }
}

TEST(LogPower, ParsevalWhiteNoise) {
  const double sigma = 0.05;
  const auto s = log_power(noise_clip(65536, sigma, 3), StftConfig{});
  const auto w = make_window(WindowType::kHann, 512);
  double wsum = 0, w2 = 0;
  for (double v : w) {
    wsum += v;
    w2 += v * v;
  }
  const double expected = sigma * sigma * w2 * 4 / (wsum * wsum);
  double mean = 0;
  std::size_t n = 0;
  for (std::size_t l = 2; l + 2 < s.frames(); ++l)
    for (std::size_t b = 0; b < s.bins(); ++b, ++n) mean += std::pow(10.0, s.values(l, b) / 10);
  mean /= n;
  EXPECT_LT(std::abs(10 * std::log10(mean / expected)), 1.0);
}

TEST(LogPower, ValuesWithinRange) {
  auto c = noise_clip(8192, 5.0, 4);  // loud enough to clip the ceiling
  c.samples[100] = 1e3;
  const auto s = log_power(c, StftConfig{});
  for (double v : s.values.data()) {
    EXPECT_GE(v, -100.0);
    EXPECT_LE(v, 20.0);
  }
}

TEST(StftConfigTest, Validation) {
  StftConfig c;
  c.hop = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = StftConfig{};
  c.hop = 1024;
  EXPECT_THROW(c.validate(), UsageError);
  c = StftConfig{};
  c.n_fft = 500;
  EXPECT_THROW(c.validate(), UsageError);
  c = StftConfig{};
  c.db_floor = 30;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Image, AffineMapAndInverse) {
  LogPowerSpectrogram s;
  s.values = Matrix(1, 4);
  s.values(0, 0) = -100;
  s.values(0, 1) = 20;
  s.values(0, 2) = -40;
  s.values(0, 3) = -73.25;
  const auto img = to_image(s);
  EXPECT_EQ(img.pixels(0, 0), 0.0);
  EXPECT_EQ(img.pixels(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(img.pixels(0, 2), 0.5);
  const auto back = from_image(img, s);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(back.values(0, j), s.values(0, j), 1e-12);
}

TEST(Image, BijectionOnRange) {
  const auto s = log_power(noise_clip(4096, 0.1, 5), StftConfig{});
  const auto back = from_image(to_image(s), s);
  for (std::size_t i = 0; i < s.values.size(); ++i)
    EXPECT_NEAR(back.values.data()[i], s.values.data()[i], 1e-12);
  ImageView img = to_image(s);
  img.pixels(0, 0) = 1.7;
  img.pixels(0, 1) = -0.2;
  const auto clamped = from_image(img, s);
  EXPECT_EQ(clamped.values(0, 0), 20.0);
  EXPECT_EQ(clamped.values(0, 1), -100.0);
}

TEST(Pipeline, FrequencyIdentityAndConstant) {
  const auto clip = noise_clip(4096, 0.1, 6);
  const StftConfig cfg;
  const auto direct = log_power(clip, cfg);
  const auto same = pipeline_frequency(clip, [](const ImageView& v) { return v; }, cfg);
  for (std::size_t i = 0; i < direct.values.size(); ++i)
    EXPECT_NEAR(same.values.data()[i], direct.values.data()[i], 1e-12);
  const auto half = pipeline_frequency(
      clip,
      [](const ImageView& v) {
        ImageView o = v;
        for (auto& p : o.pixels.data()) p = 0.5;
        return o;
      },
      cfg);
  for (double v : half.values.data()) EXPECT_DOUBLE_EQ(v, -40.0);
}

TEST(Pipeline, TimeIdentityGainZero) {
  const auto clip = noise_clip(4096, 0.01, 7);
  const StftConfig cfg;
  const auto direct = log_power(clip, cfg);
  EXPECT_EQ(pipeline_time(clip, [](const AudioClip& c) { return c; }, cfg).values, direct.values);
  const auto gain = pipeline_time(
      clip,
      [](const AudioClip& c) {
        auto o = c;
        for (auto& x : o.samples) x *= 2;
        return o;
      },
      cfg);
  for (std::size_t i = 0; i < direct.values.size(); ++i) {
    const double d = direct.values.data()[i];
    if (d > -99 && d < 13) EXPECT_NEAR(gain.values.data()[i] - d, 20 * std::log10(2.0), 1e-9);
  }
  const auto zero = pipeline_time(
      clip,
      [](const AudioClip& c) {
        auto o = c;
        for (auto& x : o.samples) x = 0;
        return o;
      },
      cfg);
  for (double v : zero.values.data()) EXPECT_EQ(v, -100.0);
}

TEST(SpectrogramFile, RoundTripBytes) {
  auto s = log_power(noise_clip(4096, 0.1, 9), StftConfig{});
  s.source_id = "a/b.wav#0";
  s.sample_rate = 16000;
  const auto bytes = encode_spectrogram(s);
  const auto back = decode_spectrogram(bytes);
  EXPECT_EQ(back.values, s.values);
  EXPECT_EQ(back.config, s.config);
  EXPECT_EQ(back.source_id, s.source_id);
  EXPECT_EQ(back.class_label, "dev");
  EXPECT_EQ(encode_spectrogram(back), bytes);

  const auto dir = std::filesystem::temp_directory_path() / "micclass_spec_test";
  save_spectrogram(dir / "x.mfsg", s);
  EXPECT_EQ(read_file_bytes(dir / "x.mfsg"), bytes);
  EXPECT_EQ(load_spectrogram(dir / "x.mfsg").values, s.values);
  std::filesystem::remove_all(dir);
}

TEST(SpectrogramFile, RejectsCorruptInput) {
  const auto s = log_power(noise_clip(2048, 0.1, 9), StftConfig{});
  auto bytes = encode_spectrogram(s);
  auto bad = bytes;
  bad[0] = 'Z';
  EXPECT_THROW(decode_spectrogram(bad), ModelError);
  bad = bytes;
  bad[4] = 99;  // version
  EXPECT_THROW(decode_spectrogram(bad), ModelError);
  bad = bytes;
  bad.push_back(0);
  EXPECT_THROW(decode_spectrogram(bad), ModelError);
  bad = bytes;
  bad.resize(bytes.size() - 3);
  EXPECT_THROW(decode_spectrogram(bad), ModelError);
}
