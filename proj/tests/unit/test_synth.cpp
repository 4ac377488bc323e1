#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "micclass/audio.hpp"
#include "micclass/harness/synth.hpp"
#include "micclass/rng.hpp"

namespace fs = std::filesystem;
using namespace micclass;

namespace {
double rms(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / x.size());
}
}  // namespace

TEST(Synth, SpeechHasRequestedLevelAndIsDeterministic) {
  Rng rng(3);
  const Voice v = make_voice(rng);
  const auto a = synth_speech(v, 16000, 16000, 0.07);
  const auto b = synth_speech(v, 16000, 16000, 0.07);
  EXPECT_EQ(a, b);
  EXPECT_NEAR(rms(a), 0.07, 1e-9);
  for (double x : a) ASSERT_TRUE(std::isfinite(x));
}

TEST(Synth, DevicesAreDistinct) {
  DeviceOptions o;
  const auto d = make_device_responses(6, 11, o);
  ASSERT_EQ(d.size(), 6u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d[i].taps.size(), static_cast<std::size_t>(o.taps));
    for (std::size_t j = i + 1; j < d.size(); ++j)
      EXPECT_LT(pearson(device_log_response(d[i].taps, 512), device_log_response(d[j].taps, 512)),
                o.max_correlation);
  }
}

TEST(Synth, LogResponseIsZeroMean) {
  const auto d = make_device_responses(2, 2);
  const auto r = device_log_response(d[0].taps, 512);
  ASSERT_EQ(r.size(), 256u);
  EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0) / r.size(), 0.0, 1e-9);
}

TEST(Synth, FirIdentity) {
  const std::vector<double> x{1, -2, 3, 0.5};
  EXPECT_EQ(fir_filter(x, {1.0}), x);
  const auto y = fir_filter(x, {0.0, 1.0});
  EXPECT_EQ(y, (std::vector<double>{0, 1, -2, 3}));
}

TEST(Synth, CorpusLayoutAndDeterminism) {
  const fs::path a = fs::temp_directory_path() / "micclass_synth_a";
  const fs::path b = fs::temp_directory_path() / "micclass_synth_b";
  fs::remove_all(a);
  fs::remove_all(b);
  SynthCorpusOptions o;
  o.n_devices = 5;
  o.n_speakers = 8;
  o.train_speakers = 6;
  o.seconds_per_speaker = 0.5;
  const auto ca = synth_device_corpus(a, o);
  const auto cb = synth_device_corpus(b, o);
  ASSERT_EQ(ca.manifest.entries.size(), 40u);
  EXPECT_EQ(ca.manifest.classes().size(), 5u);
  EXPECT_EQ(ca.manifest.speakers(Split::kTrain).size(), 6u);
  EXPECT_EQ(ca.manifest.speakers(Split::kTest).size(), 2u);
  for (const auto& e : ca.manifest.entries) {
    const auto wa = load_wav(a / e.path), wb = load_wav(b / e.path);
    ASSERT_EQ(wa.samples, wb.samples) << e.path;
  }
  const auto dev = load_device_responses(a / "devices.csv");
  ASSERT_EQ(dev.size(), ca.devices.size());
  EXPECT_EQ(dev[0].taps, ca.devices[0].taps);
}
