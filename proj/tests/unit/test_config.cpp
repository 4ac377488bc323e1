#include <gtest/gtest.h>

#include <cmath>

#include "micclass/error.hpp"
#include "micclass/harness/config.hpp"

using namespace micclass;

TEST(Config, DefaultsValidate) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.validate());
  ASSERT_EQ(c.snr_ladder.size(), 5u);
  EXPECT_TRUE(std::isinf(c.snr_ladder[0]));
}

TEST(Config, EncodeParseRoundTrip) {
  ExperimentConfig c;
  c.seed = 99;
  c.jobs = 3;
  c.stft.n_fft = 1024;
  c.dsp.nlm.h = 0.37;
  c.snr_ladder = {kCleanSnr, 12.5};
  c.selection_denoisers = {"tv", "dncnn"};
  const std::string text = encode_config(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.jobs, 3);
  EXPECT_EQ(back.stft.n_fft, 1024);
  EXPECT_EQ(back.dsp.nlm.h, 0.37);
  EXPECT_EQ(back.snr_ladder.size(), 2u);
  EXPECT_EQ(back.snr_ladder[1], 12.5);
  EXPECT_EQ(back.selection_denoisers, c.selection_denoisers);
  EXPECT_EQ(encode_config(back), text);
}

TEST(Config, CommentsAndQuotes) {
  const auto c = parse_config("# header\nseed = 5  # trailing\nout = \"a # b\"\n", "/base");
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.out, std::filesystem::path("/base/a # b"));
}

TEST(Config, UnknownKeyIsUsageError) {
  EXPECT_THROW(parse_config("stft.nfft = 512\n"), UsageError);
  EXPECT_THROW(parse_config("seed\n"), UsageError);
  EXPECT_THROW(parse_config("seed = twelve\n"), UsageError);
}

TEST(Config, UnknownDenoiserRejected) {
  EXPECT_THROW(parse_config("selection.denoisers = tv,median\n"), UsageError);
}

TEST(Config, SnrLadder) {
  const auto l = parse_snr_ladder("inf, 35, 20");
  ASSERT_EQ(l.size(), 3u);
  EXPECT_TRUE(std::isinf(l[0]));
  EXPECT_EQ(parse_snr_ladder("clean-only").size(), 1u);
  EXPECT_EQ(format_snr(kCleanSnr), "inf");
  EXPECT_EQ(format_snr(22.5), "22.5");
  EXPECT_THROW(parse_snr_ladder("35,abc"), UsageError);
}
