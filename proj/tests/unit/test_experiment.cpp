#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "micclass/error.hpp"
#include "micclass/harness/config.hpp"
#include "micclass/harness/experiment.hpp"
#include "micclass/harness/synth.hpp"

namespace fs = std::filesystem;
using namespace micclass;

namespace {

// A deliberately tiny world; shared across tests because fitting is the slow part.
struct World {
  ExperimentConfig cfg;
  ModelBundle models;
  std::vector<Example> test;
};

const World& world() {
  static const World w = [] {
    World w;
    const fs::path root = fs::temp_directory_path() / "micclass_experiment";
    fs::remove_all(root);
    auto& c = w.cfg;
    c.out = root / "out";
    c.synth.n_devices = 3;
    c.synth.n_speakers = 4;
    c.synth.train_speakers = 2;
    c.synth.seconds_per_speaker = 4.096;
    c.synth_speech.n_speakers = 2;
    c.synth_speech.seconds_per_speaker = 8.192;
    c.gmm.mixtures = 8;
    c.gmm.max_iters = 20;
    c.dncnn_depth = 3;
    c.dncnn_width = 4;
    c.dncnn_train.epochs = 1;
    synth_device_corpus(root / "corpus", c.synth);
    synth_speech_corpus(root / "speech", c.synth_speech);
    c.manifest = root / "corpus" / "manifest.csv";
    c.speech_manifest = root / "speech" / "manifest.csv";
    const auto all = load_examples(load_manifest(c.manifest), c);
    const auto train = select_split(all, Split::kTrain);
    w.test = select_split(all, Split::kTest);
    w.models.speech = fit_speech_model(load_manifest(c.speech_manifest), c);
    w.models.svm = fit_classifier(train, w.models.speech, c);
    w.models.dsp = c.dsp;
    w.models.dncnn.emplace(25.0, fit_dncnn(train, 25.0, c, nullptr));
    return w;
  }();
  return w;
}

}  // namespace

TEST(Experiment, NoiseIsReproducibleAndIndexed) {
  const auto& w = world();
  const auto a = corrupt(w.test[0], 25, 7), b = corrupt(w.test[0], 25, 7);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(corrupt(w.test[1], 25, 7).samples, a.samples);
  EXPECT_EQ(corrupt(w.test[0], kCleanSnr, 7).samples, w.test[0].clip.samples);
  EXPECT_NE(noise_seed(1, 25, 0), noise_seed(1, 20, 0));
}

TEST(Experiment, SegmentsCarryLabels) {
  const auto& w = world();
  ASSERT_EQ(w.test.size(), 3u * 2u);  // 3 devices, 2 test speakers, one 4.096 s segment each
  for (const auto& e : w.test) EXPECT_EQ(e.split, Split::kTest);
}

TEST(Experiment, SelectionRowsFollowConfig) {
  const auto& w = world();
  ExperimentConfig c = w.cfg;
  const auto rep = run_denoiser_selection(c, w.models, w.test);
  ASSERT_EQ(rep.rows.size(), c.selection_denoisers.size());
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    EXPECT_EQ(rep.rows[i].denoiser, c.selection_denoisers[i]);
    EXPECT_TRUE(std::isfinite(rep.rows[i].psnr));
    EXPECT_GE(rep.rows[i].mca, 0.0);
    EXPECT_LE(rep.rows[i].mca, 100.0);
  }
  EXPECT_EQ(rep.n_test, w.test.size());
}

TEST(Experiment, IdentityOnCleanInput) {
  const auto& w = world();
  ExperimentConfig c = w.cfg;
  c.selection_snr = kCleanSnr;
  c.selection_denoisers = {"none"};
  const auto rep = run_denoiser_selection(c, w.models, w.test);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_TRUE(std::isinf(rep.rows[0].psnr));
  EXPECT_DOUBLE_EQ(rep.rows[0].ssim, 1.0);
  c.snr_ladder = {kCleanSnr};
  c.denoise = false;
  const auto ev = run_evaluation(c, w.models, w.test);
  EXPECT_DOUBLE_EQ(rep.rows[0].mca, ev.without_denoising[0].metrics.mca);
}

TEST(Experiment, MissingDnCnnIsModelError) {
  const auto& w = world();
  ExperimentConfig c = w.cfg;
  c.selection_snr = 30;
  EXPECT_THROW(run_denoiser_selection(c, w.models, w.test), ModelError);
  c.snr_ladder = {kCleanSnr, 30};
  EXPECT_THROW(run_evaluation(c, w.models, w.test), ModelError);
}

TEST(Experiment, EvaluationShape) {
  const auto& w = world();
  ExperimentConfig c = w.cfg;
  c.snr_ladder = {kCleanSnr, 25};
  const auto ev = run_evaluation(c, w.models, w.test);
  ASSERT_EQ(ev.without_denoising.size(), 2u);
  ASSERT_EQ(ev.with_denoising.size(), 2u);
  EXPECT_EQ(ev.without_denoising[1].model, "none");
  EXPECT_EQ(ev.with_denoising[1].model, "dncnn@25");
  EXPECT_EQ(ev.with_denoising[0].model, "dncnn@25");
}

TEST(Experiment, PackUnpackRoundTrip) {
  const auto& w = world();
  const ModelContainer c = pack_models(w.models);
  const ModelBundle b = unpack_models(c);
  EXPECT_EQ(encode_container(pack_models(b)), encode_container(c));
  EXPECT_EQ(b.dncnn.count(25.0), 1u);
  EXPECT_THROW(unpack_models(ModelContainer{}), ModelError);
}

TEST(Experiment, StftMismatchIsModelError) {
  const auto& w = world();
  ExperimentConfig c = w.cfg;
  c.stft.n_fft = 256;
  c.stft.hop = 128;
  const auto specs = spectrograms({w.test[0]}, kCleanSnr, c);
  EXPECT_THROW(channel_features(specs, w.models.speech, c), ModelError);
}
