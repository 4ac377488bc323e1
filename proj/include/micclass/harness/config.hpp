#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "micclass/channel.hpp"
#include "micclass/cnn.hpp"
#include "micclass/container.hpp"
#include "micclass/features.hpp"
#include "micclass/harness/synth.hpp"
#include "micclass/spectral.hpp"
#include "micclass/speech_model.hpp"
#include "micclass/svm.hpp"

namespace micclass {

inline constexpr double kCleanSnr = std::numeric_limits<double>::infinity();

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::filesystem::path out = "results";
  std::filesystem::path manifest;         // device corpus
  std::filesystem::path speech_manifest;  // flat-channel speech for the GMM
  std::string split_rule = "fraction:0.7";  // used by ingest

  int sample_rate = 16000;
  double segment_seconds = 4.096;

  StftConfig stft;
  MfccConfig mfcc;
  GmmFitOptions gmm;
  AvgSpectrumOptions avg;
  ChannelOptions channel;
  SvmTrainOptions svm;
  DenoiserParams dsp;

  int dncnn_depth = 7;
  int dncnn_width = 16;
  TrainConfig dncnn_train;

  std::vector<double> snr_ladder{kCleanSnr, 35, 30, 25, 20};
  double selection_snr = 25;
  std::vector<std::string> selection_denoisers{"tv", "nlm", "bilateral", "wavelet", "dncnn"};
  bool denoise = true;

  SynthCorpusOptions synth;
  SpeechCorpusOptions synth_speech;

  ExperimentConfig();
  void validate() const;
};

// `key = value` lines, '#' comments, dotted section names (stft.n_fft).
// Relative paths resolve against base_dir. Unknown keys are usage errors.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                              const std::string& context = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one key; used by the parser and by CLI overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const std::filesystem::path& base_dir = {});

// Every key with its effective value, in a stable order that parse_config reads back.
std::string encode_config(const ExperimentConfig& cfg);

std::vector<double> parse_snr_ladder(const std::string& text);
std::string format_snr(double snr_db);  // "inf" or a shortest round-trip number

}  // namespace micclass
