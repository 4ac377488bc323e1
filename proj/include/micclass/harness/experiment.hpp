#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "micclass/audio.hpp"
#include "micclass/container.hpp"
#include "micclass/harness/config.hpp"
#include "micclass/harness/manifest.hpp"
#include "micclass/metrics.hpp"

namespace micclass {

// One fixed-length segment of a manifest file.
struct Example {
  AudioClip clip;
  std::string class_label;
  std::string speaker_id;
  Split split = Split::kTrain;
  std::size_t index = 0;  // position among all segments, manifest order
};

// Loads, resamples and segments every entry; order follows the manifest.
std::vector<Example> load_examples(const Manifest& m, const ExperimentConfig& cfg);
std::vector<Example> select_split(const std::vector<Example>& all, Split s);

// Noise for a given (snr, example) pair is fixed by the config seed alone.
std::uint64_t noise_seed(std::uint64_t seed, double snr_db, std::size_t example_index);
AudioClip corrupt(const Example& e, double snr_db, std::uint64_t seed);

std::vector<LogPowerSpectrogram> spectrograms(const std::vector<Example>& ex, double snr_db,
                                              const ExperimentConfig& cfg);
Matrix channel_features(const std::vector<LogPowerSpectrogram>& specs, const SpeechModel& model,
                        const ExperimentConfig& cfg);
std::vector<std::string> labels_of(const std::vector<Example>& ex);

SpeechModel fit_speech_model(const Manifest& speech, const ExperimentConfig& cfg);
SvmModel fit_classifier(const std::vector<Example>& train, const SpeechModel& model,
                        const ExperimentConfig& cfg);
// Residual denoiser trained on (noisy, clean) spectrogram images at one SNR.
DnCnnRecord fit_dncnn(const std::vector<Example>& train, double snr_db, const ExperimentConfig& cfg,
                      const EpochCallback& on_epoch = {});

// Everything a run needs after training.
struct ModelBundle {
  SpeechModel speech;
  SvmModel svm;
  std::map<double, DnCnnRecord> dncnn;  // keyed by training SNR
  DenoiserParams dsp;
};

std::string dncnn_section_name(double snr_db);
ModelContainer pack_models(const ModelBundle& b);
ModelBundle unpack_models(const ModelContainer& c);

// Applies a named denoiser ("none", "tv", "nlm", "bilateral", "wavelet",
// "dncnn") in the image domain.
LogPowerSpectrogram denoise_spectrogram(const std::string& name, const LogPowerSpectrogram& spec,
                                        const DenoiserParams& dsp, const DnCnnModel* net);

ClassificationMetrics score(const SvmModel& svm, const Matrix& features, const std::vector<std::string>& truth);

struct SelectionRow {
  std::string denoiser;
  double psnr = 0.0;
  double ssim = 0.0;
  double mca = 0.0;
};

struct SelectionReport {
  double snr_db = 25.0;
  std::size_t n_test = 0;
  std::vector<SelectionRow> rows;
};

SelectionReport run_denoiser_selection(const ExperimentConfig& cfg, const ModelBundle& models,
                                       const std::vector<Example>& test);

struct EvalRow {
  double snr_db = 0.0;
  std::string model;  // denoiser used, "none" without denoising
  ClassificationMetrics metrics;
  std::size_t n_test = 0;
};

struct EvaluationReport {
  std::vector<EvalRow> without_denoising;
  std::vector<EvalRow> with_denoising;  // empty when denoising is off
};

// Classifies with the clean-trained SVM only; no code path here fits a model.
EvaluationReport run_evaluation(const ExperimentConfig& cfg, const ModelBundle& models,
                                const std::vector<Example>& test);

std::string table1_csv(const SelectionReport& r);
std::string table1_text(const SelectionReport& r);
std::string table2_csv(const EvaluationReport& r);
std::string table3_csv(const EvaluationReport& r);
std::string evaluation_text(const EvaluationReport& r);
std::string counts_csv(const std::vector<Example>& all);

struct PipelineOptions {
  bool synthesize = false;  // build the synthetic corpora under <out>/corpus first
  bool selection = true;
  bool evaluation = true;
  std::function<void(const std::string&)> log;
};

struct PipelineResult {
  ModelBundle models;
  SelectionReport selection;
  EvaluationReport evaluation;
  std::vector<std::filesystem::path> files;  // everything written, sorted
};

// Train every model, run both protocols, write models and reports to cfg.out.
PipelineResult run_pipeline(ExperimentConfig cfg, const PipelineOptions& opts = {});

}  // namespace micclass
