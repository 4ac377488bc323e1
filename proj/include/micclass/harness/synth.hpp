#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "micclass/audio.hpp"
#include "micclass/harness/manifest.hpp"
#include "micclass/rng.hpp"

namespace micclass {

// Parameters of one synthetic talker.
struct Voice {
  double f0 = 120.0;        // Hz
  double tract_scale = 1.0; // multiplies formant frequencies
  double breathiness = 0.05;
  std::uint64_t seed = 0;
};

Voice make_voice(Rng& rng);

// Pitch-modulated glottal pulses through time-varying formant resonators, with
// fricative bursts and pauses. Output RMS is `rms`.
std::vector<double> synth_speech(const Voice& v, std::size_t n_samples, int sample_rate, double rms = 0.05);

struct DeviceResponse {
  std::string name;
  std::vector<double> taps;  // minimum phase
};

// Zero-mean 10*log10|H|^2 on the spectrogram bin grid (bins 1..n_fft/2).
std::vector<double> device_log_response(const std::vector<double>& taps, int n_fft);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct DeviceOptions {
  int taps = 128;
  double bump_db = 5.0;       // spread of the random resonances
  double max_correlation = 0.95;
  int n_fft_check = 512;
};

// Random minimum-phase FIRs, rejection-sampled until every pair of log
// responses correlates below max_correlation.
std::vector<DeviceResponse> make_device_responses(int n_devices, std::uint64_t seed,
                                                  const DeviceOptions& opts = {});

std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& taps);

struct SynthCorpusOptions {
  int n_devices = 5;
  int n_speakers = 10;
  double seconds_per_speaker = 16.384;
  int sample_rate = 16000;
  int train_speakers = 7;      // first N speakers train; <= 0 puts everyone in train
  double level_rms = 0.1;
  double background_db = -50;  // room noise relative to speech, before the device
  std::uint64_t seed = 1;
  DeviceOptions device;
};

struct SynthCorpus {
  Manifest manifest;
  std::vector<DeviceResponse> devices;
};

// Writes <out>/<device>/<speaker>/utt.wav, <out>/manifest.csv and
// <out>/devices.csv. Every device records the same utterance per speaker.
SynthCorpus synth_device_corpus(const std::filesystem::path& out, const SynthCorpusOptions& opts);

struct SpeechCorpusOptions {
  int n_speakers = 16;
  double seconds_per_speaker = 16.384;
  int sample_rate = 16000;
  double level_rms = 0.1;
  double background_db = -50;
  std::uint64_t seed = 1;
};

// Flat-channel speech for the speech model: class "speech", all train.
// Talkers never coincide with a device corpus built from the same seed.
Manifest synth_speech_corpus(const std::filesystem::path& out, const SpeechCorpusOptions& opts);

void save_device_responses(const std::filesystem::path& path, const std::vector<DeviceResponse>& d);
std::vector<DeviceResponse> load_device_responses(const std::filesystem::path& path);

}  // namespace micclass
