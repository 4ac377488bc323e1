#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "micclass/audio.hpp"
#include "micclass/matrix.hpp"

namespace micclass {

enum class WindowType : std::uint8_t { kHann = 0, kHamming = 1 };

struct StftConfig {
  int n_fft = 512;
  int hop = 256;
  WindowType window = WindowType::kHann;
  double db_floor = -100.0;
  double db_ceiling = 20.0;

  void validate() const;
  int bins() const { return n_fft / 2; }
  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

// Periodic window of length n.
std::vector<double> make_window(WindowType type, int n);

/// Frames x bins matrix of dB values (X_l(f)). Column c holds FFT bin c + 1:
/// DC is dropped and Nyquist kept, so bins() == n_fft / 2.
struct LogPowerSpectrogram {
  Matrix values;
  StftConfig config;
  int sample_rate = 16000;
  std::string source_id;
  std::string speaker_id;
  std::string class_label;

  std::size_t frames() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
  double bin_frequency(std::size_t column) const {
    return static_cast<double>(column + 1) * sample_rate / config.n_fft;
  }
};

/// Pixels in [0,1] mapped affinely from [db_floor, db_ceiling].
struct ImageView {
  Matrix pixels;
  double db_floor = -100.0;
  double db_ceiling = 20.0;
};

// Frame count for n samples. The signal is zero-padded by (n_fft - hop) samples,
// split evenly between both ends, so 65536 samples at hop 256 give 256 frames.
std::size_t frame_count(std::size_t n_samples, const StftConfig& cfg);

/// 20 log10 |STFT| in dB re full scale (a full-scale sinusoid peaks near 0 dB),
/// clamped to [db_floor, db_ceiling].
LogPowerSpectrogram log_power(const AudioClip& clip, const StftConfig& cfg);

ImageView to_image(const LogPowerSpectrogram& spec);
LogPowerSpectrogram from_image(const ImageView& img, const LogPowerSpectrogram& meta);

using SpectrogramDenoiser = std::function<ImageView(const ImageView&)>;
using TimeDenoiser = std::function<AudioClip(const AudioClip&)>;

// Extract first, then denoise the image.
LogPowerSpectrogram pipeline_frequency(const AudioClip& noisy, const SpectrogramDenoiser& den,
                                       const StftConfig& cfg);
// Denoise the waveform, then extract.
LogPowerSpectrogram pipeline_time(const AudioClip& noisy, const TimeDenoiser& den,
                                  const StftConfig& cfg);

// "MFSG" container.
std::vector<std::uint8_t> encode_spectrogram(const LogPowerSpectrogram& spec);
LogPowerSpectrogram decode_spectrogram(const std::vector<std::uint8_t>& bytes,
                                       const std::string& context = "spectrogram");
void save_spectrogram(const std::filesystem::path& path, const LogPowerSpectrogram& spec);
LogPowerSpectrogram load_spectrogram(const std::filesystem::path& path);

}  // namespace micclass
