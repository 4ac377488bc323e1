#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace micclass {

/// Mono PCM clip. Samples are nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;
  std::string source_id;
  std::string speaker_id;
  std::optional<std::string> class_label;

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Copy of the metadata with a new sample buffer.
  AudioClip with_samples(std::vector<double> s) const;
};

struct NoiseSpec {
  double snr_db = 25.0;
  std::uint64_t seed = 0;
};

// Reads RIFF/WAVE PCM16 (mono or multichannel, downmixed by channel mean).
AudioClip load_wav(const std::filesystem::path& path);

// Writes mono PCM16; samples are rounded and saturated.
void save_wav(const std::filesystem::path& path, const AudioClip& clip);

std::vector<std::uint8_t> encode_wav(const AudioClip& clip);
AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& source_id = "");

/// Windowed-sinc polyphase resampler (Kaiser beta 8.6, 32 taps per phase).
/// Output length is round(n * target_rate / rate).
AudioClip resample(const AudioClip& clip, int target_rate);

/// Non-overlapping segments of round(duration_s * rate) samples; the remainder
/// is discarded. Returns an empty list when the clip is shorter than a segment.
std::vector<AudioClip> segment(const AudioClip& clip, double duration_s);

double mean_power(const std::vector<double>& x);

/// x + n with n ~ N(0, P_x / 10^(snr/10)), P_x the mean power of the clip.
/// Throws DataError on an all-zero clip.
AudioClip add_awgn(const AudioClip& clip, const NoiseSpec& spec);

}  // namespace micclass
