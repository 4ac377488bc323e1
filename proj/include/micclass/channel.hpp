#pragma once

#include <span>
#include <string>
#include <vector>

#include "micclass/matrix.hpp"
#include "micclass/spectral.hpp"
#include "micclass/speech_model.hpp"

namespace micclass {

/// Zero-mean log-power frequency response of the recording channel.
struct ChannelEstimate {
  std::vector<double> h;
  std::size_t frame_count = 0;  // frames that entered the average
  std::string source_id;
  std::string speaker_id;
  std::string class_label;
};

std::vector<double> mean_normalize(std::span<const double> x);

struct ChannelOptions {
  // Frames whose mean dB is below db_floor + margin are skipped.
  double silence_margin_db = 3.0;
};

/// Averaged difference between mean-normalized observed frames and
/// mean-normalized ideal speech frames (one ideal row per spectrogram frame).
ChannelEstimate estimate_channel(const LogPowerSpectrogram& spec, const Matrix& ideal_frames,
                                 const ChannelOptions& opts = {});

/// Ideal speech is estimated from the spectrogram's own MFCCs.
ChannelEstimate estimate_channel(const LogPowerSpectrogram& spec, const SpeechModel& model,
                                 const ChannelOptions& opts = {});

}  // namespace micclass
