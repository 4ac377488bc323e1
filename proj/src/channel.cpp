#include "micclass/channel.hpp"

#include "micclass/error.hpp"
#include "micclass/features.hpp"

namespace micclass {

std::vector<double> mean_normalize(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  if (out.empty()) return out;
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= static_cast<double>(out.size());
  for (double& v : out) v -= mean;
  return out;
}

ChannelEstimate estimate_channel(const LogPowerSpectrogram& spec, const Matrix& ideal_frames,
                                 const ChannelOptions& opts) {
  if (spec.frames() == 0) throw DataError("estimate_channel: empty spectrogram");
  if (ideal_frames.rows() != spec.frames() || ideal_frames.cols() != spec.bins()) {
    throw DataError("estimate_channel: ideal speech shape does not match the spectrogram");
  }
  const std::size_t bins = spec.bins();
  std::vector<double> acc(bins, 0.0);
  std::size_t used = 0;
  for (std::size_t l = 0; l < spec.frames(); ++l) {
    const auto x = spec.values.row(l);
    if (is_silent_frame(x, spec.config.db_floor, opts.silence_margin_db)) continue;
    const auto zx = mean_normalize(x);
    const auto zs = mean_normalize(ideal_frames.row(l));
    for (std::size_t f = 0; f < bins; ++f) acc[f] += zx[f] - zs[f];
    ++used;
  }
  if (used == 0) {
    throw DataError("estimate_channel: '" + spec.source_id + "' has no non-silent frames");
  }
  for (double& v : acc) v /= static_cast<double>(used);
  ChannelEstimate out;
  out.h = mean_normalize(acc);
  out.frame_count = used;
  out.source_id = spec.source_id;
  out.speaker_id = spec.speaker_id;
  out.class_label = spec.class_label;
  return out;
}

ChannelEstimate estimate_channel(const LogPowerSpectrogram& spec, const SpeechModel& model,
                                 const ChannelOptions& opts) {
  if (model.avg_spectrum.rows.cols() != spec.bins()) {
    throw DataError("estimate_channel: speech model bins do not match the spectrogram");
  }
  const Matrix feats = mfcc(spec, model.mfcc_cfg);
  return estimate_channel(spec, ideal_speech(model, feats), opts);
}

}  // namespace micclass
