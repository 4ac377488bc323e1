#include "micclass/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"
#include "micclass/fft.hpp"

namespace micclass {

void StftConfig::validate() const {
  if (n_fft <= 0 || (n_fft & (n_fft - 1)) != 0) {
    throw UsageError("stft: n_fft must be a positive power of two");
  }
  if (hop <= 0 || hop > n_fft) throw UsageError("stft: require 0 < hop <= n_fft");
  if (!(db_floor < db_ceiling)) throw UsageError("stft: require db_floor < db_ceiling");
}

std::vector<double> make_window(WindowType type, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  const double a0 = type == WindowType::kHann ? 0.5 : 0.54;
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = a0 - (1.0 - a0) * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

std::size_t frame_count(std::size_t n_samples, const StftConfig& cfg) {
  const std::size_t padded = n_samples + static_cast<std::size_t>(cfg.n_fft - cfg.hop);
  if (padded < static_cast<std::size_t>(cfg.n_fft)) return 0;
  return (padded - static_cast<std::size_t>(cfg.n_fft)) / static_cast<std::size_t>(cfg.hop) + 1;
}

LogPowerSpectrogram log_power(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  if (clip.samples.size() < static_cast<std::size_t>(cfg.n_fft)) {
    throw DataError("log_power: clip '" + clip.source_id + "' shorter than n_fft");
  }
  const std::size_t n_fft = static_cast<std::size_t>(cfg.n_fft);
  const std::size_t hop = static_cast<std::size_t>(cfg.hop);
  const std::size_t frames = frame_count(clip.samples.size(), cfg);
  const std::size_t bins = n_fft / 2;
  const std::size_t left_pad = (n_fft - hop) / 2;

  const auto window = make_window(cfg.window, cfg.n_fft);
  double window_sum = 0.0;
  for (double w : window) window_sum += w;
  const double scale = 2.0 / window_sum;

  LogPowerSpectrogram out;
  out.values = Matrix(frames, bins);
  out.config = cfg;
  out.sample_rate = clip.sample_rate;
  out.source_id = clip.source_id;
  out.speaker_id = clip.speaker_id;
  out.class_label = clip.class_label.value_or("");

  const auto n = static_cast<long>(clip.samples.size());
#pragma omp parallel for schedule(static)
  for (std::size_t l = 0; l < frames; ++l) {
    std::vector<double> frame(n_fft);
    const long start = static_cast<long>(l * hop) - static_cast<long>(left_pad);
    for (std::size_t i = 0; i < n_fft; ++i) {
      const long idx = start + static_cast<long>(i);
      frame[i] = (idx >= 0 && idx < n) ? clip.samples[static_cast<std::size_t>(idx)] * window[i] : 0.0;
    }
    const auto spec = rfft(frame);
    auto row = out.values.row(l);
    for (std::size_t b = 0; b < bins; ++b) {
      const double mag = std::abs(spec[b + 1]) * scale;
      const double db = mag > 0.0 ? 20.0 * std::log10(mag) : cfg.db_floor;
      row[b] = std::clamp(db, cfg.db_floor, cfg.db_ceiling);
    }
  }
  return out;
}

ImageView to_image(const LogPowerSpectrogram& spec) {
  ImageView img;
  img.db_floor = spec.config.db_floor;
  img.db_ceiling = spec.config.db_ceiling;
  img.pixels = Matrix(spec.values.rows(), spec.values.cols());
  const double span = img.db_ceiling - img.db_floor;
  const auto& src = spec.values.data();
  auto& dst = img.pixels.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = std::clamp((src[i] - img.db_floor) / span, 0.0, 1.0);
  }
  return img;
}

LogPowerSpectrogram from_image(const ImageView& img, const LogPowerSpectrogram& meta) {
  LogPowerSpectrogram out;
  out.config = meta.config;
  out.config.db_floor = img.db_floor;
  out.config.db_ceiling = img.db_ceiling;
  out.sample_rate = meta.sample_rate;
  out.source_id = meta.source_id;
  out.speaker_id = meta.speaker_id;
  out.class_label = meta.class_label;
  out.values = Matrix(img.pixels.rows(), img.pixels.cols());
  const double span = img.db_ceiling - img.db_floor;
  const auto& src = img.pixels.data();
  auto& dst = out.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = img.db_floor + std::clamp(src[i], 0.0, 1.0) * span;
  }
  return out;
}

LogPowerSpectrogram pipeline_frequency(const AudioClip& noisy, const SpectrogramDenoiser& den,
                                       const StftConfig& cfg) {
  const LogPowerSpectrogram spec = log_power(noisy, cfg);
  return from_image(den(to_image(spec)), spec);
}

LogPowerSpectrogram pipeline_time(const AudioClip& noisy, const TimeDenoiser& den,
                                  const StftConfig& cfg) {
  return log_power(den(noisy), cfg);
}

namespace {
constexpr std::uint32_t kSpectrogramVersion = 1;
// Header flags describing how the matrix was produced.
constexpr std::uint8_t kBinLayoutDropDcKeepNyquist = 1;
constexpr std::uint8_t kFramingSymmetricPad = 1;
}  // namespace

std::vector<std::uint8_t> encode_spectrogram(const LogPowerSpectrogram& spec) {
  ByteWriter w;
  w.raw("MFSG", 4);
  w.u32(kSpectrogramVersion);
  w.u32(static_cast<std::uint32_t>(spec.config.n_fft));
  w.u32(static_cast<std::uint32_t>(spec.config.hop));
  w.u8(static_cast<std::uint8_t>(spec.config.window));
  w.f64(spec.config.db_floor);
  w.f64(spec.config.db_ceiling);
  w.u8(kBinLayoutDropDcKeepNyquist);
  w.u8(kFramingSymmetricPad);
  w.u32(static_cast<std::uint32_t>(spec.sample_rate));
  w.u32(static_cast<std::uint32_t>(spec.values.rows()));
  w.u32(static_cast<std::uint32_t>(spec.values.cols()));
  for (double v : spec.values.data()) w.f64(v);
  w.str(spec.source_id);
  w.str(spec.speaker_id);
  w.str(spec.class_label);
  return w.take();
}

LogPowerSpectrogram decode_spectrogram(const std::vector<std::uint8_t>& bytes,
                                       const std::string& context) {
  ByteReader r(bytes, context);
  r.expect_magic("MFSG");
  const std::uint32_t version = r.u32();
  if (version > kSpectrogramVersion) {
    throw ModelError(context + ": version " + std::to_string(version) + " is newer than supported");
  }
  LogPowerSpectrogram spec;
  spec.config.n_fft = static_cast<int>(r.u32());
  spec.config.hop = static_cast<int>(r.u32());
  const std::uint8_t window = r.u8();
  if (window > 1) throw ModelError(context + ": unknown window type");
  spec.config.window = static_cast<WindowType>(window);
  spec.config.db_floor = r.f64();
  spec.config.db_ceiling = r.f64();
  if (r.u8() != kBinLayoutDropDcKeepNyquist) throw ModelError(context + ": unknown bin layout");
  if (r.u8() != kFramingSymmetricPad) throw ModelError(context + ": unknown framing");
  spec.sample_rate = static_cast<int>(r.u32());
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  spec.values = Matrix(rows, cols);
  for (auto& v : spec.values.data()) v = r.f64();
  spec.source_id = r.str();
  spec.speaker_id = r.str();
  spec.class_label = r.str();
  if (!r.at_end()) throw ModelError(context + ": trailing bytes");
  return spec;
}

void save_spectrogram(const std::filesystem::path& path, const LogPowerSpectrogram& spec) {
  write_file_bytes(path, encode_spectrogram(spec));
}

LogPowerSpectrogram load_spectrogram(const std::filesystem::path& path) {
  return decode_spectrogram(read_file_bytes(path), path.string());
}

}  // namespace micclass
