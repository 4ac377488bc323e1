#include "micclass/audio.hpp"

#include "micclass/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "micclass/error.hpp"
#include "micclass/rng.hpp"

namespace micclass {

AudioClip AudioClip::with_samples(std::vector<double> s) const {
  AudioClip out;
  out.samples = std::move(s);
  out.sample_rate = sample_rate;
  out.source_id = source_id;
  out.speaker_id = speaker_id;
  out.class_label = class_label;
  return out;
}

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioClip decode_wav(const std::vector<std::uint8_t>& bytes, const std::string& source_id) {
  const auto fail = [&](const std::string& what) {
    return DataError("wav '" + source_id + "': " + what);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw fail("malformed header (not RIFF/WAVE)");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw fail("malformed fmt chunk");
      std::uint16_t format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (size < 40) throw fail("malformed extensible fmt chunk");
        format = read_u16(chunk + 32);  // first two bytes of the subformat GUID
      }
      if (format != kFormatPcm || bits != 16) {
        throw fail("unsupported codec (format " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits); only PCM16 is supported");
      }
      if (channels == 0 || rate == 0) throw fail("malformed fmt chunk");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw fail("zero-length payload");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.source_id = source_id;
  clip.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const auto s = static_cast<std::int16_t>(read_u16(data + f * frame_bytes + 2u * c));
      acc += static_cast<double>(s);
    }
    clip.samples[f] = acc / channels / 32768.0;
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * n);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, 2 * n);
  for (double s : clip.samples) {
    const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip) {
  write_file_bytes(path, encode_wav(clip));
}

namespace {

double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

constexpr int kTapsPerPhase = 32;
constexpr double kKaiserBeta = 8.6;

}  // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw UsageError("resample: target rate must be positive");
  if (target_rate == clip.sample_rate) return clip;

  const long g = std::gcd(static_cast<long>(clip.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;
  const long down = clip.sample_rate / g;
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  const double cutoff = std::min(1.0, ratio);  // relative to the input Nyquist
  const auto n_in = static_cast<long>(clip.samples.size());
  const auto n_out = static_cast<long>(std::llround(static_cast<double>(n_in) * ratio));

  const int half = kTapsPerPhase / 2;
  const double i0_beta = bessel_i0(kKaiserBeta);
  const auto tap = [&](double t) {
    // t in input samples; window spans +-half.
    const double r = t / half;
    if (std::abs(r) >= 1.0) return 0.0;
    const double w = bessel_i0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    const double x = cutoff * t;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    return cutoff * sinc * w;
  };

  // Phase tables are cached when the number of phases is small.
  const bool cache = up <= 4096;
  std::vector<std::vector<double>> table;
  if (cache) {
    table.resize(static_cast<std::size_t>(up));
    for (long p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      auto& taps = table[static_cast<std::size_t>(p)];
      taps.resize(kTapsPerPhase);
      double sum = 0.0;
      for (int k = 0; k < kTapsPerPhase; ++k) {
        taps[k] = tap(static_cast<double>(k - half + 1) - frac);
        sum += taps[k];
      }
      for (double& t : taps) t /= sum;  // unit DC gain per phase
    }
  }

  std::vector<double> out(static_cast<std::size_t>(std::max(0L, n_out)));
#pragma omp parallel for schedule(static)
  for (long n = 0; n < n_out; ++n) {
    const long num = n * down;
    const long base = num / up;
    const long phase = num % up;
    std::vector<double> local;
    const std::vector<double>* taps;
    if (cache) {
      taps = &table[static_cast<std::size_t>(phase)];
    } else {
      const double frac = static_cast<double>(phase) / up;
      local.resize(kTapsPerPhase);
      double sum = 0.0;
      for (int k = 0; k < kTapsPerPhase; ++k) {
        local[k] = tap(static_cast<double>(k - half + 1) - frac);
        sum += local[k];
      }
      for (double& t : local) t /= sum;
      taps = &local;
    }
    double acc = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const long idx = base + k - half + 1;
      if (idx >= 0 && idx < n_in) acc += (*taps)[k] * clip.samples[static_cast<std::size_t>(idx)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  AudioClip res = clip.with_samples(std::move(out));
  res.sample_rate = target_rate;
  return res;
}

std::vector<AudioClip> segment(const AudioClip& clip, double duration_s) {
  if (!(duration_s > 0.0)) throw UsageError("segment: duration must be positive");
  const auto len = static_cast<std::size_t>(std::llround(duration_s * clip.sample_rate));
  std::vector<AudioClip> out;
  if (len == 0) return out;
  const std::size_t count = clip.samples.size() / len;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto first = clip.samples.begin() + static_cast<std::ptrdiff_t>(i * len);
    AudioClip seg = clip.with_samples(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(len)));
    if (count > 1) seg.source_id = clip.source_id + "#" + std::to_string(i);
    out.push_back(std::move(seg));
  }
  return out;
}

double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

AudioClip add_awgn(const AudioClip& clip, const NoiseSpec& spec) {
  if (!std::isfinite(spec.snr_db)) throw UsageError("add_awgn: snr must be finite");
  const double power = mean_power(clip.samples);
  if (!(power > 0.0)) {
    throw DataError("add_awgn: clip '" + clip.source_id + "' has zero signal power");
  }
  const double sigma = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
  Rng rng(spec.seed);
  std::vector<double> out(clip.samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = clip.samples[i] + sigma * rng.gaussian();
  return clip.with_samples(std::move(out));
}

}  // namespace micclass
