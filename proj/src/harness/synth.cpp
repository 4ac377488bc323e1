#include "micclass/harness/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"
#include "micclass/fft.hpp"

namespace micclass {

namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

// rough adult vowel formants (F1..F4)
constexpr int kFormants = 5;
constexpr std::array<std::array<double, kFormants>, 7> kVowels{{
    {730, 1090, 2440, 3400, 4500},
    {270, 2290, 3010, 3700, 4700},
    {300, 870, 2240, 3300, 4400},
    {530, 1840, 2480, 3500, 4600},
    {570, 840, 2410, 3400, 4500},
    {660, 1720, 2410, 3500, 4600},
    {490, 1350, 1690, 3300, 4400},
}};
constexpr std::array<double, kFormants> kBandwidth{70, 100, 140, 200, 280};

struct Resonator {
  double y1 = 0, y2 = 0;
  // cascade members use unity DC gain; the fricative filter wants unity peak gain
  double step(double x, double f, double bw, double fs, bool peak_norm = false) {
    const double r = std::exp(-pi * bw / fs);
    const double a1 = 2.0 * r * std::cos(2.0 * pi * f / fs);
    const double a2 = -r * r;
    const double g = peak_norm ? (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(4.0 * pi * f / fs) + r * r)
                               : 1.0 - a1 - a2;
    const double y = g * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

enum class Phone { kVoiced, kFricative, kPause };

}  // namespace

Voice make_voice(Rng& rng) {
  Voice v;
  v.f0 = rng.uniform() < 0.5 ? rng.uniform(95.0, 140.0) : rng.uniform(170.0, 240.0);
  v.tract_scale = v.f0 > 160.0 ? rng.uniform(1.05, 1.2) : rng.uniform(0.88, 1.02);
  v.breathiness = rng.uniform(0.02, 0.08);
  v.seed = rng.next_u64();
  return v;
}

std::vector<double> synth_speech(const Voice& v, std::size_t n_samples, int sample_rate, double rms) {
  const double fs = sample_rate;
  Rng rng(v.seed);
  std::vector<double> out(n_samples, 0.0);

  std::array<double, kFormants> cur = kVowels[0];
  for (auto& f : cur) f *= v.tract_scale;
  std::array<Resonator, kFormants> tract;
  Resonator fric;
  double glottal_lp = 0.0, phase = 0.0, lip_prev = 0.0;
  const double mod_rate = rng.uniform(0.4, 0.9), mod_phase = rng.uniform(0.0, 2 * pi);
  const double vib_phase = rng.uniform(0.0, 2 * pi);
  double jitter = 1.0;

  std::size_t n = 0;
  while (n < n_samples) {
    const double u = rng.uniform();
    const Phone kind = u < 0.7 ? Phone::kVoiced : (u < 0.85 ? Phone::kFricative : Phone::kPause);
    const double dur = kind == Phone::kPause ? rng.uniform(0.04, 0.18) : rng.uniform(0.08, 0.26);
    const std::size_t len = std::min(n_samples - n, static_cast<std::size_t>(dur * fs));
    const auto& target_raw = kVowels[rng.below(kVowels.size())];
    std::array<double, kFormants> target;
    for (int k = 0; k < kFormants; ++k) target[k] = target_raw[k] * v.tract_scale * rng.uniform(0.95, 1.05);
    const std::array<double, kFormants> start = cur;
    const double level = rng.uniform(0.4, 1.0);
    const double fric_centre = rng.uniform(2500.0, 6500.0);
    const std::size_t ramp = std::max<std::size_t>(1, static_cast<std::size_t>(0.01 * fs));

    for (std::size_t i = 0; i < len; ++i, ++n) {
      const double t = static_cast<double>(n) / fs;
      const double frac = static_cast<double>(i) / static_cast<double>(len);
      double env = level;
      if (i < ramp) env *= 0.5 - 0.5 * std::cos(pi * static_cast<double>(i) / ramp);
      if (len - i <= ramp) env *= 0.5 - 0.5 * std::cos(pi * static_cast<double>(len - i) / ramp);

      for (int k = 0; k < kFormants; ++k) cur[k] = start[k] + (target[k] - start[k]) * std::min(1.0, 2.0 * frac);

      double s = 0.0;
      if (kind == Phone::kVoiced) {
        const double f0 = v.f0 * jitter *
                          (1.0 + 0.08 * std::sin(2 * pi * mod_rate * t + mod_phase) +
                           0.015 * std::sin(2 * pi * 5.5 * t + vib_phase));
        phase += f0 / fs;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0;
          jitter = 1.0 + 0.01 * rng.gaussian();
        }
        glottal_lp = 0.92 * glottal_lp + pulse + v.breathiness * rng.gaussian();
        double x = glottal_lp;
        for (int k = 0; k < kFormants; ++k) x = tract[k].step(x, cur[k], kBandwidth[k], fs);
        // lip radiation
        s = x - lip_prev;
        lip_prev = x;
      } else if (kind == Phone::kFricative) {
        s = 0.3 * fric.step(rng.gaussian(), fric_centre, 1800.0, fs, true);
        for (int k = 0; k < kFormants; ++k) tract[k].step(0.0, cur[k], kBandwidth[k], fs);
      } else {
        env = 0.0;
        for (int k = 0; k < kFormants; ++k) tract[k].step(0.0, cur[k], kBandwidth[k], fs);
      }
      out[n] = env * s;
    }
  }

  const double p = std::sqrt(std::inner_product(out.begin(), out.end(), out.begin(), 0.0) /
                             static_cast<double>(std::max<std::size_t>(1, n_samples)));
  if (p > 0.0)
    for (auto& x : out) x *= rms / p;
  return out;
}

std::vector<double> device_log_response(const std::vector<double>& taps, int n_fft) {
  std::vector<double> padded(static_cast<std::size_t>(n_fft), 0.0);
  std::copy_n(taps.begin(), std::min(taps.size(), padded.size()), padded.begin());
  const auto spec = rfft(padded);
  std::vector<double> db(static_cast<std::size_t>(n_fft / 2));
  for (std::size_t k = 0; k < db.size(); ++k) db[k] = 10.0 * std::log10(std::max(std::norm(spec[k + 1]), 1e-30));
  const double mean = std::accumulate(db.begin(), db.end(), 0.0) / static_cast<double>(db.size());
  for (auto& x : db) x -= mean;
  return db;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DataError("pearson: size mismatch");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

namespace {

std::vector<double> random_min_phase(Rng& rng, const DeviceOptions& o) {
  constexpr int kN = 1024;
  constexpr double kFs = 16000.0;
  std::vector<double> db(kN / 2 + 1);
  const int n_bumps = 6;
  std::vector<std::array<double, 3>> bumps;
  for (int b = 0; b < n_bumps; ++b) {
    const double centre = std::log2(150.0) + rng.uniform() * (std::log2(7500.0) - std::log2(150.0));
    bumps.push_back({centre, rng.uniform(0.15, 0.7), rng.gaussian(0.0, o.bump_db)});
  }
  const double tilt = rng.uniform(-1.5, 1.5);
  const double hp = rng.uniform(60.0, 300.0);
  const double lp = rng.uniform(5500.0, 9000.0);
  for (int k = 0; k <= kN / 2; ++k) {
    const double f = std::max(static_cast<double>(k), 0.5) * kFs / kN;
    const double lf = std::log2(f);
    double d = tilt * (lf - std::log2(1000.0));
    for (const auto& b : bumps) d += b[2] * std::exp(-0.5 * std::pow((lf - b[0]) / b[1], 2));
    d -= 10.0 * std::log10(1.0 + std::pow(hp / f, 4));
    d -= 10.0 * std::log10(1.0 + std::pow(f / lp, 8));
    db[static_cast<std::size_t>(k)] = d;
  }
  const double mean = std::accumulate(db.begin(), db.end(), 0.0) / static_cast<double>(db.size());

  // real cepstrum, folded onto positive quefrencies
  std::vector<std::complex<double>> logmag(db.size());
  for (std::size_t k = 0; k < db.size(); ++k) logmag[k] = (db[k] - mean) * std::log(10.0) / 20.0;
  auto cep = irfft(logmag, kN);
  std::vector<double> folded(kN, 0.0);
  folded[0] = cep[0];
  for (int i = 1; i < kN / 2; ++i) folded[static_cast<std::size_t>(i)] = 2.0 * cep[static_cast<std::size_t>(i)];
  folded[kN / 2] = cep[kN / 2];
  auto spec = rfft(folded);
  for (auto& z : spec) z = std::exp(z);
  auto h = irfft(spec, kN);
  h.resize(static_cast<std::size_t>(o.taps));
  const int taper = std::max(1, o.taps / 8);
  for (int i = 0; i < taper; ++i) {
    const double w = 0.5 + 0.5 * std::cos(pi * (i + 1) / (taper + 1));
    h[static_cast<std::size_t>(o.taps - taper + i)] *= w;
  }
  return h;
}

}  // namespace

std::vector<DeviceResponse> make_device_responses(int n_devices, std::uint64_t seed, const DeviceOptions& opts) {
  if (n_devices < 2) throw UsageError("need at least two devices");
  if (opts.taps < 8) throw UsageError("device FIR too short");
  Rng rng(derive_seed(seed, 17));
  std::vector<DeviceResponse> out;
  std::vector<std::vector<double>> logs;
  int attempts = 0;
  while (static_cast<int>(out.size()) < n_devices) {
    if (++attempts > 10000) throw DataError("could not draw distinct device responses");
    auto taps = random_min_phase(rng, opts);
    auto lr = device_log_response(taps, opts.n_fft_check);
    bool ok = true;
    for (const auto& other : logs) ok = ok && pearson(lr, other) < opts.max_correlation;
    if (!ok) continue;
    char name[32];
    std::snprintf(name, sizeof name, "dev%02d", static_cast<int>(out.size()) + 1);
    out.push_back({name, std::move(taps)});
    logs.push_back(std::move(lr));
  }
  return out;
}

std::vector<double> fir_filter(const std::vector<double>& x, const std::vector<double>& taps) {
  std::vector<double> y(x.size(), 0.0);
  const std::size_t k = taps.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    double acc = 0.0;
    const std::size_t m = std::min(k, n + 1);
    for (std::size_t j = 0; j < m; ++j) acc += taps[j] * x[n - j];
    y[n] = acc;
  }
  return y;
}

namespace {

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i);
  return buf;
}

std::vector<double> speaker_audio(std::uint64_t seed, int s, std::size_t n, int rate, double rms, double bg_db) {
  Rng vr(derive_seed(seed, 1000 + static_cast<std::uint64_t>(s)));
  const Voice v = make_voice(vr);
  auto x = synth_speech(v, n, rate, rms);
  Rng nr(derive_seed(seed, 2000 + static_cast<std::uint64_t>(s)));
  const double sigma = rms * std::pow(10.0, bg_db / 20.0);
  for (auto& xi : x) xi += sigma * nr.gaussian();
  return x;
}

void scale_to_rms(std::vector<double>& y, double rms) {
  const double p = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0) /
                             static_cast<double>(std::max<std::size_t>(1, y.size())));
  if (p > 0.0)
    for (auto& v : y) v *= rms / p;
  for (auto& v : y) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace

SynthCorpus synth_device_corpus(const fs::path& out, const SynthCorpusOptions& o) {
  if (o.n_devices < 2) throw UsageError("synth-corpus needs at least two devices");
  if (o.n_speakers < 1) throw UsageError("synth-corpus needs at least one speaker");
  if (!(o.seconds_per_speaker > 0.0)) throw UsageError("seconds per speaker must be positive");
  SynthCorpus c;
  c.devices = make_device_responses(o.n_devices, o.seed, o.device);
  const auto n = static_cast<std::size_t>(std::llround(o.seconds_per_speaker * o.sample_rate));
  c.manifest.base_dir = out;
  for (int s = 1; s <= o.n_speakers; ++s) {
    const auto x = speaker_audio(o.seed, s, n, o.sample_rate, o.level_rms, o.background_db);
    const std::string spk = numbered("spk", s);
    const Split split = (o.train_speakers <= 0 || s <= o.train_speakers) ? Split::kTrain : Split::kTest;
    for (const auto& dev : c.devices) {
      AudioClip clip;
      clip.sample_rate = o.sample_rate;
      clip.samples = fir_filter(x, dev.taps);
      scale_to_rms(clip.samples, o.level_rms);
      const std::string rel = dev.name + "/" + spk + "/utt.wav";
      save_wav(out / rel, clip);
      c.manifest.entries.push_back({rel, dev.name, spk, split});
    }
  }
  std::sort(c.manifest.entries.begin(), c.manifest.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  validate_manifest(c.manifest, o.train_speakers > 0 && o.train_speakers < o.n_speakers);
  save_manifest(out / "manifest.csv", c.manifest);
  save_device_responses(out / "devices.csv", c.devices);
  return c;
}

Manifest synth_speech_corpus(const fs::path& out, const SpeechCorpusOptions& o) {
  const int n_speakers = o.n_speakers;
  const int sample_rate = o.sample_rate;
  const double seconds_per_speaker = o.seconds_per_speaker;
  if (n_speakers < 1) throw UsageError("speech corpus needs at least one speaker");
  Manifest m;
  m.base_dir = out;
  const auto n = static_cast<std::size_t>(std::llround(seconds_per_speaker * sample_rate));
  for (int s = 1; s <= n_speakers; ++s) {
    AudioClip clip;
    clip.sample_rate = sample_rate;
    // offset keeps these talkers disjoint from any device corpus with the same seed
    clip.samples = speaker_audio(derive_seed(o.seed, 99), s, n, sample_rate, o.level_rms, o.background_db);
    scale_to_rms(clip.samples, o.level_rms);
    const std::string rel = "speech/" + numbered("talker", s) + "/utt.wav";
    save_wav(out / rel, clip);
    m.entries.push_back({rel, "speech", numbered("talker", s), Split::kTrain});
  }
  save_manifest(out / "manifest.csv", m);
  return m;
}

void save_device_responses(const fs::path& path, const std::vector<DeviceResponse>& d) {
  std::ostringstream os;
  os << "device,tap,value\n";
  char buf[64];
  for (const auto& dev : d) {
    for (std::size_t i = 0; i < dev.taps.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", dev.taps[i]);
      os << dev.name << ',' << i << ',' << buf << '\n';
    }
  }
  const std::string text = os.str();
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<DeviceResponse> load_device_responses(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  std::istringstream is(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::getline(is, line);
  if (line.rfind("device,tap,value", 0) != 0) throw DataError(path.string() + ": bad header");
  std::vector<DeviceResponse> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, tap, value;
    std::getline(ls, name, ',');
    std::getline(ls, tap, ',');
    std::getline(ls, value, ',');
    auto [it, fresh] = index.emplace(name, out.size());
    if (fresh) out.push_back({name, {}});
    auto& taps = out[it->second].taps;
    try {
      if (std::stoul(tap) != taps.size()) throw DataError(path.string() + ": taps out of order");
      taps.push_back(std::stod(value));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": bad line '" + line + "'");
    }
  }
  return out;
}

}  // namespace micclass
