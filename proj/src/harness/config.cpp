#include "micclass/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"

namespace micclass {

namespace fs = std::filesystem;

ExperimentConfig::ExperimentConfig() {
  // desk-scale defaults; see README for the reasoning behind each
  synth.background_db = -40.0;
  synth.device.bump_db = 6.0;
  synth_speech.background_db = -40.0;
  dncnn_train.epochs = 8;
}

void ExperimentConfig::validate() const {
  if (jobs < 1) throw UsageError("jobs must be >= 1");
  if (!(segment_seconds > 0.0)) throw UsageError("segment_seconds must be positive");
  if (sample_rate <= 0) throw UsageError("sample_rate must be positive");
  stft.validate();
  mfcc.validate(sample_rate);
  if (snr_ladder.empty()) throw UsageError("snr_ladder is empty");
  if (selection_denoisers.empty()) throw UsageError("selection.denoisers is empty");
  for (const auto& d : selection_denoisers) {
    static const std::vector<std::string> known{"none", "tv", "nlm", "bilateral", "wavelet", "dncnn"};
    if (std::find(known.begin(), known.end(), d) == known.end())
      throw UsageError("unknown denoiser '" + d + "'");
  }
  if (dncnn_depth < 2 || dncnn_width < 1) throw UsageError("dncnn depth must be >= 2 and width >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf" || v == "+inf") return kCleanSnr;
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw UsageError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw UsageError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream is(v);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& v, const fs::path& base)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* name;
  Setter set;
  Getter get;
};

#define MC_DOUBLE(NAME, EXPR)                                                                  \
  Key {                                                                                        \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v, const fs::path&) { \
      c.EXPR = to_double(k, v);                                                                \
    },                                                                                         \
        [](const ExperimentConfig& c) { return fmt(c.EXPR); }                                  \
  }
#define MC_INT(NAME, EXPR, TYPE)                                                               \
  Key {                                                                                        \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v, const fs::path&) { \
      c.EXPR = static_cast<TYPE>(to_int(k, v));                                                \
    },                                                                                         \
        [](const ExperimentConfig& c) { return std::to_string(c.EXPR); }                       \
  }
#define MC_BOOL(NAME, EXPR)                                                                    \
  Key {                                                                                        \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v, const fs::path&) { \
      c.EXPR = to_bool(k, v);                                                                  \
    },                                                                                         \
        [](const ExperimentConfig& c) { return std::string(c.EXPR ? "true" : "false"); }       \
  }
#define MC_PATH(NAME, EXPR)                                                                       \
  Key {                                                                                           \
    NAME, [](ExperimentConfig& c, const std::string&, const std::string& v, const fs::path& base) { \
      const fs::path p(v);                                                                        \
      c.EXPR = (p.is_absolute() || base.empty()) ? p : base / p;                                  \
    },                                                                                            \
        [](const ExperimentConfig& c) { return c.EXPR.generic_string(); }                         \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table{
      MC_INT("seed", seed, std::uint64_t),
      MC_INT("jobs", jobs, int),
      MC_PATH("out", out),
      MC_PATH("manifest", manifest),
      MC_PATH("speech_manifest", speech_manifest),
      Key{"split",
          [](ExperimentConfig& c, const std::string&, const std::string& v, const fs::path&) {
            parse_split_rule(v);  // validate early
            c.split_rule = v;
          },
          [](const ExperimentConfig& c) { return c.split_rule; }},
      MC_INT("sample_rate", sample_rate, int),
      MC_DOUBLE("segment_seconds", segment_seconds),
      Key{"snr_ladder",
          [](ExperimentConfig& c, const std::string&, const std::string& v, const fs::path&) {
            c.snr_ladder = parse_snr_ladder(v);
          },
          [](const ExperimentConfig& c) {
            std::vector<std::string> s;
            for (double x : c.snr_ladder) s.push_back(format_snr(x));
            return join(s);
          }},

      MC_INT("stft.n_fft", stft.n_fft, int),
      MC_INT("stft.hop", stft.hop, int),
      Key{"stft.window",
          [](ExperimentConfig& c, const std::string& k, const std::string& v, const fs::path&) {
            if (v == "hann")
              c.stft.window = WindowType::kHann;
            else if (v == "hamming")
              c.stft.window = WindowType::kHamming;
            else
              throw UsageError("'" + k + "' expects hann or hamming");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.stft.window == WindowType::kHann ? "hann" : "hamming");
          }},
      MC_DOUBLE("stft.db_floor", stft.db_floor),
      MC_DOUBLE("stft.db_ceiling", stft.db_ceiling),

      MC_INT("mfcc.n_mels", mfcc.n_mels, int),
      MC_INT("mfcc.n_coeffs", mfcc.n_coeffs, int),
      MC_DOUBLE("mfcc.fmin", mfcc.fmin),
      MC_DOUBLE("mfcc.fmax", mfcc.fmax),
      MC_BOOL("mfcc.rasta", mfcc.rasta),
      MC_BOOL("mfcc.rasta_center", mfcc.rasta_center),

      MC_INT("gmm.mixtures", gmm.mixtures, int),
      MC_INT("gmm.max_iters", gmm.max_iters, int),
      MC_DOUBLE("gmm.tol", gmm.tol),
      MC_DOUBLE("gmm.variance_floor", gmm.variance_floor),
      MC_INT("gmm.kmeans_iters", gmm.kmeans_iters, int),

      MC_BOOL("avg.normalize", avg.normalize),
      MC_DOUBLE("avg.occupancy_epsilon", avg.occupancy_epsilon),
      MC_INT("avg.skip_frames", avg.skip_frames, std::size_t),
      MC_DOUBLE("avg.silence_margin_db", avg.silence_margin_db),
      MC_DOUBLE("channel.silence_margin_db", channel.silence_margin_db),

      MC_DOUBLE("svm.C", svm.C),
      MC_DOUBLE("svm.gamma", svm.gamma),
      MC_DOUBLE("svm.tol", svm.tol),

      MC_DOUBLE("tv.lambda", dsp.tv.lambda),
      MC_INT("tv.max_iters", dsp.tv.max_iters, int),
      MC_DOUBLE("tv.tol", dsp.tv.tol),
      MC_INT("nlm.patch_radius", dsp.nlm.patch_radius, int),
      MC_INT("nlm.search_radius", dsp.nlm.search_radius, int),
      MC_DOUBLE("nlm.h", dsp.nlm.h),
      MC_DOUBLE("nlm.sigma_est", dsp.nlm.sigma_est),
      MC_DOUBLE("bilateral.sigma_s", dsp.bilateral.sigma_s),
      MC_DOUBLE("bilateral.sigma_c", dsp.bilateral.sigma_c),
      MC_INT("bilateral.radius", dsp.bilateral.radius, int),
      MC_INT("wavelet.levels", dsp.wavelet.levels, int),
      Key{"wavelet.wavelet",
          [](ExperimentConfig& c, const std::string& k, const std::string& v, const fs::path&) {
            if (v == "haar")
              c.dsp.wavelet.wavelet = WaveletType::kHaar;
            else if (v == "db2")
              c.dsp.wavelet.wavelet = WaveletType::kDb2;
            else
              throw UsageError("'" + k + "' expects haar or db2");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.dsp.wavelet.wavelet == WaveletType::kHaar ? "haar" : "db2");
          }},
      MC_BOOL("wavelet.all_orientations", dsp.wavelet.all_orientations),
      MC_BOOL("wavelet.subtract_noise_variance", dsp.wavelet.subtract_noise_variance),

      MC_INT("dncnn.depth", dncnn_depth, int),
      MC_INT("dncnn.width", dncnn_width, int),
      MC_INT("dncnn.patch_size", dncnn_train.patch_size, int),
      MC_INT("dncnn.patches_per_image", dncnn_train.patches_per_image, int),
      MC_INT("dncnn.batch_size", dncnn_train.batch_size, int),
      MC_INT("dncnn.epochs", dncnn_train.epochs, int),
      MC_DOUBLE("dncnn.learning_rate", dncnn_train.learning_rate),

      MC_DOUBLE("selection.snr_db", selection_snr),
      Key{"selection.denoisers",
          [](ExperimentConfig& c, const std::string&, const std::string& v, const fs::path&) {
            c.selection_denoisers = to_list(v);
          },
          [](const ExperimentConfig& c) { return join(c.selection_denoisers); }},
      MC_BOOL("evaluation.denoise", denoise),

      MC_INT("synth.devices", synth.n_devices, int),
      MC_INT("synth.speakers", synth.n_speakers, int),
      MC_DOUBLE("synth.seconds_per_speaker", synth.seconds_per_speaker),
      MC_INT("synth.train_speakers", synth.train_speakers, int),
      MC_DOUBLE("synth.level_rms", synth.level_rms),
      MC_DOUBLE("synth.background_db", synth.background_db),
      MC_INT("synth.taps", synth.device.taps, int),
      MC_DOUBLE("synth.bump_db", synth.device.bump_db),
      MC_DOUBLE("synth.max_correlation", synth.device.max_correlation),
      MC_INT("synth.speech_speakers", synth_speech.n_speakers, int),
      MC_DOUBLE("synth.speech_seconds", synth_speech.seconds_per_speaker),
      MC_DOUBLE("synth.speech_background_db", synth_speech.background_db),
  };
  return table;
}

#undef MC_DOUBLE
#undef MC_INT
#undef MC_BOOL
#undef MC_PATH

}  // namespace

std::vector<double> parse_snr_ladder(const std::string& text) {
  const std::string t = trim(text);
  if (t == "clean-only") return {kCleanSnr};
  std::vector<double> out;
  for (const auto& item : to_list(t)) {
    const double v = to_double("snr_ladder", item);
    if (std::isnan(v)) throw UsageError("snr_ladder: NaN");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("snr_ladder is empty (use clean-only for no corruption)");
  return out;
}

std::string format_snr(double snr_db) { return fmt(snr_db); }

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                      const fs::path& base_dir) {
  for (const auto& k : keys()) {
    if (key == k.name) {
      k.set(cfg, key, value, base_dir);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir, const std::string& context) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string body = line;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"') quoted = !quoted;
      if (body[i] == '#' && !quoted) {
        body.resize(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty()) continue;
    const std::string where = context + ":" + std::to_string(lineno);
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    try {
      set_config_value(cfg, key, value, base_dir);
    } catch (const UsageError& e) {
      throw UsageError(where + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_config(std::string(bytes.begin(), bytes.end()), path.parent_path(), path.string());
}

std::string encode_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : keys()) {
    std::string v = k.get(cfg);
    if (v.find_first_of("#\"") != std::string::npos || v.empty()) v = "\"" + v + "\"";
    out += std::string(k.name) + " = " + v + "\n";
  }
  return out;
}

}  // namespace micclass
