#include "micclass/container.hpp"

#include <zlib.h>

#include <cmath>
#include <sstream>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"

namespace micclass {

namespace {

std::uint32_t crc_of(const std::vector<std::uint8_t>& b) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads
  std::size_t off = 0;
  while (off < b.size()) {
    const std::size_t n = std::min<std::size_t>(b.size() - off, 1u << 30);
    c = crc32(c, b.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

void finish(ByteReader& r, const char* what) {
  if (!r.at_end()) throw ModelError(std::string(what) + ": trailing bytes in section payload");
}

void write_stft(ByteWriter& w, const StftConfig& c) {
  w.i32(c.n_fft);
  w.i32(c.hop);
  w.u8(static_cast<std::uint8_t>(c.window));
  w.f64(c.db_floor);
  w.f64(c.db_ceiling);
}

StftConfig read_stft(ByteReader& r) {
  StftConfig c;
  c.n_fft = r.i32();
  c.hop = r.i32();
  const auto win = r.u8();
  if (win > 1) throw ModelError("speech model: unknown window type");
  c.window = static_cast<WindowType>(win);
  c.db_floor = r.f64();
  c.db_ceiling = r.f64();
  return c;
}

void write_mfcc(ByteWriter& w, const MfccConfig& c) {
  w.i32(c.n_mels);
  w.i32(c.n_coeffs);
  w.f64(c.fmin);
  w.f64(c.fmax);
  w.u8(c.rasta ? 1 : 0);
  w.u8(c.rasta_center ? 1 : 0);
}

MfccConfig read_mfcc(ByteReader& r) {
  MfccConfig c;
  c.n_mels = r.i32();
  c.n_coeffs = r.i32();
  c.fmin = r.f64();
  c.fmax = r.f64();
  c.rasta = r.u8() != 0;
  c.rasta_center = r.u8() != 0;
  return c;
}

}  // namespace

const char* section_type_name(SectionType t) {
  switch (t) {
    case SectionType::kSpeechModel: return "speech_model";
    case SectionType::kSvm: return "svm";
    case SectionType::kDnCnn: return "dncnn";
    case SectionType::kDenoiserParams: return "denoiser_params";
  }
  return "unknown";
}

const Section* ModelContainer::find(SectionType t, const std::string& name) const {
  for (const auto& s : sections) {
    if (s.type == t && (name.empty() || s.name == name)) return &s;
  }
  return nullptr;
}

const Section& ModelContainer::require(SectionType t, const std::string& name) const {
  const Section* s = find(t, name);
  if (!s) {
    std::string what = std::string("model file has no ") + section_type_name(t) + " section";
    if (!name.empty()) what += " named '" + name + "'";
    throw ModelError(what);
  }
  return *s;
}

void ModelContainer::put(Section s) {
  for (auto& e : sections) {
    if (e.type == s.type && e.name == s.name) {
      e = std::move(s);
      return;
    }
  }
  sections.push_back(std::move(s));
}

std::vector<std::uint8_t> encode_container(const ModelContainer& c) {
  ByteWriter w;
  w.raw("MFML", 4);
  w.u32(c.version);
  w.u32(static_cast<std::uint32_t>(c.sections.size()));
  for (const auto& s : c.sections) {
    w.u8(static_cast<std::uint8_t>(s.type));
    w.str(s.name);
    w.u64(s.payload.size());
    w.bytes(s.payload);
    w.u32(crc_of(s.payload));
  }
  return w.take();
}

ModelContainer decode_container(const std::vector<std::uint8_t>& bytes, const std::string& context) {
  ByteReader r(bytes, context);
  r.expect_magic("MFML");
  ModelContainer c;
  c.version = r.u32();
  if (c.version > kModelContainerVersion) {
    throw ModelError(context + ": container version " + std::to_string(c.version) +
                     " is newer than supported version " + std::to_string(kModelContainerVersion));
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    Section s;
    const auto type = r.u8();
    if (type < 1 || type > 4) {
      throw ModelError(context + ": section " + std::to_string(i) + " has unknown type " +
                       std::to_string(type));
    }
    s.type = static_cast<SectionType>(type);
    s.name = r.str();
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) {
      throw ModelError(context + ": section '" + s.name + "' (" + section_type_name(s.type) +
                       ") is truncated");
    }
    s.payload.assign(r.cursor(), r.cursor() + len);
    r.skip(len);
    const std::uint32_t crc = r.u32();
    if (crc != crc_of(s.payload)) {
      throw ModelError(context + ": checksum mismatch in section '" + s.name + "' (" +
                       section_type_name(s.type) + ")");
    }
    c.sections.push_back(std::move(s));
  }
  if (!r.at_end()) throw ModelError(context + ": trailing bytes after last section");
  return c;
}

void save_model(const std::filesystem::path& path, const ModelContainer& c) {
  write_file_bytes(path, encode_container(c));
}

ModelContainer load_model(const std::filesystem::path& path) {
  return decode_container(read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> encode_speech_model(const SpeechModel& m) {
  ByteWriter w;
  write_stft(w, m.stft_cfg);
  write_mfcc(w, m.mfcc_cfg);
  w.matrix(m.gmm.means);
  w.matrix(m.gmm.variances);
  w.f64s(m.gmm.priors);
  w.matrix(m.avg_spectrum.rows);
  w.f64s(m.avg_spectrum.occupancy);
  w.u64(m.avg_spectrum.used.size());
  for (auto u : m.avg_spectrum.used) w.u8(u);
  return w.take();
}

SpeechModel decode_speech_model(const std::vector<std::uint8_t>& payload) {
  ByteReader r(payload, "speech_model");
  SpeechModel m;
  m.stft_cfg = read_stft(r);
  m.mfcc_cfg = read_mfcc(r);
  m.gmm.means = r.matrix();
  m.gmm.variances = r.matrix();
  m.gmm.priors = r.f64s();
  m.avg_spectrum.rows = r.matrix();
  m.avg_spectrum.occupancy = r.f64s();
  const std::uint64_t n = r.u64();
  if (n > r.remaining()) throw ModelError("speech_model: truncated data");
  m.avg_spectrum.used.resize(n);
  for (auto& u : m.avg_spectrum.used) u = r.u8();
  finish(r, "speech_model");
  const std::size_t mix = m.gmm.means.rows();
  if (!m.gmm.variances.same_shape(m.gmm.means) || m.gmm.priors.size() != mix ||
      m.avg_spectrum.rows.rows() != mix || m.avg_spectrum.occupancy.size() != mix ||
      m.avg_spectrum.used.size() != mix) {
    throw ModelError("speech_model: inconsistent mixture counts");
  }
  return m;
}

std::vector<std::uint8_t> encode_svm(const SvmModel& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.classes.size()));
  for (const auto& c : m.classes) w.str(c);
  w.f64(m.gamma);
  w.f64(m.C);
  w.f64s(m.norm.mean);
  w.f64s(m.norm.scale);
  w.u32(static_cast<std::uint32_t>(m.machines.size()));
  for (const auto& b : m.machines) {
    w.u32(static_cast<std::uint32_t>(b.pos));
    w.u32(static_cast<std::uint32_t>(b.neg));
    w.matrix(b.support);
    w.f64s(b.alpha);
    w.f64s(b.y);
    w.f64(b.bias);
    w.f64(b.kkt_gap);
    w.u64(static_cast<std::uint64_t>(b.iterations));
  }
  return w.take();
}

SvmModel decode_svm(const std::vector<std::uint8_t>& payload) {
  ByteReader r(payload, "svm");
  SvmModel m;
  const std::uint32_t k = r.u32();
  for (std::uint32_t i = 0; i < k; ++i) m.classes.push_back(r.str());
  m.gamma = r.f64();
  m.C = r.f64();
  m.norm.mean = r.f64s();
  m.norm.scale = r.f64s();
  const std::uint32_t n = r.u32();
  if (n != k * (k - 1) / 2) throw ModelError("svm: machine count does not match class count");
  for (std::uint32_t i = 0; i < n; ++i) {
    BinarySvm b;
    b.pos = r.u32();
    b.neg = r.u32();
    b.support = r.matrix();
    b.alpha = r.f64s();
    b.y = r.f64s();
    b.bias = r.f64();
    b.kkt_gap = r.f64();
    b.iterations = static_cast<long>(r.u64());
    if (b.pos >= k || b.neg >= k || b.alpha.size() != b.support.rows() ||
        b.y.size() != b.support.rows() ||
        (b.support.rows() > 0 && b.support.cols() != m.norm.mean.size())) {
      throw ModelError("svm: malformed binary machine " + std::to_string(i));
    }
    m.machines.push_back(std::move(b));
  }
  finish(r, "svm");
  if (m.norm.scale.size() != m.norm.mean.size()) throw ModelError("svm: malformed normalization");
  return m;
}

std::vector<std::uint8_t> encode_dncnn(const DnCnnRecord& rec) {
  ByteWriter w;
  const auto& m = rec.model;
  w.i32(m.depth);
  w.i32(m.width);
  w.u32(static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& l : m.layers) {
    w.u32(static_cast<std::uint32_t>(l.in_ch));
    w.u32(static_cast<std::uint32_t>(l.out_ch));
    w.f64s(l.weight);
    w.f64s(l.bias);
  }
  const auto& t = rec.train;
  w.i32(t.patch_size);
  w.i32(t.patches_per_image);
  w.i32(t.batch_size);
  w.i32(t.epochs);
  w.f64(t.learning_rate);
  w.f64(t.beta1);
  w.f64(t.beta2);
  w.f64(t.epsilon);
  w.u64(t.seed);
  w.f64(t.noise_sigma_min);
  w.f64(t.noise_sigma_max);
  w.f64(rec.snr_db);
  w.f64s(rec.epoch_loss);
  return w.take();
}

DnCnnRecord decode_dncnn(const std::vector<std::uint8_t>& payload) {
  ByteReader r(payload, "dncnn");
  DnCnnRecord rec;
  auto& m = rec.model;
  m.depth = r.i32();
  m.width = r.i32();
  const std::uint32_t n = r.u32();
  if (m.depth < 2 || n != static_cast<std::uint32_t>(m.depth)) {
    throw ModelError("dncnn: layer count does not match depth");
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    Conv2d l;
    l.in_ch = r.u32();
    l.out_ch = r.u32();
    l.weight = r.f64s();
    l.bias = r.f64s();
    if (l.weight.size() != l.in_ch * l.out_ch * 9 || l.bias.size() != l.out_ch) {
      throw ModelError("dncnn: malformed layer " + std::to_string(i));
    }
    if (i > 0 && l.in_ch != m.layers.back().out_ch) {
      throw ModelError("dncnn: channel mismatch at layer " + std::to_string(i));
    }
    m.layers.push_back(std::move(l));
  }
  if (m.layers.front().in_ch != 1 || m.layers.back().out_ch != 1) {
    throw ModelError("dncnn: network must map one channel to one channel");
  }
  auto& t = rec.train;
  t.patch_size = r.i32();
  t.patches_per_image = r.i32();
  t.batch_size = r.i32();
  t.epochs = r.i32();
  t.learning_rate = r.f64();
  t.beta1 = r.f64();
  t.beta2 = r.f64();
  t.epsilon = r.f64();
  t.seed = r.u64();
  t.noise_sigma_min = r.f64();
  t.noise_sigma_max = r.f64();
  rec.snr_db = r.f64();
  rec.epoch_loss = r.f64s();
  finish(r, "dncnn");
  return rec;
}

std::vector<std::uint8_t> encode_denoiser_params(const DenoiserParams& p) {
  ByteWriter w;
  w.f64(p.tv.lambda);
  w.i32(p.tv.max_iters);
  w.f64(p.tv.tol);
  w.i32(p.nlm.patch_radius);
  w.i32(p.nlm.search_radius);
  w.f64(p.nlm.h);
  w.f64(p.nlm.sigma_est);
  w.f64(p.bilateral.sigma_s);
  w.f64(p.bilateral.sigma_c);
  w.i32(p.bilateral.radius);
  w.i32(p.wavelet.levels);
  w.u8(static_cast<std::uint8_t>(p.wavelet.wavelet));
  w.u8(p.wavelet.all_orientations ? 1 : 0);
  w.u8(p.wavelet.subtract_noise_variance ? 1 : 0);
  return w.take();
}

DenoiserParams decode_denoiser_params(const std::vector<std::uint8_t>& payload) {
  ByteReader r(payload, "denoiser_params");
  DenoiserParams p;
  p.tv.lambda = r.f64();
  p.tv.max_iters = r.i32();
  p.tv.tol = r.f64();
  p.nlm.patch_radius = r.i32();
  p.nlm.search_radius = r.i32();
  p.nlm.h = r.f64();
  p.nlm.sigma_est = r.f64();
  p.bilateral.sigma_s = r.f64();
  p.bilateral.sigma_c = r.f64();
  p.bilateral.radius = r.i32();
  p.wavelet.levels = r.i32();
  const auto wt = r.u8();
  if (wt > 1) throw ModelError("denoiser_params: unknown wavelet");
  p.wavelet.wavelet = static_cast<WaveletType>(wt);
  p.wavelet.all_orientations = r.u8() != 0;
  p.wavelet.subtract_noise_variance = r.u8() != 0;
  finish(r, "denoiser_params");
  return p;
}

std::string describe(const ModelContainer& c) {
  std::ostringstream os;
  os << "MFML version " << c.version << ", " << c.sections.size() << " section(s)\n";
  for (const auto& s : c.sections) {
    os << "  [" << section_type_name(s.type) << "] '" << s.name << "' " << s.payload.size()
       << " bytes, crc32 " << std::hex << crc_of(s.payload) << std::dec << "\n";
    switch (s.type) {
      case SectionType::kSpeechModel: {
        const auto m = decode_speech_model(s.payload);
        std::size_t used = 0;
        for (auto u : m.avg_spectrum.used) used += u;
        os << "    gmm " << m.gmm.mixtures() << " mixtures x " << m.gmm.dim() << " dims, "
           << used << " dictionary rows used, " << m.avg_spectrum.rows.cols() << " bins\n";
        break;
      }
      case SectionType::kSvm: {
        const auto m = decode_svm(s.payload);
        std::size_t sv = 0;
        for (const auto& b : m.machines) sv += b.support.rows();
        os << "    " << m.classes.size() << " classes, " << m.machines.size()
           << " machines, " << sv << " support vectors, gamma " << m.gamma << ", C " << m.C
           << "\n";
        break;
      }
      case SectionType::kDnCnn: {
        const auto r = decode_dncnn(s.payload);
        os << "    depth " << r.model.depth << ", width " << r.model.width << ", snr "
           << r.snr_db << " dB, " << r.train.epochs << " epochs";
        if (!r.epoch_loss.empty()) os << ", final loss " << r.epoch_loss.back();
        os << "\n";
        break;
      }
      case SectionType::kDenoiserParams: {
        const auto p = decode_denoiser_params(s.payload);
        os << "    tv lambda " << p.tv.lambda << "; nlm h " << p.nlm.h << "; bilateral sigma_s "
           << p.bilateral.sigma_s << "; wavelet levels " << p.wavelet.levels << "\n";
        break;
      }
    }
  }
  return os.str();
}

}  // namespace micclass
