#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "micclass/cnn.hpp"
#include "micclass/denoise_dsp.hpp"
#include "micclass/speech_model.hpp"
#include "micclass/svm.hpp"

namespace micclass {

// "MFML" model file: a list of typed sections, each with a CRC-32 of its payload.
//   magic, u32 version, u32 section count,
//   per section: u8 type, str name, u64 length, payload, u32 crc32(payload)
inline constexpr std::uint32_t kModelContainerVersion = 1;

enum class SectionType : std::uint8_t {
  kSpeechModel = 1,
  kSvm = 2,
  kDnCnn = 3,
  kDenoiserParams = 4,
};

const char* section_type_name(SectionType t);

struct Section {
  SectionType type = SectionType::kSpeechModel;
  std::string name;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Section&, const Section&) = default;
};

struct ModelContainer {
  std::uint32_t version = kModelContainerVersion;
  std::vector<Section> sections;

  // First section of the given type (and name, when non-empty).
  const Section* find(SectionType t, const std::string& name = "") const;
  const Section& require(SectionType t, const std::string& name = "") const;
  void put(Section s);  // replaces a section with the same type and name

  friend bool operator==(const ModelContainer&, const ModelContainer&) = default;
};

std::vector<std::uint8_t> encode_container(const ModelContainer& c);
ModelContainer decode_container(const std::vector<std::uint8_t>& bytes,
                                const std::string& context = "model");
void save_model(const std::filesystem::path& path, const ModelContainer& c);
ModelContainer load_model(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_speech_model(const SpeechModel& m);
SpeechModel decode_speech_model(const std::vector<std::uint8_t>& payload);

std::vector<std::uint8_t> encode_svm(const SvmModel& m);
SvmModel decode_svm(const std::vector<std::uint8_t>& payload);

struct DnCnnRecord {
  DnCnnModel model;
  TrainConfig train;          // provenance
  double snr_db = 0.0;        // training SNR; infinity for image-domain sigma training
  std::vector<double> epoch_loss;

  friend bool operator==(const DnCnnRecord&, const DnCnnRecord&) = default;
};

std::vector<std::uint8_t> encode_dncnn(const DnCnnRecord& r);
DnCnnRecord decode_dncnn(const std::vector<std::uint8_t>& payload);

struct DenoiserParams {
  TvParams tv;
  NlmParams nlm;
  BilateralParams bilateral;
  WaveletParams wavelet;
};

std::vector<std::uint8_t> encode_denoiser_params(const DenoiserParams& p);
DenoiserParams decode_denoiser_params(const std::vector<std::uint8_t>& payload);

// Human-readable summary of every section.
std::string describe(const ModelContainer& c);

}  // namespace micclass
