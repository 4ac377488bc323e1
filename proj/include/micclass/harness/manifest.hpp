#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace micclass {

enum class Split { kTrain, kTest };

std::string split_name(Split s);
Split parse_split(const std::string& s);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory unless absolute
  std::string class_label;
  std::string speaker_id;
  Split split = Split::kTrain;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  int schema_version = 1;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // where relative paths resolve; not serialized

  std::vector<std::string> classes() const;  // sorted, unique
  std::vector<std::string> speakers(Split s) const;
  std::vector<ManifestEntry> subset(Split s) const;
  std::filesystem::path resolve(const ManifestEntry& e) const;
};

// Throws DataError on duplicate paths or a speaker in both splits. With
// for_evaluation, every class must also appear in both splits.
void validate_manifest(const Manifest& m, bool for_evaluation);

// CSV with header `path,class,speaker,split`. Lines starting with '#' are
// comments; a leading "# schema_version=N" line sets the version.
std::string encode_manifest_csv(const Manifest& m);
Manifest parse_manifest_csv(const std::string& text, const std::string& context = "manifest");
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

struct SplitRule {
  enum class Kind { kFirstN, kFraction, kExplicit };
  Kind kind = Kind::kFraction;
  int first_n = 0;             // first N speakers (sorted ids) train
  double train_fraction = 0.8; // rounded down, at least one speaker per side
  std::vector<std::string> train_speakers;
  std::vector<std::string> test_speakers;  // explicit: unlisted speakers are dropped
};

SplitRule parse_split_rule(const std::string& text);

// Layout is root/<class>/<speaker>/<file>.wav, or a sidecar root/metadata.csv
// with columns path,class,speaker. Speakers are split globally so the same
// talker never lands on both sides, even across classes.
Manifest build_manifest(const std::filesystem::path& root, const SplitRule& rule,
                        bool for_evaluation = true);

}  // namespace micclass
