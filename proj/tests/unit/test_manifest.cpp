#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "micclass/audio.hpp"
#include "micclass/error.hpp"
#include "micclass/harness/manifest.hpp"

namespace fs = std::filesystem;
using namespace micclass;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("micclass_manifest_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void touch_wav(const fs::path& p) {
  AudioClip c;
  c.samples.assign(160, 0.01);
  save_wav(p, c);
}

// classes x speakers, one file each
fs::path make_tree(const std::string& name, int classes, int speakers) {
  const fs::path root = scratch(name);
  for (int c = 0; c < classes; ++c)
    for (int s = 0; s < speakers; ++s) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "mic%d/spk%02d/a.wav", c, s);
      touch_wav(root / buf);
    }
  return root;
}

}  // namespace

TEST(Manifest, FirstNSplitsBySpeaker) {
  const auto root = make_tree("firstn", 2, 24);
  SplitRule r = parse_split_rule("first:19");
  const Manifest m = build_manifest(root, r);
  EXPECT_EQ(m.speakers(Split::kTrain).size(), 19u);
  EXPECT_EQ(m.speakers(Split::kTest).size(), 5u);
  EXPECT_EQ(m.entries.size(), 48u);
  EXPECT_NO_THROW(validate_manifest(m, true));
}

TEST(Manifest, NoSpeakerOnBothSides) {
  const auto root = make_tree("disjoint", 3, 9);
  const Manifest m = build_manifest(root, parse_split_rule("fraction:0.6"));
  const auto tr = m.speakers(Split::kTrain), te = m.speakers(Split::kTest);
  for (const auto& s : tr) EXPECT_EQ(std::count(te.begin(), te.end(), s), 0) << s;
  EXPECT_FALSE(tr.empty());
  EXPECT_FALSE(te.empty());
}

TEST(Manifest, SingleSpeakerIsAnError) {
  const auto root = make_tree("single", 2, 1);
  EXPECT_THROW(build_manifest(root, parse_split_rule("fraction:0.5")), DataError);
}

TEST(Manifest, SidecarOrderDoesNotMatter) {
  const auto root = make_tree("sidecar", 2, 4);
  std::vector<std::string> rows;
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 4; ++s)
      rows.push_back("mic" + std::to_string(c) + "/spk0" + std::to_string(s) + "/a.wav,mic" +
                     std::to_string(c) + ",spk0" + std::to_string(s));
  const Manifest scanned = build_manifest(root, parse_split_rule("first:3"));
  std::mt19937 g(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::shuffle(rows.begin(), rows.end(), g);
    std::string csv = "path,class,speaker\n";
    for (const auto& r : rows) csv += r + "\n";
    {
      std::FILE* f = std::fopen((root / "metadata.csv").c_str(), "wb");
      std::fwrite(csv.data(), 1, csv.size(), f);
      std::fclose(f);
    }
    const Manifest m = build_manifest(root, parse_split_rule("first:3"));
    EXPECT_EQ(m.entries, scanned.entries);
  }
}

TEST(Manifest, ExplicitOverlapRejected) {
  const auto root = make_tree("overlap", 2, 3);
  EXPECT_THROW(build_manifest(root, parse_split_rule("explicit:train=spk00,spk01;test=spk01,spk02")), DataError);
  const Manifest ok = build_manifest(root, parse_split_rule("explicit:train=spk00,spk01;test=spk02"));
  EXPECT_EQ(ok.speakers(Split::kTest), std::vector<std::string>{"spk02"});
}

TEST(Manifest, ClassMissingFromTestSplit) {
  Manifest m;
  m.entries = {{"a.wav", "x", "s1", Split::kTrain}, {"b.wav", "y", "s1", Split::kTrain},
               {"c.wav", "x", "s2", Split::kTest}};
  EXPECT_THROW(validate_manifest(m, true), DataError);
  EXPECT_NO_THROW(validate_manifest(m, false));
}

TEST(Manifest, DuplicatePathAndCrossSplitSpeaker) {
  Manifest dup;
  dup.entries = {{"a.wav", "x", "s1", Split::kTrain}, {"a.wav", "x", "s2", Split::kTest}};
  EXPECT_THROW(validate_manifest(dup, false), DataError);
  Manifest cross;
  cross.entries = {{"a.wav", "x", "s1", Split::kTrain}, {"b.wav", "x", "s1", Split::kTest}};
  EXPECT_THROW(validate_manifest(cross, false), DataError);
}

TEST(Manifest, CsvRoundTrip) {
  Manifest m;
  m.entries = {{"dir with, comma/a.wav", "mic \"A\"", "s1", Split::kTrain}, {"b.wav", "mic B", "s2", Split::kTest}};
  const std::string csv = encode_manifest_csv(m);
  const Manifest back = parse_manifest_csv(csv);
  EXPECT_EQ(back.entries, m.entries);
  EXPECT_EQ(back.schema_version, 1);
  EXPECT_EQ(encode_manifest_csv(back), csv);
}

TEST(Manifest, MalformedCsv) {
  EXPECT_THROW(parse_manifest_csv("path,class,speaker,split\na.wav,x,s1\n"), DataError);
  EXPECT_THROW(parse_manifest_csv("path,class,speaker,split\na.wav,x,s1,validation\n"), DataError);
}

TEST(Manifest, SplitRuleSyntax) {
  EXPECT_THROW(parse_split_rule("half"), UsageError);
  EXPECT_THROW(parse_split_rule("fraction:1.5"), UsageError);
  EXPECT_EQ(parse_split_rule("first:4").first_n, 4);
}
