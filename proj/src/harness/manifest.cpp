#include "micclass/harness/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "micclass/binary_io.hpp"
#include "micclass/error.hpp"

namespace micclass {

namespace fs = std::filesystem;

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "' (expected train or test)");
}

std::vector<std::string> Manifest::classes() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.class_label);
  return {s.begin(), s.end()};
}

std::vector<std::string> Manifest::speakers(Split sp) const {
  std::set<std::string> s;
  for (const auto& e : entries)
    if (e.split == sp) s.insert(e.speaker_id);
  return {s.begin(), s.end()};
}

std::vector<ManifestEntry> Manifest::subset(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

fs::path Manifest::resolve(const ManifestEntry& e) const {
  const fs::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

void validate_manifest(const Manifest& m, bool for_evaluation) {
  std::set<std::string> paths;
  std::map<std::string, Split> speaker_side;
  for (const auto& e : m.entries) {
    if (e.path.empty() || e.class_label.empty() || e.speaker_id.empty())
      throw DataError("manifest entry with an empty field");
    if (!paths.insert(e.path).second) throw DataError("duplicate manifest path '" + e.path + "'");
    const auto [it, fresh] = speaker_side.emplace(e.speaker_id, e.split);
    if (!fresh && it->second != e.split)
      throw DataError("speaker '" + e.speaker_id + "' appears in both splits");
  }
  if (!for_evaluation) return;
  if (m.entries.empty()) throw DataError("manifest is empty");
  std::set<std::string> train, test;
  for (const auto& e : m.entries) (e.split == Split::kTrain ? train : test).insert(e.class_label);
  for (const auto& c : m.classes()) {
    if (!train.count(c)) throw DataError("class '" + c + "' missing from the train split");
    if (!test.count(c)) throw DataError("class '" + c + "' missing from the test split");
  }
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw DataError(where + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

}  // namespace

std::string encode_manifest_csv(const Manifest& m) {
  std::ostringstream os;
  os << "# schema_version=" << m.schema_version << "\n";
  os << "path,class,speaker,split\n";
  for (const auto& e : m.entries) {
    os << csv_field(e.path) << ',' << csv_field(e.class_label) << ',' << csv_field(e.speaker_id)
       << ',' << split_name(e.split) << '\n';
  }
  return os.str();
}

Manifest parse_manifest_csv(const std::string& text, const std::string& context) {
  Manifest m;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = context + ":" + std::to_string(lineno);
    if (line[0] == '#') {
      const auto pos = line.find("schema_version=");
      if (pos != std::string::npos) {
        try {
          m.schema_version = std::stoi(line.substr(pos + 15));
        } catch (const std::exception&) {
          throw DataError(where + ": bad schema_version");
        }
        if (m.schema_version > 1) throw DataError(where + ": manifest schema newer than supported");
      }
      continue;
    }
    auto fields = split_csv_line(line, where);
    for (auto& f : fields) f = trim(f);
    if (!header) {
      if (fields != std::vector<std::string>{"path", "class", "speaker", "split"})
        throw DataError(where + ": expected header path,class,speaker,split");
      header = true;
      continue;
    }
    if (fields.size() != 4) throw DataError(where + ": expected 4 fields");
    ManifestEntry e{fields[0], fields[1], fields[2], Split::kTrain};
    try {
      e.split = parse_split(fields[3]);
    } catch (const DataError& err) {
      throw DataError(where + ": " + err.what());
    }
    m.entries.push_back(std::move(e));
  }
  if (!header) throw DataError(context + ": missing header");
  validate_manifest(m, false);
  return m;
}

Manifest load_manifest(const fs::path& path) {
  Manifest m = parse_manifest_csv(read_text(path), path.string());
  m.base_dir = path.parent_path();
  return m;
}

void save_manifest(const fs::path& path, const Manifest& m) {
  const std::string text = encode_manifest_csv(m);
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

SplitRule parse_split_rule(const std::string& text) {
  SplitRule r;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto list = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  };
  try {
    if (kind == "first") {
      r.kind = SplitRule::Kind::kFirstN;
      r.first_n = std::stoi(arg);
      return r;
    }
    if (kind == "fraction") {
      r.kind = SplitRule::Kind::kFraction;
      r.train_fraction = std::stod(arg);
      if (r.train_fraction > 0.0 && r.train_fraction < 1.0) return r;
    }
  } catch (const std::exception&) {
    throw UsageError("bad split rule '" + text + "'");
  }
  if (kind == "explicit") {
    // explicit:train=a,b;test=c,d
    r.kind = SplitRule::Kind::kExplicit;
    std::istringstream is(arg);
    std::string part;
    while (std::getline(is, part, ';')) {
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw UsageError("bad split rule '" + text + "'");
      const std::string side = trim(part.substr(0, eq));
      if (side == "train")
        r.train_speakers = list(part.substr(eq + 1));
      else if (side == "test")
        r.test_speakers = list(part.substr(eq + 1));
      else
        throw UsageError("bad split rule '" + text + "'");
    }
    return r;
  }
  throw UsageError("bad split rule '" + text + "' (use first:N, fraction:F or explicit:train=..;test=..)");
}

namespace {

struct Item {
  std::string path, cls, speaker;
};

std::vector<Item> scan_layout(const fs::path& root) {
  std::vector<Item> items;
  const fs::path sidecar = root / "metadata.csv";
  if (fs::exists(sidecar)) {
    std::istringstream is(read_text(sidecar));
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const std::string where = sidecar.string() + ":" + std::to_string(lineno);
      auto f = split_csv_line(line, where);
      for (auto& x : f) x = trim(x);
      if (!header) {
        if (f != std::vector<std::string>{"path", "class", "speaker"})
          throw DataError(where + ": expected header path,class,speaker");
        header = true;
        continue;
      }
      if (f.size() != 3) throw DataError(where + ": expected 3 fields");
      items.push_back({f[0], f[1], f[2]});
    }
    return items;
  }
  if (!fs::is_directory(root)) throw DataError("'" + root.string() + "' is not a directory");
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".wav") continue;
    const fs::path rel = fs::relative(entry.path(), root);
    std::vector<std::string> parts;
    for (const auto& p : rel) parts.push_back(p.string());
    if (parts.size() != 3)
      throw DataError("'" + rel.generic_string() + "' does not follow class/speaker/file layout");
    items.push_back({rel.generic_string(), parts[0], parts[1]});
  }
  return items;
}

}  // namespace

Manifest build_manifest(const fs::path& root, const SplitRule& rule, bool for_evaluation) {
  auto items = scan_layout(root);
  // directory iteration order is unspecified; everything downstream keys off sorted paths
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.path < b.path; });
  if (items.empty()) throw DataError("no audio files under '" + root.string() + "'");

  std::set<std::string> speaker_set;
  for (const auto& it : items) speaker_set.insert(it.speaker);
  const std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());
  if (for_evaluation && speakers.size() < 2)
    throw DataError("a speaker-wise split needs at least two speakers");

  std::set<std::string> train, test;
  switch (rule.kind) {
    case SplitRule::Kind::kFirstN: {
      if (rule.first_n < 0 || static_cast<std::size_t>(rule.first_n) > speakers.size())
        throw UsageError("split rule asks for " + std::to_string(rule.first_n) + " train speakers, only " +
                         std::to_string(speakers.size()) + " exist");
      for (std::size_t i = 0; i < speakers.size(); ++i)
        (static_cast<int>(i) < rule.first_n ? train : test).insert(speakers[i]);
      break;
    }
    case SplitRule::Kind::kFraction: {
      if (!(rule.train_fraction > 0.0 && rule.train_fraction < 1.0))
        throw UsageError("train fraction must lie in (0, 1)");
      auto n = static_cast<std::size_t>(rule.train_fraction * static_cast<double>(speakers.size()));
      n = std::clamp<std::size_t>(n, 1, speakers.size() > 1 ? speakers.size() - 1 : 1);
      for (std::size_t i = 0; i < speakers.size(); ++i) (i < n ? train : test).insert(speakers[i]);
      break;
    }
    case SplitRule::Kind::kExplicit: {
      train.insert(rule.train_speakers.begin(), rule.train_speakers.end());
      for (const auto& s : rule.test_speakers) {
        if (train.count(s)) throw DataError("speaker '" + s + "' listed in both splits");
        test.insert(s);
      }
      break;
    }
  }

  Manifest m;
  m.base_dir = root;
  for (const auto& it : items) {
    if (train.count(it.speaker))
      m.entries.push_back({it.path, it.cls, it.speaker, Split::kTrain});
    else if (test.count(it.speaker))
      m.entries.push_back({it.path, it.cls, it.speaker, Split::kTest});
  }
  validate_manifest(m, for_evaluation);
  return m;
}

}  // namespace micclass
