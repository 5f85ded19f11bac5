#include "drs/cli/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "drs/image_io.hpp"

namespace drs::cli {
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  s.erase(s.find_last_not_of(" \t\r") + 1);
  return s;
}

}  // namespace

int parse_label(const std::string& text) {
  if (text == "benign") return kBenign;
  if (text == "malignant") return kMalignant;
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  throw DataError("bad label '" + text + "'");
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (line_no == 1 && line.rfind("image,", 0) == 0) continue;  // header
    const auto fields = split(line, ',');
    if (fields.size() < 3 || fields.size() > 4) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected image,mask,label[,id]");
    }
    ManifestEntry e;
    e.image = base / trim(fields[0]);
    for (const std::string& m : split(trim(fields[1]), ';')) {
      if (!trim(m).empty()) e.masks.push_back(base / trim(m));
    }
    if (e.masks.empty()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": missing mask");
    e.label = parse_label(trim(fields[2]));
    e.id = fields.size() == 4 && !trim(fields[3]).empty() ? trim(fields[3]) : e.image.stem().string();
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  const fs::path base = path.parent_path().empty() ? fs::current_path() : fs::absolute(path.parent_path());
  auto rel = [&](const fs::path& p) { return fs::absolute(p).lexically_relative(base).generic_string(); };
  std::string text = "image,mask,label,id\n";
  for (const ManifestEntry& e : entries) {
    text += rel(e.image) + ",";
    for (std::size_t i = 0; i < e.masks.size(); ++i) text += (i ? ";" : "") + rel(e.masks[i]);
    text += "," + std::to_string(e.label) + "," + e.id + "\n";
  }
  write_text_atomically(path, text);
}

BinaryMask load_lesion(const ManifestEntry& entry) {
  if (entry.masks.empty()) throw DataError("entry " + entry.id + " has no mask");
  BinaryMask lesion = load_mask(entry.masks.front());
  for (std::size_t i = 1; i < entry.masks.size(); ++i) lesion = lesion | load_mask(entry.masks[i]);
  return lesion;
}

IngestResult ingest_busi(const fs::path& root) {
  IngestResult result;
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  const std::pair<const char*, int> categories[] = {{"benign", kBenign}, {"malignant", kMalignant}};
  const std::regex mask_name(R"((.*)_mask(_\d+)?)");
  for (const auto& [dir_name, label] : categories) {
    const fs::path dir = root / dir_name;
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& item : fs::directory_iterator(dir)) {
      if (item.is_regular_file() && item.path().extension() == ".png") files.push_back(item.path());
    }
    std::sort(files.begin(), files.end());
    std::map<std::string, std::vector<fs::path>> masks_by_stem;
    std::vector<fs::path> images;
    for (const fs::path& f : files) {
      std::smatch m;
      const std::string stem = f.stem().string();
      if (std::regex_match(stem, m, mask_name)) {
        masks_by_stem[m[1].str()].push_back(f);
      } else {
        images.push_back(f);
      }
    }
    for (const fs::path& image : images) {
      const std::string stem = image.stem().string();
      auto it = masks_by_stem.find(stem);
      if (it == masks_by_stem.end()) {
        result.skipped.push_back(image.string() + ": no mask");
        continue;
      }
      ManifestEntry e;
      e.image = image;
      e.masks = it->second;
      e.label = label;
      e.id = std::string(dir_name) + "/" + stem;
      result.entries.push_back(std::move(e));
    }
  }
  if (result.entries.empty()) result.warnings.push_back("no benign/malignant image-mask pairs under " + root.string());
  return result;
}

std::string file_stem_for(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  }
  return out.empty() ? "sample" : out;
}

}  // namespace drs::cli
