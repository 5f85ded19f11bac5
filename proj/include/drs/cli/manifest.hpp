#ifndef DRS_CLI_MANIFEST_HPP
#define DRS_CLI_MANIFEST_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "drs/image.hpp"

namespace drs::cli {

inline constexpr int kBenign = 0;
inline constexpr int kMalignant = 1;  // positive class

struct ManifestEntry {
  std::filesystem::path image;
  std::vector<std::filesystem::path> masks;  // unioned when more than one
  int label = 0;
  std::string id;
};

// CSV with header "image,mask,label,id". Several masks are joined with ';'.
// Labels are class indices or "benign"/"malignant". Relative paths resolve
// against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

int parse_label(const std::string& text);

// Union of the entry's mask files.
BinaryMask load_lesion(const ManifestEntry& entry);

struct IngestResult {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> skipped;  // one line per image without a mask
  std::vector<std::string> warnings;
};

// Scans root/benign and root/malignant (normal/ is ignored). Each image is
// paired with siblings named <stem>_mask.png or <stem>_mask_<n>.png.
IngestResult ingest_busi(const std::filesystem::path& root);

// Filesystem-safe form of an entry id.
std::string file_stem_for(const std::string& id);

}  // namespace drs::cli

#endif  // DRS_CLI_MANIFEST_HPP
