#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mispron/error.hpp"

namespace mispron {

inline constexpr int kMaxClasses = 29;  // the phoneme inventory this tool targets

enum class EntryOrigin { original, augmented };

inline const char* origin_name(EntryOrigin o) {
  return o == EntryOrigin::original ? "original" : "augmented";
}

struct CorpusEntry {
  std::string path;
  std::string label;
  std::string speaker;   // "<speaker>_..." filename prefix, or "unknown"
  std::string group;     // source-recording identity; augmented clips share it
  EntryOrigin origin = EntryOrigin::original;
};

struct CorpusManifest {
  std::vector<CorpusEntry> entries;
  std::vector<std::string> warnings;

  std::vector<std::string> class_names() const {
    std::set<std::string> labels;
    for (const auto& e : entries) labels.insert(e.label);
    return {labels.begin(), labels.end()};
  }

  std::size_t count_originals() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.origin == EntryOrigin::original ? 1 : 0;
    return n;
  }
};

namespace detail {

// "<stem>.aug-<technique>" marks a derivative; the group is the source stem.
inline bool split_aug_suffix(const std::string& stem, std::string& base, std::string& technique) {
  const std::string marker = ".aug-";
  const auto pos = stem.rfind(marker);
  if (pos == std::string::npos) return false;
  base = stem.substr(0, pos);
  technique = stem.substr(pos + marker.size());
  return !base.empty() && !technique.empty();
}

inline std::string speaker_from_stem(const std::string& stem) {
  const auto pos = stem.find('_');
  if (pos == std::string::npos || pos == 0) return "unknown";
  return stem.substr(0, pos);
}

inline void check_csv_field(const std::string& field) {
  if (field.find(',') != std::string::npos || field.find('\n') != std::string::npos) {
    raise(ErrorKind::format, "bad_manifest_field",
          "manifest fields may not contain commas or newlines: " + field);
  }
}

}  // namespace detail

// Walks a directory-per-class tree and lists every WAV deterministically
// (lexicographic by label, then path). Derivative files written by the
// augmenter are recognized by their ".aug-<technique>" suffix.
inline CorpusManifest scan_corpus(const std::string& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    raise(ErrorKind::io, "io_error", "corpus root is not a directory: " + root);
  }

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) {
    raise(ErrorKind::data, "empty_corpus", "no class directories under " + root);
  }
  if (class_dirs.size() > kMaxClasses) {
    raise(ErrorKind::data, "too_many_classes",
          "found " + std::to_string(class_dirs.size()) + " class directories; the supported maximum is " +
              std::to_string(kMaxClasses));
  }

  CorpusManifest manifest;
  for (const auto& dir : class_dirs) {
    const std::string label = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file() && f.path().extension() == ".wav") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      manifest.warnings.push_back("class directory has no WAV files: " + dir.string());
      continue;
    }
    for (const auto& file : files) {
      CorpusEntry entry;
      entry.path = file.string();
      entry.label = label;
      const std::string stem = file.stem().string();
      std::string base, technique;
      if (detail::split_aug_suffix(stem, base, technique)) {
        entry.origin = EntryOrigin::augmented;
        entry.group = base;
        entry.speaker = detail::speaker_from_stem(base);
      } else {
        entry.origin = EntryOrigin::original;
        entry.group = stem;
        entry.speaker = detail::speaker_from_stem(stem);
      }
      manifest.entries.push_back(std::move(entry));
    }
  }
  if (manifest.entries.empty()) {
    raise(ErrorKind::data, "empty_corpus", "no WAV files under " + root);
  }
  return manifest;
}

inline void save_manifest_csv(const CorpusManifest& manifest, const std::string& path) {
  std::ostringstream out;
  out << "path,label,speaker,group,origin\n";
  for (const auto& e : manifest.entries) {
    detail::check_csv_field(e.path);
    detail::check_csv_field(e.label);
    detail::check_csv_field(e.speaker);
    detail::check_csv_field(e.group);
    out << e.path << ',' << e.label << ',' << e.speaker << ',' << e.group << ','
        << origin_name(e.origin) << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) raise(ErrorKind::io, "io_error", "cannot write manifest: " + path);
  file << out.str();
}

inline CorpusManifest load_manifest_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) raise(ErrorKind::io, "io_error", "cannot open manifest: " + path);
  std::string line;
  if (!std::getline(file, line) || line != "path,label,speaker,group,origin") {
    raise(ErrorKind::format, "bad_manifest", "unexpected manifest header in " + path);
  }
  CorpusManifest manifest;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 5) {
      raise(ErrorKind::format, "bad_manifest", "expected 5 fields, got " +
                                                   std::to_string(fields.size()) + ": " + line);
    }
    CorpusEntry entry;
    entry.path = fields[0];
    entry.label = fields[1];
    entry.speaker = fields[2];
    entry.group = fields[3];
    if (fields[4] == "original") {
      entry.origin = EntryOrigin::original;
    } else if (fields[4] == "augmented") {
      entry.origin = EntryOrigin::augmented;
    } else {
      raise(ErrorKind::format, "bad_manifest", "unknown origin: " + fields[4]);
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

}  // namespace mispron
