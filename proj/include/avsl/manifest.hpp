#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avsl/errors.hpp"

namespace avsl {

// One JSONL row of a dataset manifest. Paths are stored relative to the
// manifest file and resolved against its directory on load.
struct ManifestEntry {
    std::string id;
    std::string split; // train | calib | eval
    std::vector<std::string> class_labels;
    std::string image_path;
    std::vector<std::string> positive_audio_paths; // one per scene object
    std::string offscreen_audio_path;              // empty for train rows
    std::string offscreen_class;                   // never one of class_labels
    std::vector<std::string> gt_paths;             // one per scene object
    std::uint64_t seed = 0;
};

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

// Validates unique ids, known split names and (optionally) that every
// referenced file exists next to the manifest.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path,
                                         bool check_paths = true);

std::filesystem::path resolve_path(const std::filesystem::path& manifest_path,
                                   const std::string& relative);

} // namespace avsl
