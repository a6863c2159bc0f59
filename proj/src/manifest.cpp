#include "avsl/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace avsl {

namespace {

using nlohmann::json;

json to_json(const ManifestEntry& e) {
    json audio_paths;
    audio_paths["positive"] = e.positive_audio_paths;
    if (!e.offscreen_audio_path.empty()) {
        audio_paths["offscreen"] = e.offscreen_audio_path;
    }
    json row{{"id", e.id},
             {"split", e.split},
             {"class_labels", e.class_labels},
             {"image_path", e.image_path},
             {"audio_paths", audio_paths},
             {"gt_paths", e.gt_paths},
             {"seed", e.seed}};
    if (!e.offscreen_class.empty()) row["offscreen_class"] = e.offscreen_class;
    return row;
}

ManifestEntry from_json(const json& j, int line_no) {
    try {
        ManifestEntry e;
        e.id = j.at("id").get<std::string>();
        e.split = j.at("split").get<std::string>();
        e.class_labels = j.at("class_labels").get<std::vector<std::string>>();
        e.image_path = j.at("image_path").get<std::string>();
        const json& ap = j.at("audio_paths");
        e.positive_audio_paths = ap.at("positive").get<std::vector<std::string>>();
        if (ap.contains("offscreen")) {
            e.offscreen_audio_path = ap.at("offscreen").get<std::string>();
        }
        if (j.contains("offscreen_class")) {
            e.offscreen_class = j.at("offscreen_class").get<std::string>();
        }
        e.gt_paths = j.at("gt_paths").get<std::vector<std::string>>();
        e.seed = j.at("seed").get<std::uint64_t>();
        return e;
    } catch (const json::exception& ex) {
        raise(ErrorKind::config_error,
              "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
}

} // namespace

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        raise(ErrorKind::io, "cannot open manifest for write: " + path.string());
    }
    for (const ManifestEntry& e : entries) {
        out << to_json(e).dump() << "\n";
    }
    if (!out) {
        raise(ErrorKind::io, "manifest write failed: " + path.string());
    }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path, bool check_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        raise(ErrorKind::io, "cannot open manifest: " + path.string());
    }
    std::vector<ManifestEntry> entries;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            raise(ErrorKind::config_error,
                  "manifest line " + std::to_string(line_no) + ": invalid JSON");
        }
        ManifestEntry e = from_json(j, line_no);
        if (!seen.insert(e.id).second) {
            raise(ErrorKind::config_error, "manifest: duplicate id " + e.id);
        }
        if (e.split != "train" && e.split != "calib" && e.split != "eval") {
            raise(ErrorKind::config_error,
                  "manifest: unknown split '" + e.split + "' for id " + e.id);
        }
        if (e.positive_audio_paths.size() != e.gt_paths.size() ||
            e.positive_audio_paths.size() != e.class_labels.size()) {
            raise(ErrorKind::config_error,
                  "manifest: id " + e.id + " has mismatched per-object path counts");
        }
        for (const std::string& label : e.class_labels) {
            if (!e.offscreen_class.empty() && label == e.offscreen_class) {
                raise(ErrorKind::config_error,
                      "manifest: id " + e.id + " lists its offscreen class in the scene");
            }
        }
        if (check_paths) {
            std::vector<std::string> all = e.positive_audio_paths;
            all.push_back(e.image_path);
            all.insert(all.end(), e.gt_paths.begin(), e.gt_paths.end());
            if (!e.offscreen_audio_path.empty()) all.push_back(e.offscreen_audio_path);
            for (const std::string& rel : all) {
                const auto p = resolve_path(path, rel);
                if (!std::filesystem::exists(p)) {
                    raise(ErrorKind::io, "manifest: missing file " + p.string());
                }
            }
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::filesystem::path resolve_path(const std::filesystem::path& manifest_path,
                                   const std::string& relative) {
    return manifest_path.parent_path() / relative;
}

} // namespace avsl
