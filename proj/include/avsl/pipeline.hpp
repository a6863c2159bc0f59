#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avsl/manifest.hpp"
#include "avsl/metrics.hpp"
#include "avsl/report.hpp"
#include "avsl/retrieval.hpp"
#include "avsl/synthdata.hpp"
#include "avsl/trainer.hpp"

namespace avsl {

// A generated dataset directory: manifest + dataset.json + tensors.
struct Dataset {
    std::filesystem::path root;
    DatasetConfig config;
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split(std::string_view name) const;
};

Dataset load_dataset(const std::filesystem::path& dir);

TrainSet load_train_set(const Dataset& ds);

SceneImage load_scene_cells(const Dataset& ds, const ManifestEntry& e);
Waveform load_waveform(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

// Everything eval and retrieval need, computed in memory from a trained
// model: per-object eval records over the eval split, the calibration pool
// of negative maxima per condition over the calib split, and the pooled
// embeddings of both modalities.
struct EvalMaterials {
    std::vector<EvalRecord> records;
    std::array<std::vector<double>, 3> calib_maxima; // indexed by Condition
    std::vector<double> eval_pos_maxima;
    std::vector<EmbeddingItem> audio_items;
    std::vector<EmbeddingItem> image_items;
};

EvalMaterials compute_eval_materials(const EncoderParams& params, const AudioShape& audio_shape,
                                     const Dataset& ds);

// Assemble the report: theta from the configured calibration conditions,
// metrics over the eval split, boxplot stats for all four conditions.
ReportFile build_report(const EvalMaterials& materials, const std::vector<Condition>& calib_conditions,
                        const std::string& config_hash, const std::string& dataset_hash,
                        const std::string& timestamp);

// `embed` output: per (sample, object) row pointing at embedding and map
// tensors, JSONL, self-contained under the output directory.
struct EmbedRow {
    std::string id;
    int object = 0;
    std::string class_label;
    std::string split;
    std::string audio_emb_path;
    std::string visual_emb_path;
    std::string map_positive_path;
    std::string map_silence_path;
    std::string map_noise_path;
    std::string map_offscreen_path; // empty for train rows
    std::string gt_path;
};

void write_embed_outputs(const Checkpoint& ckpt, const Dataset& ds,
                         const std::filesystem::path& out_dir);
std::vector<EmbedRow> read_embed_manifest(const std::filesystem::path& dir);

// Rebuild EvalMaterials from an `embed` output directory (calib + eval rows).
EvalMaterials load_eval_materials(const std::filesystem::path& embed_dir);

struct RetrievalResult {
    std::string direction; // i2a | a2i
    std::vector<int> ks;
    std::vector<double> precision; // percent, aligned with ks
    std::vector<double> accuracy;
    int n_queries = 0;
};

RetrievalResult run_retrieval(const std::vector<EmbeddingItem>& audio_items,
                              const std::vector<EmbeddingItem>& image_items,
                              const std::string& direction, const std::vector<int>& ks);

void save_retrieval(const std::filesystem::path& path, const RetrievalResult& r,
                    const std::string& config_hash, const std::string& dataset_hash);

// One ablation arm: train with overrides, evaluate in memory.
struct AblationRow {
    double lambda_sn = 0.0;
    std::uint64_t seed = 0;
    MetricsReport metrics;
    double final_mean_sil_max = 0.0;
    double final_mean_noise_max = 0.0;
};

AblationRow run_arm(const Dataset& ds, TrainConfig cfg);

} // namespace avsl
