#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avsl/encoders.hpp"
#include "avsl/losses.hpp"
#include "avsl/synthdata.hpp"
#include "avsl/train_config.hpp"

namespace avsl {

struct TrainItem {
    SceneImage image;
    Waveform waveform;
    std::string class_label;
};

struct TrainSet {
    std::vector<TrainItem> items;
    AudioShape audio_shape;
    int descriptor_dim = 0;
};

// Per-epoch log row: mean losses over the epoch's steps plus a small model
// snapshot (mean max-similarity per audio condition over the train set).
struct EpochStats {
    int epoch = 0;
    double alpha = 0.0;
    LossBreakdown mean_loss;
    double mean_pos_max = 0.0;
    double mean_sil_max = 0.0;
    double mean_noise_max = 0.0;
};

struct TrainResult {
    EncoderParams params;
    std::vector<EpochStats> history;
};

// Deterministic training loop: seeded init, per-epoch similar-audio table and
// SAM mixing, seeded shuffling into fixed-size minibatches (trailing partial
// batch dropped), per-item masking/noise/transform streams derived from
// (seed, epoch, step, item).
TrainResult train(const TrainConfig& cfg, const TrainSet& data);

// Adam / SGD over the flat parameter vector.
class Optimizer {
public:
    Optimizer(const OptimizerConfig& cfg, double learning_rate, std::size_t n_params);

    void step(Vec& params, const Vec& grad);

private:
    OptimizerConfig cfg_;
    double lr_;
    Vec m_;
    Vec v_;
    long t_ = 0;
};

// Checkpoint = <prefix>.avst flat parameter tensor + <prefix>.json sidecar
// carrying the layout, the train config and the audio shape.
struct Checkpoint {
    EncoderParams params;
    TrainConfig config;
    AudioShape audio_shape;
};

void save_checkpoint(const std::filesystem::path& prefix, const EncoderParams& params,
                     const TrainConfig& cfg, const AudioShape& audio_shape);
Checkpoint load_checkpoint(const std::filesystem::path& prefix);

void save_history(const std::filesystem::path& path, const std::vector<EpochStats>& history);

// TrainConfig as a standalone JSON file (the same schema the checkpoint
// sidecar embeds under "train_config").
void save_train_config(const std::filesystem::path& path, const TrainConfig& cfg);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string train_config_json(const TrainConfig& cfg);

} // namespace avsl
