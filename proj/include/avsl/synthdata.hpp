#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avsl/core.hpp"
#include "avsl/metrics.hpp"
#include "avsl/rng.hpp"
#include "avsl/thresholding.hpp"

namespace avsl {

using Waveform = std::vector<double>;

// Simplified band-energy front-end: non-overlapping frames, one energy per
// (frame, band), band b reading out the energy of DFT bin b+1 of the frame.
struct AudioShape {
    int frame_len = 64;
    int frames = 16;
    int bands = 8;

    int waveform_len() const { return frame_len * frames; }
};

struct AudioFeatures {
    int frames = 0;
    int bands = 0;
    Vec e; // row-major (frame, band), non-negative

    AudioFeatures() = default;
    AudioFeatures(int frames_, int bands_)
        : frames(frames_), bands(bands_), e(static_cast<std::size_t>(frames_) * bands_, 0.0) {}

    double& at(int t, int b) { return e[static_cast<std::size_t>(t) * bands + b]; }
    double at(int t, int b) const { return e[static_cast<std::size_t>(t) * bands + b]; }
    int size() const { return frames * bands; }
};

struct SceneObject {
    std::string class_label;
    BinaryMask mask; // exact blob cells at grid resolution
};

// Grid of per-cell feature descriptors; objects are rectangular blobs carrying
// their class signature, the rest is background texture.
struct SceneImage {
    int h = 0;
    int w = 0;
    int d = 0;
    Vec cells; // row-major (y, x, d)
    std::vector<SceneObject> objects;

    SceneImage() = default;
    SceneImage(int h_, int w_, int d_)
        : h(h_), w(w_), d(d_), cells(static_cast<std::size_t>(h_) * w_ * d_, 0.0) {}

    std::span<double> cell(int y, int x) {
        return {cells.data() + (static_cast<std::size_t>(y) * w + x) * d,
                static_cast<std::size_t>(d)};
    }
    std::span<const double> cell(int y, int x) const {
        return {cells.data() + (static_cast<std::size_t>(y) * w + x) * d,
                static_cast<std::size_t>(d)};
    }
};

struct SynthConfig {
    int n_classes = 3;
    int grid_h = 8;
    int grid_w = 8;
    int descriptor_dim = 12;
    int objects_per_scene = 1;
    int blob_min = 2;
    int blob_max = 3;
    AudioShape audio;
    double max_signature_cosine = 0.5;
};

Waveform gen_silence(int length);

// I.i.d. standard normal samples from the counter-based stream, so the bytes
// are identical on every platform.
Waveform gen_noise(int length, std::uint64_t seed);

AudioFeatures featurize(const Waveform& w, const AudioShape& shape);

// Deterministic per-class signatures plus seeded scene/audio synthesis. The
// signature tables are a pure function of the config.
class SynthGenerator {
public:
    explicit SynthGenerator(SynthConfig cfg);

    const SynthConfig& config() const { return cfg_; }
    const std::vector<std::string>& class_labels() const { return labels_; }

    // Clean band-energy profile of a class (no jitter).
    const Vec& audio_signature(const std::string& label) const;
    const Vec& visual_signature(const std::string& label) const;

    Waveform gen_audio(const std::string& label, std::uint64_t seed) const;

    // One rectangular blob per listed class at seeded non-overlapping
    // positions; ground truths are exactly the blob cells.
    SceneImage gen_scene(std::span<const std::string> labels, std::uint64_t seed) const;

private:
    int class_index(const std::string& label) const;

    SynthConfig cfg_;
    std::vector<std::string> labels_;
    std::vector<Vec> audio_sigs_;  // energy domain, length bands
    std::vector<Vec> visual_sigs_; // descriptor domain, length descriptor_dim
};

struct DatasetConfig {
    SynthConfig synth;
    int n_train = 200;
    int n_calib = 32;
    int n_eval = 64;
    std::uint64_t seed = 1;
};

// Writes AVST tensors plus a JSONL manifest (train/calib/eval splits) under
// out_dir. (config, seed) fully determines every emitted byte; samples are
// generated in parallel from per-sample derived seeds.
void gen_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir);

void save_dataset_config(const std::filesystem::path& path, const DatasetConfig& cfg);
DatasetConfig load_dataset_config(const std::filesystem::path& path);

} // namespace avsl
