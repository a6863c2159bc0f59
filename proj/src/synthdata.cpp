#include "avsl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "avsl/manifest.hpp"
#include "avsl/parallel.hpp"
#include "avsl/tensor_io.hpp"

namespace avsl {

namespace {

// Seed-derivation tags; fixed constants so streams never collide.
constexpr std::uint64_t kTagScene = 0x5C31;
constexpr std::uint64_t kTagAudio = 0xA001;
constexpr std::uint64_t kTagOffscreen = 0x0FF5;
constexpr std::uint64_t kTagClasses = 0xC1A5;
constexpr std::uint64_t kSplitTags[3] = {0x7781, 0x7782, 0x7783}; // train, calib, eval

} // namespace

Waveform gen_silence(int length) {
    return Waveform(static_cast<std::size_t>(length), 0.0);
}

Waveform gen_noise(int length, std::uint64_t seed) {
    if (length < 1) {
        raise(ErrorKind::config_error, "gen_noise: length must be >= 1");
    }
    Rng rng(seed);
    Waveform w(static_cast<std::size_t>(length));
    for (double& v : w) v = rng.normal();
    return w;
}

AudioFeatures featurize(const Waveform& w, const AudioShape& shape) {
    const int f = shape.frame_len;
    if (static_cast<int>(w.size()) < f) {
        raise(ErrorKind::too_short,
              "featurize: waveform of " + std::to_string(w.size()) +
                  " samples is shorter than one frame (" + std::to_string(f) + ")");
    }
    if (shape.bands >= f / 2) {
        raise(ErrorKind::config_error, "featurize: bands must fit below the frame Nyquist bin");
    }
    const int frames = static_cast<int>(w.size()) / f;
    AudioFeatures out(frames, shape.bands);
    for (int b = 0; b < shape.bands; ++b) {
        const int bin = b + 1;
        std::vector<double> cs(static_cast<std::size_t>(f)), sn(static_cast<std::size_t>(f));
        for (int t = 0; t < f; ++t) {
            const double phase = 2.0 * std::numbers::pi * bin * t / f;
            cs[static_cast<std::size_t>(t)] = std::cos(phase);
            sn[static_cast<std::size_t>(t)] = std::sin(phase);
        }
        for (int fr = 0; fr < frames; ++fr) {
            double pc = 0.0, ps = 0.0;
            const double* base = w.data() + static_cast<std::size_t>(fr) * f;
            for (int t = 0; t < f; ++t) {
                pc += base[t] * cs[static_cast<std::size_t>(t)];
                ps += base[t] * sn[static_cast<std::size_t>(t)];
            }
            pc *= 2.0 / f;
            ps *= 2.0 / f;
            out.at(fr, b) = pc * pc + ps * ps;
        }
    }
    return out;
}

SynthGenerator::SynthGenerator(SynthConfig cfg) : cfg_(cfg) {
    if (cfg_.n_classes < 1) {
        raise(ErrorKind::config_error, "SynthGenerator: need at least one class");
    }
    if (cfg_.n_classes > cfg_.audio.bands || cfg_.n_classes > cfg_.descriptor_dim) {
        raise(ErrorKind::config_error,
              "SynthGenerator: class count exceeds signature capacity (bands=" +
                  std::to_string(cfg_.audio.bands) +
                  ", descriptor_dim=" + std::to_string(cfg_.descriptor_dim) + ")");
    }
    if (cfg_.blob_min < 1 || cfg_.blob_max < cfg_.blob_min ||
        cfg_.blob_max > std::min(cfg_.grid_h, cfg_.grid_w)) {
        raise(ErrorKind::config_error, "SynthGenerator: blob size range does not fit the grid");
    }
    labels_.reserve(static_cast<std::size_t>(cfg_.n_classes));
    for (int k = 0; k < cfg_.n_classes; ++k) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "class_%02d", k);
        labels_.emplace_back(buf);
    }
    // One dominant dimension per class over a small floor keeps every pair of
    // clean signatures nearly orthogonal.
    for (int k = 0; k < cfg_.n_classes; ++k) {
        Vec a(static_cast<std::size_t>(cfg_.audio.bands), 0.01);
        a[static_cast<std::size_t>(k)] = 1.0;
        audio_sigs_.push_back(std::move(a));
        Vec v(static_cast<std::size_t>(cfg_.descriptor_dim), 0.05);
        v[static_cast<std::size_t>(k)] = 1.0;
        visual_sigs_.push_back(std::move(v));
    }
    for (int i = 0; i < cfg_.n_classes; ++i) {
        for (int j = i + 1; j < cfg_.n_classes; ++j) {
            if (cosine(audio_sigs_[static_cast<std::size_t>(i)],
                       audio_sigs_[static_cast<std::size_t>(j)]) >= cfg_.max_signature_cosine ||
                cosine(visual_sigs_[static_cast<std::size_t>(i)],
                       visual_sigs_[static_cast<std::size_t>(j)]) >= cfg_.max_signature_cosine) {
                raise(ErrorKind::config_error,
                      "SynthGenerator: class signatures not separated enough");
            }
        }
    }
}

int SynthGenerator::class_index(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        raise(ErrorKind::unknown_class, "unknown class label: " + label);
    }
    return static_cast<int>(it - labels_.begin());
}

const Vec& SynthGenerator::audio_signature(const std::string& label) const {
    return audio_sigs_[static_cast<std::size_t>(class_index(label))];
}

const Vec& SynthGenerator::visual_signature(const std::string& label) const {
    return visual_sigs_[static_cast<std::size_t>(class_index(label))];
}

Waveform SynthGenerator::gen_audio(const std::string& label, std::uint64_t seed) const {
    const Vec& sig = audio_signature(label);
    const int f = cfg_.audio.frame_len;
    const int len = cfg_.audio.waveform_len();
    Rng rng(seed);
    // Per-band amplitude jitter and random phase; amplitude^2 lands on the
    // band energy, so the featurized profile tracks the clean signature.
    std::vector<double> amp(sig.size()), phase(sig.size());
    for (std::size_t b = 0; b < sig.size(); ++b) {
        amp[b] = std::sqrt(sig[b]) * (1.0 + 0.05 * rng.normal());
        phase[b] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    Waveform w(static_cast<std::size_t>(len), 0.0);
    for (std::size_t b = 0; b < sig.size(); ++b) {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(b + 1) / f;
        for (int t = 0; t < len; ++t) {
            w[static_cast<std::size_t>(t)] += amp[b] * std::sin(omega * t + phase[b]);
        }
    }
    for (double& v : w) v += 0.01 * rng.normal();
    return w;
}

SceneImage SynthGenerator::gen_scene(std::span<const std::string> labels,
                                     std::uint64_t seed) const {
    if (labels.empty()) {
        raise(ErrorKind::config_error, "gen_scene: no classes given");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (labels[i] == labels[j]) {
                raise(ErrorKind::config_error, "gen_scene: duplicate class in scene");
            }
        }
    }
    const int h = cfg_.grid_h, w = cfg_.grid_w, d = cfg_.descriptor_dim;
    SceneImage img(h, w, d);
    Rng rng(seed);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (double& v : img.cell(y, x)) v = 0.25 * rng.normal();
        }
    }
    BinaryMask occupied(h, w);
    for (const std::string& label : labels) {
        const Vec& sig = visual_signature(label);
        const int bh = cfg_.blob_min + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(cfg_.blob_max - cfg_.blob_min + 1)));
        const int bw = cfg_.blob_min + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(cfg_.blob_max - cfg_.blob_min + 1)));
        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - bh + 1)));
            const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - bw + 1)));
            bool free = true;
            for (int y = y0; y < y0 + bh && free; ++y) {
                for (int x = x0; x < x0 + bw && free; ++x) {
                    free = occupied.at(y, x) == 0;
                }
            }
            if (!free) continue;
            SceneObject obj;
            obj.class_label = label;
            obj.mask = BinaryMask(h, w);
            for (int y = y0; y < y0 + bh; ++y) {
                for (int x = x0; x < x0 + bw; ++x) {
                    occupied.at(y, x) = 1;
                    obj.mask.at(y, x) = 1;
                    auto cell = img.cell(y, x);
                    for (int k = 0; k < d; ++k) {
                        cell[static_cast<std::size_t>(k)] =
                            sig[static_cast<std::size_t>(k)] + 0.1 * rng.normal();
                    }
                }
            }
            img.objects.push_back(std::move(obj));
            placed = true;
        }
        if (!placed) {
            raise(ErrorKind::placement_failure,
                  "gen_scene: could not place blob for " + label + " after 100 attempts");
        }
    }
    return img;
}

namespace {

Tensor scene_tensor(const SceneImage& img) {
    Tensor t({static_cast<std::uint64_t>(img.h), static_cast<std::uint64_t>(img.w),
              static_cast<std::uint64_t>(img.d)});
    t.data = img.cells;
    return t;
}

Tensor mask_tensor(const BinaryMask& m) {
    Tensor t({static_cast<std::uint64_t>(m.h), static_cast<std::uint64_t>(m.w)});
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
        t.data[i] = m.bits[i] ? 1.0 : 0.0;
    }
    return t;
}

Tensor waveform_tensor(const Waveform& w) {
    Tensor t({static_cast<std::uint64_t>(w.size())});
    t.data = w;
    return t;
}

struct SampleSpec {
    std::string id;
    std::string split;
    std::uint64_t seed = 0;
    bool with_offscreen = false;
};

} // namespace

void gen_dataset(const DatasetConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.synth.n_classes < 2) {
        raise(ErrorKind::config_error, "gen_dataset: need >= 2 classes so offscreen exists");
    }
    if (cfg.synth.objects_per_scene < 1 ||
        cfg.synth.objects_per_scene > cfg.synth.n_classes - 1) {
        raise(ErrorKind::config_error,
              "gen_dataset: objects_per_scene must leave at least one absent class");
    }
    const SynthGenerator gen(cfg.synth);
    std::filesystem::create_directories(out_dir / "tensors");

    std::vector<SampleSpec> specs;
    const struct {
        const char* name;
        int count;
        std::uint64_t tag;
        bool offscreen;
    } splits[3] = {{"train", cfg.n_train, kSplitTags[0], false},
                   {"calib", cfg.n_calib, kSplitTags[1], true},
                   {"eval", cfg.n_eval, kSplitTags[2], true}};
    for (const auto& s : splits) {
        for (int i = 0; i < s.count; ++i) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%s%06d", s.name, i);
            specs.push_back({buf, s.name, Rng::derive(cfg.seed, {s.tag, static_cast<std::uint64_t>(i)}),
                             s.offscreen});
        }
    }

    std::vector<ManifestEntry> entries(specs.size());
    parallel_for(static_cast<std::ptrdiff_t>(specs.size()), [&](std::ptrdiff_t idx) {
        const SampleSpec& spec = specs[static_cast<std::size_t>(idx)];
        // Class subset: partial Fisher-Yates over all labels.
        Rng pick(Rng::derive(spec.seed, {kTagClasses}));
        std::vector<int> order(static_cast<std::size_t>(cfg.synth.n_classes));
        std::iota(order.begin(), order.end(), 0);
        pick.shuffle(order);
        std::vector<std::string> scene_labels;
        for (int k = 0; k < cfg.synth.objects_per_scene; ++k) {
            scene_labels.push_back(
                gen.class_labels()[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
        }

        const SceneImage img = gen.gen_scene(scene_labels, Rng::derive(spec.seed, {kTagScene}));

        ManifestEntry e;
        e.id = spec.id;
        e.split = spec.split;
        e.class_labels = scene_labels;
        e.seed = spec.seed;
        e.image_path = "tensors/img_" + spec.id + ".avst";
        write_tensor(out_dir / e.image_path, scene_tensor(img));
        for (std::size_t obj = 0; obj < img.objects.size(); ++obj) {
            const std::string tagged = spec.id + "_" + std::to_string(obj);
            const Waveform audio = gen.gen_audio(
                img.objects[obj].class_label,
                Rng::derive(spec.seed, {kTagAudio, static_cast<std::uint64_t>(obj)}));
            e.positive_audio_paths.push_back("tensors/aud_" + tagged + ".avst");
            write_tensor(out_dir / e.positive_audio_paths.back(), waveform_tensor(audio));
            e.gt_paths.push_back("tensors/gt_" + tagged + ".avst");
            write_tensor(out_dir / e.gt_paths.back(), mask_tensor(img.objects[obj].mask));
        }
        if (spec.with_offscreen) {
            // Offscreen audio: positive-style audio of a class absent from
            // the scene.
            std::vector<std::string> absent;
            for (const std::string& label : gen.class_labels()) {
                if (std::find(scene_labels.begin(), scene_labels.end(), label) ==
                    scene_labels.end()) {
                    absent.push_back(label);
                }
            }
            Rng off(Rng::derive(spec.seed, {kTagOffscreen}));
            const std::string off_label =
                absent[static_cast<std::size_t>(off.below(absent.size()))];
            const Waveform audio =
                gen.gen_audio(off_label, Rng::derive(spec.seed, {kTagOffscreen, 1}));
            e.offscreen_class = off_label;
            e.offscreen_audio_path = "tensors/off_" + spec.id + ".avst";
            write_tensor(out_dir / e.offscreen_audio_path, waveform_tensor(audio));
        }
        entries[static_cast<std::size_t>(idx)] = std::move(e);
    });

    write_manifest(out_dir / "manifest.jsonl", entries);
    save_dataset_config(out_dir / "dataset.json", cfg);
}

void save_dataset_config(const std::filesystem::path& path, const DatasetConfig& cfg) {
    nlohmann::json j{{"n_classes", cfg.synth.n_classes},
                     {"grid_h", cfg.synth.grid_h},
                     {"grid_w", cfg.synth.grid_w},
                     {"descriptor_dim", cfg.synth.descriptor_dim},
                     {"objects_per_scene", cfg.synth.objects_per_scene},
                     {"blob_min", cfg.synth.blob_min},
                     {"blob_max", cfg.synth.blob_max},
                     {"frame_len", cfg.synth.audio.frame_len},
                     {"frames", cfg.synth.audio.frames},
                     {"bands", cfg.synth.audio.bands},
                     {"max_signature_cosine", cfg.synth.max_signature_cosine},
                     {"n_train", cfg.n_train},
                     {"n_calib", cfg.n_calib},
                     {"n_eval", cfg.n_eval},
                     {"seed", cfg.seed}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

DatasetConfig load_dataset_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot read " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::config_error, "invalid JSON in " + path.string());
    try {
        DatasetConfig cfg;
        cfg.synth.n_classes = j.at("n_classes").get<int>();
        cfg.synth.grid_h = j.at("grid_h").get<int>();
        cfg.synth.grid_w = j.at("grid_w").get<int>();
        cfg.synth.descriptor_dim = j.at("descriptor_dim").get<int>();
        cfg.synth.objects_per_scene = j.at("objects_per_scene").get<int>();
        cfg.synth.blob_min = j.at("blob_min").get<int>();
        cfg.synth.blob_max = j.at("blob_max").get<int>();
        cfg.synth.audio.frame_len = j.at("frame_len").get<int>();
        cfg.synth.audio.frames = j.at("frames").get<int>();
        cfg.synth.audio.bands = j.at("bands").get<int>();
        cfg.synth.max_signature_cosine = j.at("max_signature_cosine").get<double>();
        cfg.n_train = j.at("n_train").get<int>();
        cfg.n_calib = j.at("n_calib").get<int>();
        cfg.n_eval = j.at("n_eval").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        return cfg;
    } catch (const nlohmann::json::exception& ex) {
        raise(ErrorKind::config_error, path.string() + ": " + ex.what());
    }
}

} // namespace avsl
