#include "avsl/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "avsl/parallel.hpp"
#include "avsl/tensor_io.hpp"

namespace avsl {

namespace {

constexpr std::uint64_t kTagInit = 0x1217;
constexpr std::uint64_t kTagShuffle = 0x5F0E;
constexpr std::uint64_t kTagMask = 0x3A5C;
constexpr std::uint64_t kTagNoise = 0x401E;
constexpr std::uint64_t kTagGeo = 0x6E00;
constexpr std::uint64_t kTagSnapshotNoise = 0x5A09;

GeoTransform sample_transform(Rng& rng, int h, int w) {
    // Flips and rotations are exactly equivariant for the per-cell encoder;
    // translations carry the training signal for the zero-filled band.
    const int kinds = (h == w) ? 3 : 2;
    switch (rng.below(static_cast<std::uint64_t>(kinds))) {
        case 0:
            return GeoTransform::hflip();
        case 1: {
            const int max_shift = 2;
            int dy = 0, dx = 0;
            while (dy == 0 && dx == 0) {
                dy = static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift;
                dx = static_cast<int>(rng.below(2 * max_shift + 1)) - max_shift;
            }
            return GeoTransform::translate(dy, dx);
        }
        default:
            return GeoTransform::rot90(1 + static_cast<int>(rng.below(3)));
    }
}

struct SnapshotStats {
    double pos = 0.0;
    double sil = 0.0;
    double noise = 0.0;
};

// Mean max-similarity per condition over the train set, on clean waveforms.
SnapshotStats snapshot(const EncoderParams& params, const TrainSet& data,
                       const TrainConfig& cfg, int epoch) {
    const int n = static_cast<int>(data.items.size());
    const Vec zero_features(static_cast<std::size_t>(params.layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, params);
    std::vector<SnapshotStats> per(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::ptrdiff_t i) {
        const TrainItem& item = data.items[static_cast<std::size_t>(i)];
        const VisualFeatureMap v = visual_encoder(item.image, params);
        const AudioEmbedding a =
            audio_encoder(featurize(item.waveform, data.audio_shape), params);
        const Waveform noise_w = gen_noise(
            static_cast<int>(item.waveform.size()),
            Rng::derive(cfg.seed, {kTagSnapshotNoise, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(i)}));
        const AudioEmbedding a_noise = audio_encoder(featurize(noise_w, data.audio_shape), params);
        SnapshotStats s;
        s.pos = max_pool(cosine_similarity_map(a, v));
        s.sil = max_pool(cosine_similarity_map(a_sil, v));
        s.noise = max_pool(cosine_similarity_map(a_noise, v));
        per[static_cast<std::size_t>(i)] = s;
    });
    SnapshotStats mean;
    for (const SnapshotStats& s : per) {
        mean.pos += s.pos / n;
        mean.sil += s.sil / n;
        mean.noise += s.noise / n;
    }
    return mean;
}

} // namespace

Optimizer::Optimizer(const OptimizerConfig& cfg, double learning_rate, std::size_t n_params)
    : cfg_(cfg), lr_(learning_rate) {
    if (cfg.kind == OptimizerConfig::Kind::adam) {
        m_.assign(n_params, 0.0);
        v_.assign(n_params, 0.0);
    }
}

void Optimizer::step(Vec& params, const Vec& grad) {
    if (params.size() != grad.size()) {
        raise(ErrorKind::shape_mismatch, "Optimizer::step: gradient layout mismatch");
    }
    if (cfg_.kind == OptimizerConfig::Kind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grad[i];
        return;
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

TrainResult train(const TrainConfig& cfg, const TrainSet& data) {
    cfg.validate();
    if (data.items.empty()) {
        raise(ErrorKind::empty_input, "train: empty dataset");
    }
    if (static_cast<int>(data.items.size()) < cfg.batch_size) {
        raise(ErrorKind::config_error, "train: dataset smaller than one batch");
    }
    for (const TrainItem& item : data.items) {
        if (item.image.h != cfg.grid_h || item.image.w != cfg.grid_w) {
            raise(ErrorKind::shape_mismatch, "train: image grid does not match config grid");
        }
    }

    EncoderLayout layout;
    layout.audio_in = data.audio_shape.frames * data.audio_shape.bands;
    layout.audio_hidden = cfg.hidden;
    layout.visual_in = data.descriptor_dim;
    layout.visual_hidden = cfg.hidden;
    layout.c = cfg.c;

    TrainResult result{init_params(layout, Rng::derive(cfg.seed, {kTagInit})), {}};
    Optimizer opt(cfg.optimizer, cfg.learning_rate, result.params.values.size());

    const int n = static_cast<int>(data.items.size());
    std::vector<Waveform> current(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) current[static_cast<std::size_t>(i)] = data.items[static_cast<std::size_t>(i)].waveform;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double alpha = alpha_schedule(epoch, cfg);
        if (cfg.sam_enabled) {
            // Similar-audio table under the current encoder, over the clean
            // pool; the epoch's training audio is a fresh convex mix of two
            // clean waveforms. Mixing from the originals rather than the
            // previous epoch's mix keeps a bad early table from poisoning
            // every later epoch.
            std::vector<AudioEmbedding> embs(static_cast<std::size_t>(n));
            parallel_for(n, [&](std::ptrdiff_t i) {
                embs[static_cast<std::size_t>(i)] = audio_encoder(
                    featurize(data.items[static_cast<std::size_t>(i)].waveform,
                              data.audio_shape),
                    result.params);
            });
            const std::vector<int> similar = find_similar_audio(embs);
            parallel_for(n, [&](std::ptrdiff_t i) {
                current[static_cast<std::size_t>(i)] = sam_mix(
                    data.items[static_cast<std::size_t>(i)].waveform,
                    data.items[static_cast<std::size_t>(similar[static_cast<std::size_t>(i)])]
                        .waveform,
                    alpha);
            });
        }

        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(Rng::derive(cfg.seed, {kTagShuffle, static_cast<std::uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        const int steps = n / cfg.batch_size;
        LossBreakdown epoch_mean;
        for (int step = 0; step < steps; ++step) {
            Batch batch;
            batch.items.resize(static_cast<std::size_t>(cfg.batch_size));
            parallel_for(cfg.batch_size, [&](std::ptrdiff_t k) {
                const int item_idx = order[static_cast<std::size_t>(step) * cfg.batch_size +
                                           static_cast<std::size_t>(k)];
                const TrainItem& src = data.items[static_cast<std::size_t>(item_idx)];
                BatchItem& it = batch.items[static_cast<std::size_t>(k)];
                it.image = src.image;
                it.class_label = src.class_label;
                AudioFeatures feats =
                    featurize(current[static_cast<std::size_t>(item_idx)], data.audio_shape);
                if (cfg.mask_enabled) {
                    Rng mask_rng(Rng::derive(
                        cfg.seed, {kTagMask, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(k)}));
                    feats = feature_masking(feats, mask_rng, cfg.mask_time_max, cfg.mask_band_max);
                }
                it.audio = std::move(feats);
                it.noise_seed =
                    Rng::derive(cfg.seed, {kTagNoise, static_cast<std::uint64_t>(epoch),
                                           static_cast<std::uint64_t>(step),
                                           static_cast<std::uint64_t>(k)});
                it.noise = featurize(
                    gen_noise(static_cast<int>(src.waveform.size()), it.noise_seed),
                    data.audio_shape);
                if (cfg.geo_enabled) {
                    Rng geo_rng(Rng::derive(
                        cfg.seed, {kTagGeo, static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(k)}));
                    it.transform = sample_transform(geo_rng, src.image.h, src.image.w);
                }
            });

            Vec grad = backward(batch, result.params, cfg, epoch);
            const LossBreakdown loss = total_loss(batch, result.params, cfg, epoch);
            opt.step(result.params.values, grad);

            epoch_mean.contrastive += loss.contrastive / steps;
            epoch_mean.l_s += loss.l_s / steps;
            epoch_mean.l_n += loss.l_n / steps;
            epoch_mean.l_geo += loss.l_geo / steps;
            epoch_mean.total += loss.total / steps;
        }

        const SnapshotStats snap = snapshot(result.params, data, cfg, epoch);
        EpochStats stats;
        stats.epoch = epoch;
        stats.alpha = alpha;
        stats.mean_loss = epoch_mean;
        stats.mean_pos_max = snap.pos;
        stats.mean_sil_max = snap.sil;
        stats.mean_noise_max = snap.noise;
        result.history.push_back(stats);
    }
    return result;
}

namespace {

using nlohmann::json;

json layout_to_json(const EncoderLayout& l) {
    return json{{"audio_in", l.audio_in},     {"audio_hidden", l.audio_hidden},
                {"visual_in", l.visual_in},   {"visual_hidden", l.visual_hidden},
                {"c", l.c}};
}

EncoderLayout layout_from_json(const json& j) {
    EncoderLayout l;
    l.audio_in = j.at("audio_in").get<int>();
    l.audio_hidden = j.at("audio_hidden").get<int>();
    l.visual_in = j.at("visual_in").get<int>();
    l.visual_hidden = j.at("visual_hidden").get<int>();
    l.c = j.at("c").get<int>();
    return l;
}

json config_to_json(const TrainConfig& c) {
    return json{{"c", c.c},
                {"hidden", c.hidden},
                {"grid_h", c.grid_h},
                {"grid_w", c.grid_w},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"learning_rate", c.learning_rate},
                {"kappa", c.kappa},
                {"lambda_sn", c.lambda_sn},
                {"lambda_geo", c.lambda_geo},
                {"alpha_max", c.alpha_max},
                {"alpha_ramp_epochs", c.alpha_ramp_epochs},
                {"sam_enabled", c.sam_enabled},
                {"geo_enabled", c.geo_enabled},
                {"mask_enabled", c.mask_enabled},
                {"mask_time_max", c.mask_time_max},
                {"mask_band_max", c.mask_band_max},
                {"seed", c.seed},
                {"optimizer", c.optimizer.kind == OptimizerConfig::Kind::adam ? "adam" : "sgd"},
                {"beta1", c.optimizer.beta1},
                {"beta2", c.optimizer.beta2},
                {"eps", c.optimizer.eps}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.c = j.at("c").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.grid_h = j.at("grid_h").get<int>();
    c.grid_w = j.at("grid_w").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.kappa = j.at("kappa").get<double>();
    c.lambda_sn = j.at("lambda_sn").get<double>();
    c.lambda_geo = j.at("lambda_geo").get<double>();
    c.alpha_max = j.at("alpha_max").get<double>();
    c.alpha_ramp_epochs = j.at("alpha_ramp_epochs").get<int>();
    c.sam_enabled = j.at("sam_enabled").get<bool>();
    c.geo_enabled = j.at("geo_enabled").get<bool>();
    c.mask_enabled = j.at("mask_enabled").get<bool>();
    c.mask_time_max = j.at("mask_time_max").get<int>();
    c.mask_band_max = j.at("mask_band_max").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.optimizer.kind = j.at("optimizer").get<std::string>() == "sgd"
                           ? OptimizerConfig::Kind::sgd
                           : OptimizerConfig::Kind::adam;
    c.optimizer.beta1 = j.at("beta1").get<double>();
    c.optimizer.beta2 = j.at("beta2").get<double>();
    c.optimizer.eps = j.at("eps").get<double>();
    return c;
}

} // namespace

void save_checkpoint(const std::filesystem::path& prefix, const EncoderParams& params,
                     const TrainConfig& cfg, const AudioShape& audio_shape) {
    Tensor t({static_cast<std::uint64_t>(params.values.size())});
    t.data = params.values;
    write_tensor(prefix.string() + ".avst", t);
    json j{{"format_version", 1},
           {"layout", layout_to_json(params.layout)},
           {"train_config", config_to_json(cfg)},
           {"audio_shape",
            json{{"frame_len", audio_shape.frame_len},
                 {"frames", audio_shape.frames},
                 {"bands", audio_shape.bands}}}};
    std::ofstream out(prefix.string() + ".json", std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write checkpoint sidecar " + prefix.string() + ".json");
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& prefix) {
    std::ifstream in(prefix.string() + ".json", std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot read checkpoint sidecar " + prefix.string() + ".json");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        raise(ErrorKind::config_error, "invalid JSON in checkpoint sidecar");
    }
    try {
        Checkpoint ckpt{EncoderParams(layout_from_json(j.at("layout"))),
                        config_from_json(j.at("train_config")),
                        AudioShape{j.at("audio_shape").at("frame_len").get<int>(),
                                   j.at("audio_shape").at("frames").get<int>(),
                                   j.at("audio_shape").at("bands").get<int>()}};
        const Tensor t = read_tensor(prefix.string() + ".avst");
        if (t.data.size() != ckpt.params.values.size()) {
            raise(ErrorKind::size_mismatch,
                  "checkpoint tensor holds " + std::to_string(t.data.size()) +
                      " values, layout expects " + std::to_string(ckpt.params.values.size()));
        }
        ckpt.params.values = t.data;
        return ckpt;
    } catch (const json::exception& ex) {
        raise(ErrorKind::config_error, "checkpoint sidecar: " + std::string(ex.what()));
    }
}

void save_train_config(const std::filesystem::path& path, const TrainConfig& cfg) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write train config " + path.string());
    out << config_to_json(cfg).dump(2) << "\n";
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot read train config " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        raise(ErrorKind::config_error, "invalid JSON in train config " + path.string());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& ex) {
        raise(ErrorKind::config_error, "train config " + path.string() + ": " + ex.what());
    }
}

std::string train_config_json(const TrainConfig& cfg) {
    return config_to_json(cfg).dump();
}

void save_history(const std::filesystem::path& path, const std::vector<EpochStats>& history) {
    json rows = json::array();
    for (const EpochStats& e : history) {
        rows.push_back(json{{"epoch", e.epoch},
                            {"alpha", e.alpha},
                            {"contrastive", e.mean_loss.contrastive},
                            {"l_s", e.mean_loss.l_s},
                            {"l_n", e.mean_loss.l_n},
                            {"l_geo", e.mean_loss.l_geo},
                            {"total", e.mean_loss.total},
                            {"mean_pos_max", e.mean_pos_max},
                            {"mean_sil_max", e.mean_sil_max},
                            {"mean_noise_max", e.mean_noise_max}});
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write history " + path.string());
    out << rows.dump(2) << "\n";
}

} // namespace avsl
