#include "avsl/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "avsl/parallel.hpp"
#include "avsl/tensor_io.hpp"

namespace avsl {

namespace {

constexpr std::uint64_t kTagEvalNoise = 0xE7A1;

using nlohmann::json;

Tensor map_tensor(const SimilarityMap& s) {
    Tensor t({static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)});
    t.data = s.values;
    return t;
}

SimilarityMap tensor_to_map(const Tensor& t) {
    if (t.dims.size() != 2) {
        raise(ErrorKind::shape_mismatch, "expected a 2-D similarity map tensor");
    }
    SimilarityMap s(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    s.values = t.data;
    return s;
}

Tensor vec_tensor(const Vec& v) {
    Tensor t({static_cast<std::uint64_t>(v.size())});
    t.data = v;
    return t;
}

} // namespace

std::vector<const ManifestEntry*> Dataset::split(std::string_view name) const {
    std::vector<const ManifestEntry*> out;
    for (const ManifestEntry& e : entries) {
        if (e.split == name) out.push_back(&e);
    }
    return out;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    Dataset ds;
    ds.root = dir;
    ds.config = load_dataset_config(dir / "dataset.json");
    ds.entries = read_manifest(dir / "manifest.jsonl");
    return ds;
}

SceneImage load_scene_cells(const Dataset& ds, const ManifestEntry& e) {
    const Tensor t = read_tensor(ds.root / e.image_path);
    if (t.dims.size() != 3) {
        raise(ErrorKind::shape_mismatch, "image tensor for " + e.id + " is not 3-D");
    }
    SceneImage img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                   static_cast<int>(t.dims[2]));
    img.cells = t.data;
    return img;
}

Waveform load_waveform(const std::filesystem::path& path) {
    const Tensor t = read_tensor(path);
    if (t.dims.size() != 1) {
        raise(ErrorKind::shape_mismatch, "waveform tensor " + path.string() + " is not 1-D");
    }
    return t.data;
}

BinaryMask load_mask(const std::filesystem::path& path) {
    const Tensor t = read_tensor(path);
    if (t.dims.size() != 2) {
        raise(ErrorKind::shape_mismatch, "mask tensor " + path.string() + " is not 2-D");
    }
    BinaryMask m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
    for (std::size_t i = 0; i < t.data.size(); ++i) m.bits[i] = t.data[i] != 0.0;
    return m;
}

TrainSet load_train_set(const Dataset& ds) {
    TrainSet set;
    set.audio_shape = ds.config.synth.audio;
    set.descriptor_dim = ds.config.synth.descriptor_dim;
    // One train item per (scene, object) pair.
    for (const ManifestEntry* e : ds.split("train")) {
        const SceneImage img = load_scene_cells(ds, *e);
        for (std::size_t obj = 0; obj < e->positive_audio_paths.size(); ++obj) {
            TrainItem item;
            item.image = img;
            item.waveform = load_waveform(ds.root / e->positive_audio_paths[obj]);
            item.class_label = e->class_labels[obj];
            set.items.push_back(std::move(item));
        }
    }
    return set;
}

namespace {

// All forward products of one manifest entry under fixed params.
struct EntryCompute {
    VisualFeatureMap v;
    Vec pooled_visual;
    SimilarityMap map_sil;
    SimilarityMap map_noise;
    SimilarityMap map_off; // empty (h==0) when the entry has no offscreen audio
    std::vector<AudioEmbedding> obj_audio;
    std::vector<SimilarityMap> obj_pos_map;
};

EntryCompute compute_entry(const EncoderParams& params, const AudioShape& shape,
                           const Dataset& ds, const ManifestEntry& e,
                           const AudioEmbedding& a_sil) {
    EntryCompute out;
    const SceneImage img = load_scene_cells(ds, e);
    out.v = visual_encoder(img, params);
    out.pooled_visual = mean_pool_visual(out.v);
    out.map_sil = cosine_similarity_map(a_sil, out.v);
    const Waveform noise_w =
        gen_noise(shape.waveform_len(), Rng::derive(e.seed, {kTagEvalNoise}));
    out.map_noise =
        cosine_similarity_map(audio_encoder(featurize(noise_w, shape), params), out.v);
    if (!e.offscreen_audio_path.empty()) {
        const Waveform off_w = load_waveform(ds.root / e.offscreen_audio_path);
        out.map_off =
            cosine_similarity_map(audio_encoder(featurize(off_w, shape), params), out.v);
    }
    for (const std::string& rel : e.positive_audio_paths) {
        const Waveform w = load_waveform(ds.root / rel);
        AudioEmbedding a = audio_encoder(featurize(w, shape), params);
        out.obj_pos_map.push_back(cosine_similarity_map(a, out.v));
        out.obj_audio.push_back(std::move(a));
    }
    return out;
}

} // namespace

EvalMaterials compute_eval_materials(const EncoderParams& params, const AudioShape& audio_shape,
                                     const Dataset& ds) {
    const Vec zero_features(static_cast<std::size_t>(params.layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, params);

    EvalMaterials out;
    const auto calib = ds.split("calib");
    std::vector<std::array<double, 3>> calib_per(calib.size());
    parallel_for(static_cast<std::ptrdiff_t>(calib.size()), [&](std::ptrdiff_t i) {
        const EntryCompute ec = compute_entry(params, audio_shape, ds, *calib[static_cast<std::size_t>(i)], a_sil);
        if (ec.map_off.h == 0) {
            raise(ErrorKind::config_error,
                  "calib entry " + calib[static_cast<std::size_t>(i)]->id + " lacks offscreen audio");
        }
        calib_per[static_cast<std::size_t>(i)] = {max_pool(ec.map_sil), max_pool(ec.map_noise),
                                                  max_pool(ec.map_off)};
    });
    for (const auto& m : calib_per) {
        for (Condition c : kAllConditions) {
            out.calib_maxima[static_cast<std::size_t>(c)].push_back(
                m[static_cast<std::size_t>(c)]);
        }
    }

    const auto eval = ds.split("eval");
    struct EvalSlot {
        std::vector<EvalRecord> records;
        std::vector<double> pos_maxima;
        std::vector<EmbeddingItem> audio_items;
        EmbeddingItem image_item;
    };
    std::vector<EvalSlot> slots(eval.size());
    parallel_for(static_cast<std::ptrdiff_t>(eval.size()), [&](std::ptrdiff_t i) {
        const ManifestEntry& e = *eval[static_cast<std::size_t>(i)];
        const EntryCompute ec = compute_entry(params, audio_shape, ds, e, a_sil);
        if (ec.map_off.h == 0) {
            raise(ErrorKind::config_error, "eval entry " + e.id + " lacks offscreen audio");
        }
        EvalSlot& slot = slots[static_cast<std::size_t>(i)];
        for (std::size_t obj = 0; obj < e.positive_audio_paths.size(); ++obj) {
            EvalRecord rec;
            rec.id = e.id + "#" + std::to_string(obj);
            rec.class_label = e.class_labels[obj];
            rec.pos_map = ec.obj_pos_map[obj];
            rec.neg_maps[static_cast<std::size_t>(Condition::silence)] = ec.map_sil;
            rec.neg_maps[static_cast<std::size_t>(Condition::noise)] = ec.map_noise;
            rec.neg_maps[static_cast<std::size_t>(Condition::offscreen)] = ec.map_off;
            rec.gt = GroundTruthRegion::from_mask(load_mask(ds.root / e.gt_paths[obj]));
            rec.pooled = PooledPair{ec.obj_audio[obj].values, ec.pooled_visual};
            slot.pos_maxima.push_back(max_pool(rec.pos_map));
            slot.records.push_back(std::move(rec));
            slot.audio_items.push_back(EmbeddingItem{e.id + "#" + std::to_string(obj),
                                                     e.class_labels[obj],
                                                     ec.obj_audio[obj].values, Modality::audio});
        }
        slot.image_item = EmbeddingItem{e.id, e.class_labels[0], ec.pooled_visual,
                                        Modality::image};
    });
    for (EvalSlot& slot : slots) {
        for (EvalRecord& r : slot.records) out.records.push_back(std::move(r));
        for (double v : slot.pos_maxima) out.eval_pos_maxima.push_back(v);
        for (EmbeddingItem& item : slot.audio_items) out.audio_items.push_back(std::move(item));
        out.image_items.push_back(std::move(slot.image_item));
    }
    return out;
}

ReportFile build_report(const EvalMaterials& materials,
                        const std::vector<Condition>& calib_conditions,
                        const std::string& config_hash, const std::string& dataset_hash,
                        const std::string& timestamp) {
    if (calib_conditions.empty()) {
        raise(ErrorKind::config_error, "build_report: no calibration conditions selected");
    }
    std::vector<double> pool;
    for (Condition c : calib_conditions) {
        const auto& xs = materials.calib_maxima[static_cast<std::size_t>(c)];
        pool.insert(pool.end(), xs.begin(), xs.end());
    }
    const UniversalThreshold theta = universal_threshold(pool, calib_conditions);

    ReportFile report;
    report.metrics = evaluate(materials.records, theta);
    report.boxplot["positive"] = boxplot_stats(materials.eval_pos_maxima);
    for (Condition c : kAllConditions) {
        std::vector<double> maxima;
        for (const EvalRecord& r : materials.records) {
            maxima.push_back(max_pool(r.neg_maps[static_cast<std::size_t>(c)]));
        }
        report.boxplot[std::string(condition_name(c))] = boxplot_stats(maxima);
    }
    report.provenance.config_hash = config_hash;
    report.provenance.dataset_hash = dataset_hash;
    for (Condition c : calib_conditions) {
        report.provenance.calib_conditions.emplace_back(condition_name(c));
    }
    report.provenance.n_calibration = theta.n_calibration;
    report.provenance.timestamp = timestamp;
    return report;
}

void write_embed_outputs(const Checkpoint& ckpt, const Dataset& ds,
                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "tensors");
    const Vec zero_features(static_cast<std::size_t>(ckpt.params.layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, ckpt.params);

    std::vector<std::vector<EmbedRow>> rows(ds.entries.size());
    parallel_for(static_cast<std::ptrdiff_t>(ds.entries.size()), [&](std::ptrdiff_t i) {
        const ManifestEntry& e = ds.entries[static_cast<std::size_t>(i)];
        const EntryCompute ec = compute_entry(ckpt.params, ckpt.audio_shape, ds, e, a_sil);
        const std::string base = "tensors/" + e.id;
        write_tensor(out_dir / (base + "_vemb.avst"), vec_tensor(ec.pooled_visual));
        write_tensor(out_dir / (base + "_sil.avst"), map_tensor(ec.map_sil));
        write_tensor(out_dir / (base + "_noi.avst"), map_tensor(ec.map_noise));
        if (ec.map_off.h != 0) {
            write_tensor(out_dir / (base + "_off.avst"), map_tensor(ec.map_off));
        }
        for (std::size_t obj = 0; obj < e.positive_audio_paths.size(); ++obj) {
            const std::string tag = base + "_" + std::to_string(obj);
            write_tensor(out_dir / (tag + "_aemb.avst"), vec_tensor(ec.obj_audio[obj].values));
            write_tensor(out_dir / (tag + "_pos.avst"), map_tensor(ec.obj_pos_map[obj]));
            // Copy the ground truth so the embed directory is self-contained.
            const Tensor gt = read_tensor(ds.root / e.gt_paths[obj]);
            write_tensor(out_dir / (tag + "_gt.avst"), gt);
            EmbedRow row;
            row.id = e.id;
            row.object = static_cast<int>(obj);
            row.class_label = e.class_labels[obj];
            row.split = e.split;
            row.audio_emb_path = tag + "_aemb.avst";
            row.visual_emb_path = base + "_vemb.avst";
            row.map_positive_path = tag + "_pos.avst";
            row.map_silence_path = base + "_sil.avst";
            row.map_noise_path = base + "_noi.avst";
            if (ec.map_off.h != 0) row.map_offscreen_path = base + "_off.avst";
            row.gt_path = tag + "_gt.avst";
            rows[static_cast<std::size_t>(i)].push_back(std::move(row));
        }
    });

    std::ofstream out(out_dir / "embeddings.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write embed manifest");
    for (const auto& group : rows) {
        for (const EmbedRow& r : group) {
            json j{{"id", r.id},
                   {"object", r.object},
                   {"class_label", r.class_label},
                   {"split", r.split},
                   {"audio_emb", r.audio_emb_path},
                   {"visual_emb", r.visual_emb_path},
                   {"map_positive", r.map_positive_path},
                   {"map_silence", r.map_silence_path},
                   {"map_noise", r.map_noise_path},
                   {"gt", r.gt_path}};
            if (!r.map_offscreen_path.empty()) j["map_offscreen"] = r.map_offscreen_path;
            out << j.dump() << "\n";
        }
    }
}

std::vector<EmbedRow> read_embed_manifest(const std::filesystem::path& dir) {
    std::ifstream in(dir / "embeddings.jsonl", std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot read embed manifest in " + dir.string());
    std::vector<EmbedRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            raise(ErrorKind::config_error,
                  "embed manifest line " + std::to_string(line_no) + ": invalid JSON");
        }
        try {
            EmbedRow r;
            r.id = j.at("id").get<std::string>();
            r.object = j.at("object").get<int>();
            r.class_label = j.at("class_label").get<std::string>();
            r.split = j.at("split").get<std::string>();
            r.audio_emb_path = j.at("audio_emb").get<std::string>();
            r.visual_emb_path = j.at("visual_emb").get<std::string>();
            r.map_positive_path = j.at("map_positive").get<std::string>();
            r.map_silence_path = j.at("map_silence").get<std::string>();
            r.map_noise_path = j.at("map_noise").get<std::string>();
            if (j.contains("map_offscreen")) {
                r.map_offscreen_path = j.at("map_offscreen").get<std::string>();
            }
            r.gt_path = j.at("gt").get<std::string>();
            rows.push_back(std::move(r));
        } catch (const json::exception& ex) {
            raise(ErrorKind::config_error,
                  "embed manifest line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return rows;
}

EvalMaterials load_eval_materials(const std::filesystem::path& embed_dir) {
    const std::vector<EmbedRow> rows = read_embed_manifest(embed_dir);
    EvalMaterials out;
    std::set<std::string> calib_seen, image_seen;
    for (const EmbedRow& r : rows) {
        if (r.split == "calib") {
            if (r.map_offscreen_path.empty()) {
                raise(ErrorKind::config_error, "calib row " + r.id + " lacks an offscreen map");
            }
            // Negative maps are per entry; count each entry once.
            if (!calib_seen.insert(r.id).second) continue;
            out.calib_maxima[static_cast<std::size_t>(Condition::silence)].push_back(
                max_pool(tensor_to_map(read_tensor(embed_dir / r.map_silence_path))));
            out.calib_maxima[static_cast<std::size_t>(Condition::noise)].push_back(
                max_pool(tensor_to_map(read_tensor(embed_dir / r.map_noise_path))));
            out.calib_maxima[static_cast<std::size_t>(Condition::offscreen)].push_back(
                max_pool(tensor_to_map(read_tensor(embed_dir / r.map_offscreen_path))));
        } else if (r.split == "eval") {
            if (r.map_offscreen_path.empty()) {
                raise(ErrorKind::config_error, "eval row " + r.id + " lacks an offscreen map");
            }
            EvalRecord rec;
            rec.id = r.id + "#" + std::to_string(r.object);
            rec.class_label = r.class_label;
            rec.pos_map = tensor_to_map(read_tensor(embed_dir / r.map_positive_path));
            rec.neg_maps[static_cast<std::size_t>(Condition::silence)] =
                tensor_to_map(read_tensor(embed_dir / r.map_silence_path));
            rec.neg_maps[static_cast<std::size_t>(Condition::noise)] =
                tensor_to_map(read_tensor(embed_dir / r.map_noise_path));
            rec.neg_maps[static_cast<std::size_t>(Condition::offscreen)] =
                tensor_to_map(read_tensor(embed_dir / r.map_offscreen_path));
            rec.gt = GroundTruthRegion::from_mask(load_mask(embed_dir / r.gt_path));
            const Vec audio_emb = read_tensor(embed_dir / r.audio_emb_path).data;
            const Vec visual_emb = read_tensor(embed_dir / r.visual_emb_path).data;
            rec.pooled = PooledPair{audio_emb, visual_emb};
            out.eval_pos_maxima.push_back(max_pool(rec.pos_map));
            out.records.push_back(std::move(rec));
            out.audio_items.push_back(EmbeddingItem{r.id + "#" + std::to_string(r.object),
                                                    r.class_label, audio_emb, Modality::audio});
            if (image_seen.insert(r.id).second) {
                out.image_items.push_back(
                    EmbeddingItem{r.id, r.class_label, visual_emb, Modality::image});
            }
        }
    }
    if (out.records.empty()) {
        raise(ErrorKind::empty_input, "embed directory has no eval rows");
    }
    return out;
}

RetrievalResult run_retrieval(const std::vector<EmbeddingItem>& audio_items,
                              const std::vector<EmbeddingItem>& image_items,
                              const std::string& direction, const std::vector<int>& ks) {
    RetrievalResult res;
    res.direction = direction;
    res.ks = ks;
    const std::vector<EmbeddingItem>* queries = nullptr;
    EmbeddingSet gallery;
    if (direction == "i2a") {
        queries = &image_items;
        gallery.items = audio_items;
    } else if (direction == "a2i") {
        queries = &audio_items;
        gallery.items = image_items;
    } else {
        raise(ErrorKind::usage, "retrieval direction must be i2a or a2i, got " + direction);
    }
    res.n_queries = static_cast<int>(queries->size());
    for (int k : ks) {
        res.precision.push_back(precision_at_k(*queries, gallery, k));
        res.accuracy.push_back(accuracy_at_k(*queries, gallery, k));
    }
    return res;
}

void save_retrieval(const std::filesystem::path& path, const RetrievalResult& r,
                    const std::string& config_hash, const std::string& dataset_hash) {
    json precision, accuracy;
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
        precision[std::to_string(r.ks[i])] = r.precision[i];
        accuracy[std::to_string(r.ks[i])] = r.accuracy[i];
    }
    json j{{"direction", r.direction},
           {"k", r.ks},
           {"precision", precision},
           {"accuracy", accuracy},
           {"n_queries", r.n_queries},
           {"provenance", json{{"tool_version", kToolVersion},
                               {"config_hash", config_hash},
                               {"dataset_hash", dataset_hash}}}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorKind::io, "cannot write retrieval result " + path.string());
    out << j.dump(2) << "\n";
}

AblationRow run_arm(const Dataset& ds, TrainConfig cfg) {
    const TrainSet set = load_train_set(ds);
    const TrainResult trained = train(cfg, set);
    const EvalMaterials materials =
        compute_eval_materials(trained.params, ds.config.synth.audio, ds);
    const ReportFile report = build_report(
        materials, {Condition::silence, Condition::noise, Condition::offscreen}, "", "", "");
    AblationRow row;
    row.lambda_sn = cfg.lambda_sn;
    row.seed = cfg.seed;
    row.metrics = report.metrics;
    double sil = 0.0, noi = 0.0;
    for (const EvalRecord& r : materials.records) {
        sil += max_pool(r.neg_maps[static_cast<std::size_t>(Condition::silence)]);
        noi += max_pool(r.neg_maps[static_cast<std::size_t>(Condition::noise)]);
    }
    row.final_mean_sil_max = sil / static_cast<double>(materials.records.size());
    row.final_mean_noise_max = noi / static_cast<double>(materials.records.size());
    return row;
}

} // namespace avsl
