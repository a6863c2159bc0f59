#include "avsl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "avsl/parallel.hpp"

namespace avsl {

namespace {

double sum_squares(const SimilarityMap& s) {
    double acc = 0.0;
    for (double v : s.values) acc += v * v;
    return acc;
}

// Accumulates d(loss)/d(audio) and d(loss)/d(visual columns) for a full-map
// upstream gradient G over S = cosine_similarity_map(a, v).
void cosine_map_backward(const AudioEmbedding& a, const VisualFeatureMap& v,
                         const SimilarityMap& s, const SimilarityMap& upstream, Vec& d_audio,
                         VisualFeatureMap& d_visual) {
    const int c = v.c;
    const double na = l2_norm(a.values);
    const double inv_na2 = 1.0 / (na * na);
    for (int y = 0; y < v.h; ++y) {
        for (int x = 0; x < v.w; ++x) {
            const double g = upstream.at(y, x);
            if (g == 0.0) continue;
            double nu2 = 0.0;
            for (int k = 0; k < c; ++k) nu2 += v.at(k, y, x) * v.at(k, y, x);
            const double nu = std::sqrt(nu2);
            const double inv_cross = 1.0 / (na * nu);
            const double sv = s.at(y, x);
            for (int k = 0; k < c; ++k) {
                const double ak = a.values[static_cast<std::size_t>(k)];
                const double uk = v.at(k, y, x);
                d_audio[static_cast<std::size_t>(k)] += g * (uk * inv_cross - sv * ak * inv_na2);
                d_visual.at(k, y, x) += g * (ak * inv_cross - sv * uk / nu2);
            }
        }
    }
}

// Single-cell version for the max-pooled contrastive logits. Routes into
// either the audio side or the visual side, depending on which buffer the
// caller owns (the other span is empty).
void cosine_cell_backward(const AudioEmbedding& a, const VisualFeatureMap& v, int y, int x,
                          double s, double g, std::span<double> d_audio,
                          VisualFeatureMap* d_visual) {
    const int c = v.c;
    const double na = l2_norm(a.values);
    double nu2 = 0.0;
    for (int k = 0; k < c; ++k) nu2 += v.at(k, y, x) * v.at(k, y, x);
    const double nu = std::sqrt(nu2);
    const double inv_cross = 1.0 / (na * nu);
    const double inv_na2 = 1.0 / (na * na);
    for (int k = 0; k < c; ++k) {
        const double ak = a.values[static_cast<std::size_t>(k)];
        const double uk = v.at(k, y, x);
        if (!d_audio.empty()) {
            d_audio[static_cast<std::size_t>(k)] += g * (uk * inv_cross - s * ak * inv_na2);
        }
        if (d_visual) {
            d_visual->at(k, y, x) += g * (ak * inv_cross - s * uk / nu2);
        }
    }
}

struct ItemForward {
    AudioCache a_cache;
    AudioEmbedding a;
    VisualCache v_cache;
    VisualFeatureMap v;
    AudioCache noise_cache;
    AudioEmbedding a_noise;
    SceneImage t_image;
    VisualCache vt_cache;
    VisualFeatureMap vt;
    SimilarityMap s_sil;
    SimilarityMap s_noise;
    SimilarityMap s_geo_transformed; // S(a, encode(t(image)))
    SimilarityMap s_geo_plain;       // S(a, encode(image))
    double l_s = 0.0;
    double l_n = 0.0;
    double l_geo = 0.0;
};

double logsumexp(std::span<const double> xs) {
    double m = xs[0];
    for (double v : xs) m = std::max(m, v);
    double acc = 0.0;
    for (double v : xs) acc += std::exp(v - m);
    return m + std::log(acc);
}

// Shared forward (and optional backward) over one batch.
LossBreakdown run_batch(const Batch& batch, const EncoderParams& p, const TrainConfig& cfg,
                        int epoch, Vec* grad) {
    (void)epoch;
    const int n = static_cast<int>(batch.items.size());
    if (n < 2) {
        raise(ErrorKind::batch_too_small, "total_loss: batch must hold >= 2 items");
    }
    const EncoderLayout& layout = p.layout;

    // Shared silence embedding: all-zero audio features.
    AudioCache sil_cache;
    const Vec zero_features(static_cast<std::size_t>(layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, p, &sil_cache);

    std::vector<ItemForward> fw(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::ptrdiff_t j) {
        ItemForward& f = fw[static_cast<std::size_t>(j)];
        const BatchItem& item = batch.items[static_cast<std::size_t>(j)];
        f.a = audio_encoder(item.audio, p, &f.a_cache);
        f.v = visual_encoder(item.image, p, &f.v_cache);
        f.a_noise = audio_encoder(item.noise, p, &f.noise_cache);
        f.s_sil = cosine_similarity_map(a_sil, f.v);
        f.l_s = sum_squares(f.s_sil);
        f.s_noise = cosine_similarity_map(f.a_noise, f.v);
        f.l_n = sum_squares(f.s_noise);
        if (cfg.geo_enabled) {
            f.t_image = apply_geo(item.image, item.transform);
            f.vt = visual_encoder(f.t_image, p, &f.vt_cache);
            f.s_geo_transformed = cosine_similarity_map(f.a, f.vt);
            f.s_geo_plain = cosine_similarity_map(f.a, f.v);
            const SimilarityMap moved = apply_geo(f.s_geo_plain, item.transform);
            double acc = 0.0;
            for (int i = 0; i < moved.size(); ++i) {
                const double r = f.s_geo_transformed.values[static_cast<std::size_t>(i)] -
                                 moved.values[static_cast<std::size_t>(i)];
                acc += r * r;
            }
            f.l_geo = acc;
        }
    });

    // Max-pooled pair logits; argmax cached for gradient routing.
    std::vector<MapArgmax> pair(static_cast<std::size_t>(n) * n);
    parallel_for(static_cast<std::ptrdiff_t>(n) * n, [&](std::ptrdiff_t idx) {
        const int i = static_cast<int>(idx / n);
        const int j = static_cast<int>(idx % n);
        pair[static_cast<std::size_t>(idx)] = max_pool_argmax(
            cosine_similarity_map(fw[static_cast<std::size_t>(i)].a,
                                  fw[static_cast<std::size_t>(j)].v));
    });

    std::vector<double> logits(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n * n; ++i) {
        logits[static_cast<std::size_t>(i)] = pair[static_cast<std::size_t>(i)].value / cfg.kappa;
    }
    double ce = 0.0;
    std::vector<double> row(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(i) * n + j];
            col[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(j) * n + i];
        }
        ce += 0.5 * (logsumexp(row) - row[static_cast<std::size_t>(i)]) / n;
        ce += 0.5 * (logsumexp(col) - col[static_cast<std::size_t>(i)]) / n;
    }

    LossBreakdown out;
    out.contrastive = ce;
    for (const ItemForward& f : fw) {
        out.l_s += f.l_s / n;
        out.l_n += f.l_n / n;
        out.l_geo += f.l_geo / n;
    }
    out.total = out.contrastive + cfg.lambda_sn * (out.l_s + out.l_n) +
                cfg.lambda_geo * out.l_geo;

    if (!grad) return out;
    grad->assign(static_cast<std::size_t>(layout.param_count()), 0.0);

    // d(contrastive)/d(logit[i][j]) via row and column softmaxes.
    std::vector<double> d_pool(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(i) * n + j];
        }
        const double lse = logsumexp(row);
        for (int j = 0; j < n; ++j) {
            const double pr = std::exp(row[static_cast<std::size_t>(j)] - lse);
            d_pool[static_cast<std::size_t>(i) * n + j] +=
                0.5 * (pr - (i == j ? 1.0 : 0.0)) / n;
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            col[static_cast<std::size_t>(i)] = logits[static_cast<std::size_t>(i) * n + j];
        }
        const double lse = logsumexp(col);
        for (int i = 0; i < n; ++i) {
            const double pc = std::exp(col[static_cast<std::size_t>(i)] - lse);
            d_pool[static_cast<std::size_t>(i) * n + j] +=
                0.5 * (pc - (i == j ? 1.0 : 0.0)) / n;
        }
    }
    for (double& g : d_pool) g /= cfg.kappa;

    // Contrastive upstreams. Audio side accumulates over the row of pairs,
    // visual side over the column; both inner loops ascend, so the reduction
    // order is fixed.
    std::vector<Vec> d_audio(static_cast<std::size_t>(n),
                             Vec(static_cast<std::size_t>(layout.c), 0.0));
    std::vector<VisualFeatureMap> d_visual(static_cast<std::size_t>(n));
    std::vector<VisualFeatureMap> d_visual_t(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::ptrdiff_t i) {
        Vec& da = d_audio[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            const MapArgmax& m = pair[static_cast<std::size_t>(i) * n + j];
            const double g = d_pool[static_cast<std::size_t>(i) * n + j];
            if (g == 0.0) continue;
            cosine_cell_backward(fw[static_cast<std::size_t>(i)].a,
                                 fw[static_cast<std::size_t>(j)].v, m.y, m.x, m.value, g, da,
                                 nullptr);
        }
    });
    parallel_for(n, [&](std::ptrdiff_t j) {
        VisualFeatureMap& dv = d_visual[static_cast<std::size_t>(j)];
        dv = VisualFeatureMap(layout.c, fw[static_cast<std::size_t>(j)].v.h,
                              fw[static_cast<std::size_t>(j)].v.w);
        for (int i = 0; i < n; ++i) {
            const MapArgmax& m = pair[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
            const double g = d_pool[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
            if (g == 0.0) continue;
            cosine_cell_backward(fw[static_cast<std::size_t>(i)].a,
                                 fw[static_cast<std::size_t>(j)].v, m.y, m.x, m.value, g, {}, &dv);
        }
    });

    // Silence, noise and equivariance upstreams per item. The shared silence
    // embedding collects one contribution per item, reduced in item order.
    std::vector<Vec> d_sil(static_cast<std::size_t>(n),
                           Vec(static_cast<std::size_t>(layout.c), 0.0));
    std::vector<Vec> d_noise(static_cast<std::size_t>(n),
                             Vec(static_cast<std::size_t>(layout.c), 0.0));
    parallel_for(n, [&](std::ptrdiff_t j) {
        ItemForward& f = fw[static_cast<std::size_t>(j)];
        const BatchItem& item = batch.items[static_cast<std::size_t>(j)];
        VisualFeatureMap& dv = d_visual[static_cast<std::size_t>(j)];
        if (cfg.lambda_sn != 0.0) {
            const double scale = 2.0 * cfg.lambda_sn / n;
            SimilarityMap up_s(f.s_sil.h, f.s_sil.w);
            for (int i = 0; i < up_s.size(); ++i) {
                up_s.values[static_cast<std::size_t>(i)] =
                    scale * f.s_sil.values[static_cast<std::size_t>(i)];
            }
            cosine_map_backward(a_sil, f.v, f.s_sil, up_s, d_sil[static_cast<std::size_t>(j)], dv);
            SimilarityMap up_n(f.s_noise.h, f.s_noise.w);
            for (int i = 0; i < up_n.size(); ++i) {
                up_n.values[static_cast<std::size_t>(i)] =
                    scale * f.s_noise.values[static_cast<std::size_t>(i)];
            }
            cosine_map_backward(f.a_noise, f.v, f.s_noise, up_n,
                                d_noise[static_cast<std::size_t>(j)], dv);
        }
        if (cfg.geo_enabled && cfg.lambda_geo != 0.0) {
            const double scale = 2.0 * cfg.lambda_geo / n;
            const SimilarityMap moved = apply_geo(f.s_geo_plain, item.transform);
            SimilarityMap up1(f.s_geo_transformed.h, f.s_geo_transformed.w);
            for (int i = 0; i < up1.size(); ++i) {
                up1.values[static_cast<std::size_t>(i)] =
                    scale * (f.s_geo_transformed.values[static_cast<std::size_t>(i)] -
                             moved.values[static_cast<std::size_t>(i)]);
            }
            VisualFeatureMap& dvt = d_visual_t[static_cast<std::size_t>(j)];
            dvt = VisualFeatureMap(layout.c, f.vt.h, f.vt.w);
            cosine_map_backward(f.a, f.vt, f.s_geo_transformed, up1,
                                d_audio[static_cast<std::size_t>(j)], dvt);
            SimilarityMap up2 = apply_geo_adjoint(up1, item.transform);
            for (double& v : up2.values) v = -v;
            cosine_map_backward(f.a, f.v, f.s_geo_plain, up2,
                                d_audio[static_cast<std::size_t>(j)], dv);
        }
    });

    // Encoder backward into per-item buffers, then an ordered reduction.
    std::vector<Vec> item_grad(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::ptrdiff_t j) {
        ItemForward& f = fw[static_cast<std::size_t>(j)];
        const BatchItem& item = batch.items[static_cast<std::size_t>(j)];
        Vec& g = item_grad[static_cast<std::size_t>(j)];
        g.assign(static_cast<std::size_t>(layout.param_count()), 0.0);
        audio_encoder_backward(f.a_cache, p, d_audio[static_cast<std::size_t>(j)], g);
        if (cfg.lambda_sn != 0.0) {
            audio_encoder_backward(f.noise_cache, p, d_noise[static_cast<std::size_t>(j)], g);
        }
        visual_encoder_backward(item.image, f.v_cache, p, d_visual[static_cast<std::size_t>(j)], g);
        if (cfg.geo_enabled && cfg.lambda_geo != 0.0) {
            visual_encoder_backward(f.t_image, f.vt_cache, p,
                                    d_visual_t[static_cast<std::size_t>(j)], g);
        }
    });
    for (int j = 0; j < n; ++j) {
        const Vec& g = item_grad[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < grad->size(); ++k) (*grad)[k] += g[k];
    }
    if (cfg.lambda_sn != 0.0) {
        Vec d_sil_total(static_cast<std::size_t>(layout.c), 0.0);
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < layout.c; ++k) {
                d_sil_total[static_cast<std::size_t>(k)] +=
                    d_sil[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            }
        }
        audio_encoder_backward(sil_cache, p, d_sil_total, *grad);
    }
    return out;
}

} // namespace

double contrastive_loss(std::span<const AudioEmbedding> audio_embs,
                        std::span<const VisualFeatureMap> visual_maps, double kappa) {
    const int n = static_cast<int>(audio_embs.size());
    if (n < 2 || visual_maps.size() != audio_embs.size()) {
        raise(ErrorKind::batch_too_small, "contrastive_loss: need matched batches of >= 2");
    }
    std::vector<double> logits(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            logits[static_cast<std::size_t>(i) * n + j] =
                max_pool(cosine_similarity_map(audio_embs[static_cast<std::size_t>(i)],
                                               visual_maps[static_cast<std::size_t>(j)])) /
                kappa;
        }
    }
    double ce = 0.0;
    std::vector<double> row(static_cast<std::size_t>(n)), col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(i) * n + j];
            col[static_cast<std::size_t>(j)] = logits[static_cast<std::size_t>(j) * n + i];
        }
        ce += 0.5 * (logsumexp(row) - row[static_cast<std::size_t>(i)]) / n;
        ce += 0.5 * (logsumexp(col) - col[static_cast<std::size_t>(i)]) / n;
    }
    return ce;
}

double silence_loss(const VisualFeatureMap& v, const EncoderParams& p) {
    const Vec zero_features(static_cast<std::size_t>(p.layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, p);
    return sum_squares(cosine_similarity_map(a_sil, v));
}

double noise_loss(const VisualFeatureMap& v, const AudioFeatures& noise_features,
                  const EncoderParams& p) {
    const AudioEmbedding a_noise = audio_encoder(noise_features, p);
    return sum_squares(cosine_similarity_map(a_noise, v));
}

double geo_equivariance_loss(const AudioEmbedding& a, const VisualFeatureMap& v,
                             const GeoTransform& t, const EncoderParams& p,
                             const SceneImage& image) {
    const VisualFeatureMap vt = visual_encoder(apply_geo(image, t), p);
    const SimilarityMap s_t = cosine_similarity_map(a, vt);
    const SimilarityMap moved = apply_geo(cosine_similarity_map(a, v), t);
    double acc = 0.0;
    for (int i = 0; i < s_t.size(); ++i) {
        const double r =
            s_t.values[static_cast<std::size_t>(i)] - moved.values[static_cast<std::size_t>(i)];
        acc += r * r;
    }
    return acc;
}

AudioFeatures feature_masking(const AudioFeatures& features, Rng& rng, int max_time_span,
                              int max_band_span) {
    AudioFeatures out = features;
    const int t_span = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_time_span) + 1));
    const int b_span = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_band_span) + 1));
    const int t0 = t_span < features.frames
                       ? static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(features.frames - t_span + 1)))
                       : 0;
    const int b0 = b_span < features.bands
                       ? static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(features.bands - b_span + 1)))
                       : 0;
    for (int t = t0; t < std::min(t0 + t_span, features.frames); ++t) {
        for (int b = 0; b < features.bands; ++b) out.at(t, b) = 0.0;
    }
    for (int b = b0; b < std::min(b0 + b_span, features.bands); ++b) {
        for (int t = 0; t < features.frames; ++t) out.at(t, b) = 0.0;
    }
    return out;
}

std::vector<int> find_similar_audio(std::span<const AudioEmbedding> embeddings) {
    const int n = static_cast<int>(embeddings.size());
    if (n < 2) {
        raise(ErrorKind::too_few_samples, "find_similar_audio: need >= 2 embeddings");
    }
    std::vector<int> best(static_cast<std::size_t>(n), -1);
    parallel_for(n, [&](std::ptrdiff_t i) {
        double best_sim = 0.0;
        int best_j = -1;
        for (int j = 0; j < n; ++j) {
            if (j == static_cast<int>(i)) continue;
            const double sim = cosine(embeddings[static_cast<std::size_t>(i)].values,
                                      embeddings[static_cast<std::size_t>(j)].values);
            if (best_j < 0 || sim > best_sim) {
                best_sim = sim;
                best_j = j;
            }
        }
        best[static_cast<std::size_t>(i)] = best_j;
    });
    return best;
}

Waveform sam_mix(const Waveform& w, const Waveform& w_sim, double alpha) {
    if (w.size() != w_sim.size()) {
        raise(ErrorKind::length_mismatch, "sam_mix: waveform lengths differ");
    }
    Waveform out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = (1.0 - alpha) * w[i] + alpha * w_sim[i];
    }
    return out;
}

double alpha_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0) {
        raise(ErrorKind::config_error, "alpha_schedule: negative epoch");
    }
    const double ramped =
        cfg.alpha_max * static_cast<double>(epoch) / static_cast<double>(cfg.alpha_ramp_epochs);
    return std::min(cfg.alpha_max, ramped);
}

LossBreakdown total_loss(const Batch& batch, const EncoderParams& p, const TrainConfig& cfg,
                         int epoch) {
    return run_batch(batch, p, cfg, epoch, nullptr);
}

Vec backward(const Batch& batch, const EncoderParams& p, const TrainConfig& cfg, int epoch) {
    Vec grad;
    run_batch(batch, p, cfg, epoch, &grad);
    return grad;
}

Vec silence_loss_param_grad(const SceneImage& image, const EncoderParams& p) {
    AudioCache ac;
    const Vec zero_features(static_cast<std::size_t>(p.layout.audio_in), 0.0);
    const AudioEmbedding a_sil = audio_encoder_flat(zero_features, p, &ac);
    VisualCache vc;
    const VisualFeatureMap v = visual_encoder(image, p, &vc);
    const SimilarityMap s = cosine_similarity_map(a_sil, v);
    SimilarityMap up(s.h, s.w);
    for (int i = 0; i < s.size(); ++i) {
        up.values[static_cast<std::size_t>(i)] = 2.0 * s.values[static_cast<std::size_t>(i)];
    }
    Vec d_audio(static_cast<std::size_t>(p.layout.c), 0.0);
    VisualFeatureMap d_visual(p.layout.c, v.h, v.w);
    cosine_map_backward(a_sil, v, s, up, d_audio, d_visual);
    Vec grad(static_cast<std::size_t>(p.layout.param_count()), 0.0);
    audio_encoder_backward(ac, p, d_audio, grad);
    visual_encoder_backward(image, vc, p, d_visual, grad);
    return grad;
}

Vec noise_loss_param_grad(const SceneImage& image, const AudioFeatures& noise_features,
                          const EncoderParams& p) {
    AudioCache ac;
    const AudioEmbedding a_noise = audio_encoder(noise_features, p, &ac);
    VisualCache vc;
    const VisualFeatureMap v = visual_encoder(image, p, &vc);
    const SimilarityMap s = cosine_similarity_map(a_noise, v);
    SimilarityMap up(s.h, s.w);
    for (int i = 0; i < s.size(); ++i) {
        up.values[static_cast<std::size_t>(i)] = 2.0 * s.values[static_cast<std::size_t>(i)];
    }
    Vec d_audio(static_cast<std::size_t>(p.layout.c), 0.0);
    VisualFeatureMap d_visual(p.layout.c, v.h, v.w);
    cosine_map_backward(a_noise, v, s, up, d_audio, d_visual);
    Vec grad(static_cast<std::size_t>(p.layout.param_count()), 0.0);
    audio_encoder_backward(ac, p, d_audio, grad);
    visual_encoder_backward(image, vc, p, d_visual, grad);
    return grad;
}

Vec geo_loss_param_grad(const SceneImage& image, const AudioFeatures& audio_features,
                        const GeoTransform& t, const EncoderParams& p) {
    AudioCache ac;
    const AudioEmbedding a = audio_encoder(audio_features, p, &ac);
    VisualCache vc;
    const VisualFeatureMap v = visual_encoder(image, p, &vc);
    const SceneImage moved_image = apply_geo(image, t);
    VisualCache vtc;
    const VisualFeatureMap vt = visual_encoder(moved_image, p, &vtc);
    const SimilarityMap s_t = cosine_similarity_map(a, vt);
    const SimilarityMap s_plain = cosine_similarity_map(a, v);
    const SimilarityMap moved = apply_geo(s_plain, t);
    SimilarityMap up1(s_t.h, s_t.w);
    for (int i = 0; i < s_t.size(); ++i) {
        up1.values[static_cast<std::size_t>(i)] =
            2.0 * (s_t.values[static_cast<std::size_t>(i)] -
                   moved.values[static_cast<std::size_t>(i)]);
    }
    Vec d_audio(static_cast<std::size_t>(p.layout.c), 0.0);
    VisualFeatureMap d_vt(p.layout.c, vt.h, vt.w);
    cosine_map_backward(a, vt, s_t, up1, d_audio, d_vt);
    SimilarityMap up2 = apply_geo_adjoint(up1, t);
    for (double& x : up2.values) x = -x;
    VisualFeatureMap d_v(p.layout.c, v.h, v.w);
    cosine_map_backward(a, v, s_plain, up2, d_audio, d_v);
    Vec grad(static_cast<std::size_t>(p.layout.param_count()), 0.0);
    audio_encoder_backward(ac, p, d_audio, grad);
    visual_encoder_backward(image, vc, p, d_v, grad);
    visual_encoder_backward(moved_image, vtc, p, d_vt, grad);
    return grad;
}

} // namespace avsl
