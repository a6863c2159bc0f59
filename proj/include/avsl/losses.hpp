#pragma once

#include <span>
#include <string>
#include <vector>

#include "avsl/core.hpp"
#include "avsl/encoders.hpp"
#include "avsl/geo.hpp"
#include "avsl/rng.hpp"
#include "avsl/synthdata.hpp"
#include "avsl/train_config.hpp"

namespace avsl {

// One training item with its per-step stochastic inputs already materialized.
struct BatchItem {
    SceneImage image;
    AudioFeatures audio;   // positive audio, post SAM/masking
    AudioFeatures noise;   // fresh noise realization for this image and step
    GeoTransform transform = GeoTransform::identity();
    std::string class_label;
    std::uint64_t noise_seed = 0;
};

struct Batch {
    std::vector<BatchItem> items;
};

struct LossBreakdown {
    double contrastive = 0.0;
    double l_s = 0.0;   // batch mean of the silence term
    double l_n = 0.0;   // batch mean of the noise term
    double l_geo = 0.0; // batch mean of the equivariance term
    double total = 0.0;
};

// Symmetric InfoNCE over max-pooled map logits, positives on the diagonal.
double contrastive_loss(std::span<const AudioEmbedding> audio_embs,
                        std::span<const VisualFeatureMap> visual_maps, double kappa);

// ||S(a_silence, v)||^2 with the silence embedding encoded from all-zero
// audio features.
double silence_loss(const VisualFeatureMap& v, const EncoderParams& p);

double noise_loss(const VisualFeatureMap& v, const AudioFeatures& noise_features,
                  const EncoderParams& p);

// ||S(a, encode(t(image))) - t(S(a, encode(image)))||^2.
double geo_equivariance_loss(const AudioEmbedding& a, const VisualFeatureMap& v,
                             const GeoTransform& t, const EncoderParams& p,
                             const SceneImage& image);

// Zero one contiguous time span and one band span; span widths drawn
// uniformly from [0, max].
AudioFeatures feature_masking(const AudioFeatures& features, Rng& rng, int max_time_span,
                              int max_band_span);

// For each embedding, the index of its most cosine-similar other embedding;
// ties go to the smallest index.
std::vector<int> find_similar_audio(std::span<const AudioEmbedding> embeddings);

Waveform sam_mix(const Waveform& w, const Waveform& w_sim, double alpha);

// Linear ramp from 0 to alpha_max at alpha_ramp_epochs, clamped after.
double alpha_schedule(int epoch, const TrainConfig& cfg);

// contrastive + lambda_sn*(mean L_S + mean L_N) + lambda_geo*mean L_geo.
LossBreakdown total_loss(const Batch& batch, const EncoderParams& p, const TrainConfig& cfg,
                         int epoch);

// Analytic reverse-mode gradient of total_loss with respect to every
// parameter. Per-item contributions are computed in parallel into private
// buffers and reduced in item order, so the result is bitwise identical at
// any thread count.
Vec backward(const Batch& batch, const EncoderParams& p, const TrainConfig& cfg, int epoch);

// Per-term parameter gradients, with the visual features re-encoded from the
// image so the chain runs through both encoders. These are the verification
// surface for the finite-difference suite.
Vec silence_loss_param_grad(const SceneImage& image, const EncoderParams& p);
Vec noise_loss_param_grad(const SceneImage& image, const AudioFeatures& noise_features,
                          const EncoderParams& p);
Vec geo_loss_param_grad(const SceneImage& image, const AudioFeatures& audio_features,
                        const GeoTransform& t, const EncoderParams& p);

} // namespace avsl
