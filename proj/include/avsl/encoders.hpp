#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avsl/core.hpp"
#include "avsl/synthdata.hpp"

namespace avsl {

// Two-stream toy encoders, both 2-layer tanh MLPs over flat parameter
// vectors. The audio stream consumes the whole flattened feature grid; the
// visual stream applies one shared MLP independently per grid cell, which is
// what makes permutation transforms exactly equivariant.
struct EncoderLayout {
    int audio_in = 0;
    int audio_hidden = 32;
    int visual_in = 0;
    int visual_hidden = 32;
    int c = 16;

    int audio_w1() const { return audio_hidden * audio_in; }
    int audio_w2() const { return c * audio_hidden; }
    int visual_w1() const { return visual_hidden * visual_in; }
    int visual_w2() const { return c * visual_hidden; }

    // Segment offsets into the flat parameter vector, in declaration order:
    // a_w1, a_b1, a_w2, a_b2, v_w1, v_b1, v_w2, v_b2.
    int off_a_w1() const { return 0; }
    int off_a_b1() const { return off_a_w1() + audio_w1(); }
    int off_a_w2() const { return off_a_b1() + audio_hidden; }
    int off_a_b2() const { return off_a_w2() + audio_w2(); }
    int off_v_w1() const { return off_a_b2() + c; }
    int off_v_b1() const { return off_v_w1() + visual_w1(); }
    int off_v_w2() const { return off_v_b1() + visual_hidden; }
    int off_v_b2() const { return off_v_w2() + visual_w2(); }
    int param_count() const { return off_v_b2() + c; }

    bool operator==(const EncoderLayout&) const = default;
};

struct EncoderParams {
    EncoderLayout layout;
    Vec values;

    explicit EncoderParams(EncoderLayout l = {})
        : layout(l), values(static_cast<std::size_t>(l.param_count()), 0.0) {}
};

// Uniform +-sqrt(6/(fan_in+fan_out)) per layer, biases included, so no
// forward pass can produce an exactly zero embedding.
EncoderParams init_params(const EncoderLayout& layout, std::uint64_t seed);

// Cached activations of one audio forward pass, reused by the backward pass.
struct AudioCache {
    Vec input;
    Vec hidden;
};

// Hidden activations per grid cell for one visual forward pass.
struct VisualCache {
    std::vector<Vec> hidden; // h*w entries, row-major
};

AudioEmbedding audio_encoder(const AudioFeatures& features, const EncoderParams& p,
                             AudioCache* cache = nullptr);

// Same forward over an arbitrary flat feature vector (the silence input is a
// zero vector, not a featurized waveform).
AudioEmbedding audio_encoder_flat(std::span<const double> input, const EncoderParams& p,
                                  AudioCache* cache = nullptr);

VisualFeatureMap visual_encoder(const SceneImage& image, const EncoderParams& p,
                                VisualCache* cache = nullptr);

// Accumulate d(loss)/d(params) given the upstream gradient on the embedding.
void audio_encoder_backward(const AudioCache& cache, const EncoderParams& p,
                            std::span<const double> d_out, Vec& grad);

// Upstream gradient over the whole feature map, chained through the shared
// per-cell MLP.
void visual_encoder_backward(const SceneImage& image, const VisualCache& cache,
                             const EncoderParams& p, const VisualFeatureMap& d_map, Vec& grad);

} // namespace avsl
