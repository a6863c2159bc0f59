#include "avsl/encoders.hpp"

#include <cmath>
#include <string>

#include "avsl/rng.hpp"

namespace avsl {

namespace {

void fill_uniform(std::span<double> dst, double bound, Rng& rng) {
    for (double& v : dst) v = rng.uniform(-bound, bound);
}

// out = W x + b with W row-major (rows x cols).
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
    const std::size_t rows = b.size();
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] = acc;
    }
}

struct MlpSegments {
    std::span<const double> w1, b1, w2, b2;
};

MlpSegments audio_segments(const EncoderParams& p) {
    const EncoderLayout& l = p.layout;
    const double* base = p.values.data();
    return {{base + l.off_a_w1(), static_cast<std::size_t>(l.audio_w1())},
            {base + l.off_a_b1(), static_cast<std::size_t>(l.audio_hidden)},
            {base + l.off_a_w2(), static_cast<std::size_t>(l.audio_w2())},
            {base + l.off_a_b2(), static_cast<std::size_t>(l.c)}};
}

MlpSegments visual_segments(const EncoderParams& p) {
    const EncoderLayout& l = p.layout;
    const double* base = p.values.data();
    return {{base + l.off_v_w1(), static_cast<std::size_t>(l.visual_w1())},
            {base + l.off_v_b1(), static_cast<std::size_t>(l.visual_hidden)},
            {base + l.off_v_w2(), static_cast<std::size_t>(l.visual_w2())},
            {base + l.off_v_b2(), static_cast<std::size_t>(l.c)}};
}

Vec mlp_forward(const MlpSegments& seg, std::span<const double> x, Vec* hidden_out) {
    Vec hidden(seg.b1.size());
    affine(seg.w1, seg.b1, x, hidden);
    for (double& h : hidden) h = std::tanh(h);
    Vec out(seg.b2.size());
    affine(seg.w2, seg.b2, hidden, out);
    if (hidden_out) *hidden_out = hidden;
    return out;
}

// Chains d(loss)/d(out) through out = W2 h + b2, h = tanh(W1 x + b1).
// Gradient segments live at fixed offsets of the flat vector.
void mlp_backward(const MlpSegments& seg, std::span<const double> x, std::span<const double> hidden,
                  std::span<const double> d_out, std::span<double> g_w1, std::span<double> g_b1,
                  std::span<double> g_w2, std::span<double> g_b2) {
    const std::size_t hid = hidden.size();
    const std::size_t in = x.size();
    const std::size_t out = d_out.size();
    Vec d_hidden(hid, 0.0);
    for (std::size_t k = 0; k < out; ++k) {
        const double g = d_out[k];
        if (g == 0.0) continue;
        g_b2[k] += g;
        double* gw2 = g_w2.data() + k * hid;
        const double* w2 = seg.w2.data() + k * hid;
        for (std::size_t j = 0; j < hid; ++j) {
            gw2[j] += g * hidden[j];
            d_hidden[j] += g * w2[j];
        }
    }
    for (std::size_t j = 0; j < hid; ++j) {
        const double dz = d_hidden[j] * (1.0 - hidden[j] * hidden[j]);
        if (dz == 0.0) continue;
        g_b1[j] += dz;
        double* gw1 = g_w1.data() + j * in;
        for (std::size_t i = 0; i < in; ++i) gw1[i] += dz * x[i];
    }
}

} // namespace

EncoderParams init_params(const EncoderLayout& layout, std::uint64_t seed) {
    EncoderParams p(layout);
    Rng rng(seed);
    auto bound = [](int fan_in, int fan_out) {
        return std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    };
    double* base = p.values.data();
    const double ba1 = bound(layout.audio_in, layout.audio_hidden);
    fill_uniform({base + layout.off_a_w1(), static_cast<std::size_t>(layout.audio_w1())}, ba1, rng);
    fill_uniform({base + layout.off_a_b1(), static_cast<std::size_t>(layout.audio_hidden)}, ba1, rng);
    const double ba2 = bound(layout.audio_hidden, layout.c);
    fill_uniform({base + layout.off_a_w2(), static_cast<std::size_t>(layout.audio_w2())}, ba2, rng);
    fill_uniform({base + layout.off_a_b2(), static_cast<std::size_t>(layout.c)}, ba2, rng);
    const double bv1 = bound(layout.visual_in, layout.visual_hidden);
    fill_uniform({base + layout.off_v_w1(), static_cast<std::size_t>(layout.visual_w1())}, bv1, rng);
    fill_uniform({base + layout.off_v_b1(), static_cast<std::size_t>(layout.visual_hidden)}, bv1, rng);
    const double bv2 = bound(layout.visual_hidden, layout.c);
    fill_uniform({base + layout.off_v_w2(), static_cast<std::size_t>(layout.visual_w2())}, bv2, rng);
    fill_uniform({base + layout.off_v_b2(), static_cast<std::size_t>(layout.c)}, bv2, rng);
    return p;
}

AudioEmbedding audio_encoder_flat(std::span<const double> input, const EncoderParams& p,
                                  AudioCache* cache) {
    if (static_cast<int>(input.size()) != p.layout.audio_in) {
        raise(ErrorKind::shape_mismatch,
              "audio_encoder: input length " + std::to_string(input.size()) +
                  " does not match layout audio_in " + std::to_string(p.layout.audio_in));
    }
    Vec hidden;
    Vec out = mlp_forward(audio_segments(p), input, &hidden);
    if (cache) {
        cache->input.assign(input.begin(), input.end());
        cache->hidden = std::move(hidden);
    }
    return AudioEmbedding{std::move(out)};
}

AudioEmbedding audio_encoder(const AudioFeatures& features, const EncoderParams& p,
                             AudioCache* cache) {
    return audio_encoder_flat(features.e, p, cache);
}

VisualFeatureMap visual_encoder(const SceneImage& image, const EncoderParams& p,
                                VisualCache* cache) {
    if (image.d != p.layout.visual_in) {
        raise(ErrorKind::shape_mismatch,
              "visual_encoder: descriptor length " + std::to_string(image.d) +
                  " does not match layout visual_in " + std::to_string(p.layout.visual_in));
    }
    const MlpSegments seg = visual_segments(p);
    VisualFeatureMap v(p.layout.c, image.h, image.w);
    if (cache) cache->hidden.assign(static_cast<std::size_t>(image.h) * image.w, Vec{});
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x) {
            Vec hidden;
            Vec out = mlp_forward(seg, image.cell(y, x), &hidden);
            for (int k = 0; k < p.layout.c; ++k) v.at(k, y, x) = out[static_cast<std::size_t>(k)];
            if (cache) {
                cache->hidden[static_cast<std::size_t>(y) * image.w + x] = std::move(hidden);
            }
        }
    }
    return v;
}

void audio_encoder_backward(const AudioCache& cache, const EncoderParams& p,
                            std::span<const double> d_out, Vec& grad) {
    const EncoderLayout& l = p.layout;
    double* g = grad.data();
    mlp_backward(audio_segments(p), cache.input, cache.hidden, d_out,
                 {g + l.off_a_w1(), static_cast<std::size_t>(l.audio_w1())},
                 {g + l.off_a_b1(), static_cast<std::size_t>(l.audio_hidden)},
                 {g + l.off_a_w2(), static_cast<std::size_t>(l.audio_w2())},
                 {g + l.off_a_b2(), static_cast<std::size_t>(l.c)});
}

void visual_encoder_backward(const SceneImage& image, const VisualCache& cache,
                             const EncoderParams& p, const VisualFeatureMap& d_map, Vec& grad) {
    const EncoderLayout& l = p.layout;
    const MlpSegments seg = visual_segments(p);
    double* g = grad.data();
    std::span<double> g_w1{g + l.off_v_w1(), static_cast<std::size_t>(l.visual_w1())};
    std::span<double> g_b1{g + l.off_v_b1(), static_cast<std::size_t>(l.visual_hidden)};
    std::span<double> g_w2{g + l.off_v_w2(), static_cast<std::size_t>(l.visual_w2())};
    std::span<double> g_b2{g + l.off_v_b2(), static_cast<std::size_t>(l.c)};
    Vec d_out(static_cast<std::size_t>(l.c));
    for (int y = 0; y < image.h; ++y) {
        for (int x = 0; x < image.w; ++x) {
            bool any = false;
            for (int k = 0; k < l.c; ++k) {
                d_out[static_cast<std::size_t>(k)] = d_map.at(k, y, x);
                any = any || d_out[static_cast<std::size_t>(k)] != 0.0;
            }
            if (!any) continue;
            mlp_backward(seg, image.cell(y, x),
                         cache.hidden[static_cast<std::size_t>(y) * image.w + x], d_out, g_w1,
                         g_b1, g_w2, g_b2);
        }
    }
}

} // namespace avsl
