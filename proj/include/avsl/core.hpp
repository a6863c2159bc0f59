#pragma once

#include <span>
#include <vector>

#include "avsl/errors.hpp"

namespace avsl {

using Vec = std::vector<double>;

// Audio feature vector a in R^c.
struct AudioEmbedding {
    Vec values;

    int dim() const { return static_cast<int>(values.size()); }
};

// Visual features v in R^{c x h x w}, row-major over (channel, row, col).
struct VisualFeatureMap {
    int c = 0;
    int h = 0;
    int w = 0;
    Vec values;

    VisualFeatureMap() = default;
    VisualFeatureMap(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), values(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

    double& at(int k, int y, int x) {
        return values[(static_cast<std::size_t>(k) * h + y) * w + x];
    }
    double at(int k, int y, int x) const {
        return values[(static_cast<std::size_t>(k) * h + y) * w + x];
    }

    // The c-vector of one spatial location.
    Vec column(int y, int x) const {
        Vec out(static_cast<std::size_t>(c));
        for (int k = 0; k < c; ++k) out[static_cast<std::size_t>(k)] = at(k, y, x);
        return out;
    }
};

// Cosine similarity map S in [-1,1]^{h x w}, row-major.
struct SimilarityMap {
    int h = 0;
    int w = 0;
    Vec values;

    SimilarityMap() = default;
    SimilarityMap(int h_, int w_) : h(h_), w(w_), values(static_cast<std::size_t>(h_) * w_, 0.0) {}

    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
    int size() const { return h * w; }
};

// One audio embedding next to the matching spatially pooled visual embedding.
struct PooledPair {
    Vec audio;
    Vec visual_pooled;
};

double l2_norm(std::span<const double> x);
double l2_distance(std::span<const double> x, std::span<const double> y);
double cosine(std::span<const double> x, std::span<const double> y);

// S[y][x] = (a . v[:,y,x]) / (||a|| * ||v[:,y,x]||). Throws ZeroNorm when the
// audio embedding or any spatial column is exactly zero; degenerate features
// mean a bug upstream, never a value to paper over.
SimilarityMap cosine_similarity_map(const AudioEmbedding& a, const VisualFeatureMap& v);

struct MapArgmax {
    double value = 0.0;
    int y = 0;
    int x = 0;
};

// Global audio-visual correspondence value: max over the map. Ties resolve to
// the first cell in row-major order so gradient routing is deterministic.
double max_pool(const SimilarityMap& s);
MapArgmax max_pool_argmax(const SimilarityMap& s);

// Spatial mean of the feature map, one value per channel.
Vec mean_pool_visual(const VisualFeatureMap& v);

} // namespace avsl
