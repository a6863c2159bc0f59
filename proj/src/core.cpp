#include "avsl/core.hpp"

#include <cmath>
#include <string>

namespace avsl {

double l2_norm(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc);
}

double l2_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        raise(ErrorKind::dimension_mismatch,
              "l2_distance: lengths differ (" + std::to_string(x.size()) + " vs " +
                  std::to_string(y.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

double cosine(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        raise(ErrorKind::dimension_mismatch,
              "cosine: lengths differ (" + std::to_string(x.size()) + " vs " +
                  std::to_string(y.size()) + ")");
    }
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) {
        raise(ErrorKind::zero_norm, "cosine: zero-norm input vector");
    }
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

SimilarityMap cosine_similarity_map(const AudioEmbedding& a, const VisualFeatureMap& v) {
    if (a.dim() != v.c) {
        raise(ErrorKind::dimension_mismatch,
              "cosine_similarity_map: audio dim " + std::to_string(a.dim()) +
                  " vs visual channels " + std::to_string(v.c));
    }
    const double na = l2_norm(a.values);
    if (na == 0.0) {
        raise(ErrorKind::zero_norm, "cosine_similarity_map: zero-norm audio embedding");
    }
    SimilarityMap s(v.h, v.w);
    for (int y = 0; y < v.h; ++y) {
        for (int x = 0; x < v.w; ++x) {
            double dot = 0.0, nu = 0.0;
            for (int k = 0; k < v.c; ++k) {
                const double u = v.at(k, y, x);
                dot += a.values[static_cast<std::size_t>(k)] * u;
                nu += u * u;
            }
            if (nu == 0.0) {
                raise(ErrorKind::zero_norm,
                      "cosine_similarity_map: zero-norm visual column at (" +
                          std::to_string(y) + "," + std::to_string(x) + ")");
            }
            s.at(y, x) = dot / (na * std::sqrt(nu));
        }
    }
    return s;
}

double max_pool(const SimilarityMap& s) {
    return max_pool_argmax(s).value;
}

MapArgmax max_pool_argmax(const SimilarityMap& s) {
    if (s.h <= 0 || s.w <= 0 || s.values.empty()) {
        raise(ErrorKind::empty_map, "max_pool: empty similarity map");
    }
    MapArgmax best{s.values[0], 0, 0};
    for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
            const double v = s.at(y, x);
            if (v > best.value) {
                best = {v, y, x};
            }
        }
    }
    return best;
}

Vec mean_pool_visual(const VisualFeatureMap& v) {
    if (v.h <= 0 || v.w <= 0 || v.c <= 0) {
        raise(ErrorKind::empty_map, "mean_pool_visual: empty feature map");
    }
    Vec out(static_cast<std::size_t>(v.c), 0.0);
    for (int k = 0; k < v.c; ++k) {
        double acc = 0.0;
        for (int y = 0; y < v.h; ++y) {
            for (int x = 0; x < v.w; ++x) acc += v.at(k, y, x);
        }
        out[static_cast<std::size_t>(k)] = acc / (static_cast<double>(v.h) * v.w);
    }
    return out;
}

} // namespace avsl
