#include "avsl/geo.hpp"

#include <cstdlib>
#include <string>

namespace avsl {

namespace {

// For each output cell, the row-major source cell index, or -1 for zero fill.
std::vector<int> index_map(int h, int w, const GeoTransform& t) {
    std::vector<int> map(static_cast<std::size_t>(h) * w, -1);
    switch (t.kind) {
        case GeoTransform::Kind::identity:
            for (int i = 0; i < h * w; ++i) map[static_cast<std::size_t>(i)] = i;
            break;
        case GeoTransform::Kind::hflip:
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    map[static_cast<std::size_t>(y) * w + x] = y * w + (w - 1 - x);
                }
            }
            break;
        case GeoTransform::Kind::translate: {
            if (std::abs(t.dy) >= h || std::abs(t.dx) >= w) {
                raise(ErrorKind::bad_transform,
                      "translate: shift (" + std::to_string(t.dy) + "," + std::to_string(t.dx) +
                          ") out of bounds for " + std::to_string(h) + "x" + std::to_string(w));
            }
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const int sy = y - t.dy;
                    const int sx = x - t.dx;
                    if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                        map[static_cast<std::size_t>(y) * w + x] = sy * w + sx;
                    }
                }
            }
            break;
        }
        case GeoTransform::Kind::rot90: {
            if (h != w) {
                raise(ErrorKind::bad_transform, "rot90 requires a square grid");
            }
            if (t.quarter_turns < 1 || t.quarter_turns > 3) {
                raise(ErrorKind::bad_transform, "rot90 quarter_turns must be 1, 2 or 3");
            }
            // One clockwise quarter turn: out(y,x) = in(h-1-x, y).
            std::vector<int> cur(static_cast<std::size_t>(h) * w);
            for (int i = 0; i < h * w; ++i) cur[static_cast<std::size_t>(i)] = i;
            for (int turn = 0; turn < t.quarter_turns; ++turn) {
                std::vector<int> next(static_cast<std::size_t>(h) * w);
                for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                        next[static_cast<std::size_t>(y) * w + x] =
                            cur[static_cast<std::size_t>(h - 1 - x) * w + y];
                    }
                }
                cur = std::move(next);
            }
            map = std::move(cur);
            break;
        }
    }
    return map;
}

} // namespace

SceneImage apply_geo(const SceneImage& image, const GeoTransform& t) {
    const std::vector<int> map = index_map(image.h, image.w, t);
    SceneImage out(image.h, image.w, image.d);
    for (int i = 0; i < image.h * image.w; ++i) {
        const int src = map[static_cast<std::size_t>(i)];
        if (src < 0) continue;
        for (int k = 0; k < image.d; ++k) {
            out.cells[static_cast<std::size_t>(i) * image.d + k] =
                image.cells[static_cast<std::size_t>(src) * image.d + k];
        }
    }
    out.objects.reserve(image.objects.size());
    for (const SceneObject& obj : image.objects) {
        SceneObject moved;
        moved.class_label = obj.class_label;
        moved.mask = BinaryMask(image.h, image.w);
        for (int i = 0; i < image.h * image.w; ++i) {
            const int src = map[static_cast<std::size_t>(i)];
            if (src >= 0) moved.mask.bits[static_cast<std::size_t>(i)] = obj.mask.bits[static_cast<std::size_t>(src)];
        }
        out.objects.push_back(std::move(moved));
    }
    return out;
}

SimilarityMap apply_geo(const SimilarityMap& map_in, const GeoTransform& t) {
    const std::vector<int> map = index_map(map_in.h, map_in.w, t);
    SimilarityMap out(map_in.h, map_in.w);
    for (int i = 0; i < map_in.size(); ++i) {
        const int src = map[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(i)] =
            src >= 0 ? map_in.values[static_cast<std::size_t>(src)] : 0.0;
    }
    return out;
}

SimilarityMap apply_geo_adjoint(const SimilarityMap& upstream, const GeoTransform& t) {
    const std::vector<int> map = index_map(upstream.h, upstream.w, t);
    SimilarityMap out(upstream.h, upstream.w);
    for (int i = 0; i < upstream.size(); ++i) {
        const int src = map[static_cast<std::size_t>(i)];
        if (src >= 0) {
            out.values[static_cast<std::size_t>(src)] += upstream.values[static_cast<std::size_t>(i)];
        }
    }
    return out;
}

} // namespace avsl
