#pragma once

#include "avsl/core.hpp"
#include "avsl/synthdata.hpp"

namespace avsl {

// Toy geometric transform set: cell rearrangements that apply identically to
// an image grid and to an h x w similarity map. Translation fills vacated
// cells with zeros; flip and rotation are pure permutations.
struct GeoTransform {
    enum class Kind { identity, hflip, translate, rot90 };

    Kind kind = Kind::identity;
    int dy = 0; // translate only
    int dx = 0;
    int quarter_turns = 1; // rot90 only, in {1,2,3}, clockwise

    static GeoTransform identity() { return {}; }
    static GeoTransform hflip() { return {Kind::hflip, 0, 0, 1}; }
    static GeoTransform translate(int dy, int dx) { return {Kind::translate, dy, dx, 1}; }
    static GeoTransform rot90(int quarter_turns) { return {Kind::rot90, 0, 0, quarter_turns}; }
};

SceneImage apply_geo(const SceneImage& image, const GeoTransform& t);
SimilarityMap apply_geo(const SimilarityMap& map, const GeoTransform& t);

// Adjoint of the linear map S -> apply_geo(S, t), used by the equivariance
// backward pass: permutations invert, translations scatter back and drop the
// zero-filled band.
SimilarityMap apply_geo_adjoint(const SimilarityMap& upstream, const GeoTransform& t);

} // namespace avsl
