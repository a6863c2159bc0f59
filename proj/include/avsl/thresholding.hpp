#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avsl/conditions.hpp"
#include "avsl/core.hpp"

namespace avsl {

// Localization mask over the similarity-map grid.
struct BinaryMask {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> bits;

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), bits(static_cast<std::size_t>(h_) * w_, 0) {}

    std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * w + x]; }
    int size() const { return h * w; }

    int popcount() const {
        int n = 0;
        for (std::uint8_t b : bits) n += (b != 0);
        return n;
    }
};

// Binarization threshold calibrated as the 3rd quartile of negative-condition
// map maxima, with the calibration pool recorded next to the value.
struct UniversalThreshold {
    double theta = 0.0;
    int n_calibration = 0;
    std::vector<Condition> source_conditions;
};

// Linear-interpolation quantile: sort ascending, p = (n-1)*q, interpolate
// between the straddling order statistics.
double quantile(std::span<const double> xs, double q);

UniversalThreshold universal_threshold(std::span<const double> negative_maxima,
                                       std::vector<Condition> sources = {
                                           Condition::silence, Condition::noise,
                                           Condition::offscreen});

// bit = (S > theta), strict, so a map whose max equals theta comes out empty.
BinaryMask binarize_fixed(const SimilarityMap& s, double theta);

// Exactly the B largest cells; ties at the cut value go to the smallest
// row-major index.
BinaryMask binarize_adaptive(const SimilarityMap& s, int area);

} // namespace avsl
