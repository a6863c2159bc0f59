#include "avsl/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace avsl {

double quantile(std::span<const double> xs, double q) {
    if (xs.empty()) {
        raise(ErrorKind::empty_input, "quantile: empty input");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        raise(ErrorKind::config_error, "quantile: q must be in [0,1], got " + std::to_string(q));
    }
    std::vector<double> sorted(xs.begin(), xs.end());
    for (double v : sorted) {
        if (std::isnan(v)) raise(ErrorKind::nan_input, "quantile: NaN in input");
    }
    std::sort(sorted.begin(), sorted.end());
    const double p = static_cast<double>(sorted.size() - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(p);
    const double frac = p - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 == sorted.size()) {
        return sorted[lo];
    }
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

UniversalThreshold universal_threshold(std::span<const double> negative_maxima,
                                       std::vector<Condition> sources) {
    if (negative_maxima.size() < 4) {
        raise(ErrorKind::too_few_samples,
              "universal_threshold: need >= 4 negative maxima, got " +
                  std::to_string(negative_maxima.size()));
    }
    UniversalThreshold t;
    t.theta = quantile(negative_maxima, 0.75);
    t.n_calibration = static_cast<int>(negative_maxima.size());
    t.source_conditions = std::move(sources);
    return t;
}

BinaryMask binarize_fixed(const SimilarityMap& s, double theta) {
    if (std::isnan(theta)) {
        raise(ErrorKind::nan_input, "binarize_fixed: theta is NaN");
    }
    BinaryMask m(s.h, s.w);
    for (int i = 0; i < s.size(); ++i) {
        m.bits[static_cast<std::size_t>(i)] = s.values[static_cast<std::size_t>(i)] > theta;
    }
    return m;
}

BinaryMask binarize_adaptive(const SimilarityMap& s, int area) {
    const int n = s.size();
    if (area < 1 || area > n) {
        raise(ErrorKind::bad_area,
              "binarize_adaptive: B=" + std::to_string(area) + " outside [1," +
                  std::to_string(n) + "]");
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    // Descending by value, ascending row-major index on ties; nth_element
    // would lose the tie-break order, so sort outright (maps are small).
    std::sort(order.begin(), order.end(), [&s](int a, int b) {
        const double va = s.values[static_cast<std::size_t>(a)];
        const double vb = s.values[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;
    });
    BinaryMask m(s.h, s.w);
    for (int i = 0; i < area; ++i) {
        m.bits[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
    return m;
}

} // namespace avsl
