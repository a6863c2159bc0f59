#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "avsl/conditions.hpp"
#include "avsl/core.hpp"
#include "avsl/thresholding.hpp"

namespace avsl {

// Ground-truth region rasterized onto the similarity-map grid.
struct GroundTruthRegion {
    enum class Kind { bbox, mask };

    Kind kind = Kind::mask;
    BinaryMask region;
    int area = 0;

    // Inclusive cell coordinates; every cell whose center falls inside the
    // box is marked, which on integer boxes is exactly [x0..x1] x [y0..y1].
    static GroundTruthRegion from_bbox(int x0, int y0, int x1, int y1, int h, int w);
    static GroundTruthRegion from_mask(BinaryMask mask);
};

// One row of the evaluation: similarity maps per audio condition, the
// ground truth of the positive pair, and the pooled embedding pair.
struct EvalRecord {
    std::string id;
    std::string class_label;
    SimilarityMap pos_map;
    std::array<SimilarityMap, 3> neg_maps; // indexed by Condition
    GroundTruthRegion gt;
    PooledPair pooled;
};

struct MetricsReport {
    double ciou_uth = 0.0;
    double ciou_adap = 0.0;
    double auc_uth = 0.0;
    double auc_adap = 0.0;
    std::array<double, 3> pia{};   // percent, indexed by Condition
    std::array<double, 3> auc_n{}; // percent, indexed by Condition
    double f_loc = 0.0;
    double f_auc = 0.0;
    double separability = 0.0;
    double alignment = 0.0;
    double magnitude = 0.0;
    double theta = 0.0;
    int n_samples = 0;
};

double iou(const BinaryMask& mask, const GroundTruthRegion& gt);

// Percent of samples with iou strictly above tau.
double success_rate(std::span<const double> ious, double tau);

// Trapezoidal integral of the success rate over 21 thresholds 0.00..1.00,
// as a percent.
double auc(std::span<const double> ious);

// Percent of the grid that is active.
double pia(const BinaryMask& mask);

// Trapezoidal integral over tau in {0,5,...,100} of the fraction of samples
// with pIA <= tau (non-strict), as a percent.
double auc_n(std::span<const double> pias);

// Harmonic mean H(a,b) = 2ab/(a+b), zero when a+b is zero.
double harmonic_mean(double a, double b);

double f_loc(double ciou_uth, const std::array<double, 3>& pia_by_condition);
double f_auc(double auc_uth, const std::array<double, 3>& auc_n_by_condition);

// Q1 of positive maxima minus Q3 of negative maxima; negative values mean the
// interquartile ranges overlap.
double separability(std::span<const double> pos_maxima, std::span<const double> neg_maxima);

double alignment(std::span<const PooledPair> pairs);
double magnitude(std::span<const PooledPair> pairs);

// Full report over a manifest-ordered record list. Per-record work runs in
// parallel; aggregation reduces the per-record scalars in manifest order, so
// the result is identical at any thread count.
MetricsReport evaluate(std::span<const EvalRecord> records, const UniversalThreshold& theta);

} // namespace avsl
