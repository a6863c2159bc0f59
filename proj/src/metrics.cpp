#include "avsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avsl/parallel.hpp"

namespace avsl {

GroundTruthRegion GroundTruthRegion::from_bbox(int x0, int y0, int x1, int y1, int h, int w) {
    if (x0 > x1 || y0 > y1 || x0 < 0 || y0 < 0 || x1 >= w || y1 >= h) {
        raise(ErrorKind::config_error, "ground-truth bbox outside map bounds");
    }
    BinaryMask m(h, w);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) m.at(y, x) = 1;
    }
    GroundTruthRegion g;
    g.kind = Kind::bbox;
    g.area = m.popcount();
    g.region = std::move(m);
    return g;
}

GroundTruthRegion GroundTruthRegion::from_mask(BinaryMask mask) {
    GroundTruthRegion g;
    g.kind = Kind::mask;
    g.area = mask.popcount();
    g.region = std::move(mask);
    if (g.area == 0) {
        raise(ErrorKind::config_error, "ground-truth mask is empty");
    }
    return g;
}

double iou(const BinaryMask& mask, const GroundTruthRegion& gt) {
    if (mask.h != gt.region.h || mask.w != gt.region.w) {
        raise(ErrorKind::shape_mismatch,
              "iou: mask " + std::to_string(mask.h) + "x" + std::to_string(mask.w) + " vs gt " +
                  std::to_string(gt.region.h) + "x" + std::to_string(gt.region.w));
    }
    int inter = 0, uni = 0;
    for (std::size_t i = 0; i < mask.bits.size(); ++i) {
        const bool a = mask.bits[i] != 0;
        const bool b = gt.region.bits[i] != 0;
        inter += (a && b);
        uni += (a || b);
    }
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double success_rate(std::span<const double> ious, double tau) {
    if (ious.empty()) raise(ErrorKind::empty_input, "success_rate: empty input");
    int hits = 0;
    for (double v : ious) hits += (v > tau);
    return 100.0 * static_cast<double>(hits) / static_cast<double>(ious.size());
}

namespace {

// Shared 21-point trapezoid over a [0,1]-normalized threshold grid. The sum
// is clamped to [0,1]: 0.05 is inexact in binary and twenty accumulations can
// drift a hair past 1.
double trapezoid21(std::span<const double> fractions) {
    double acc = 0.0;
    for (int i = 0; i + 1 < static_cast<int>(fractions.size()); ++i) {
        acc += 0.5 * (fractions[static_cast<std::size_t>(i)] +
                      fractions[static_cast<std::size_t>(i) + 1]) *
               0.05;
    }
    return std::clamp(acc, 0.0, 1.0);
}

} // namespace

double auc(std::span<const double> ious) {
    if (ious.empty()) raise(ErrorKind::empty_input, "auc: empty input");
    std::vector<double> frac(21);
    for (int i = 0; i <= 20; ++i) {
        const double tau = 0.05 * i;
        frac[static_cast<std::size_t>(i)] = success_rate(ious, tau) / 100.0;
    }
    return 100.0 * trapezoid21(frac);
}

double pia(const BinaryMask& mask) {
    if (mask.size() <= 0) raise(ErrorKind::empty_input, "pia: empty mask grid");
    return 100.0 * static_cast<double>(mask.popcount()) / static_cast<double>(mask.size());
}

double auc_n(std::span<const double> pias) {
    if (pias.empty()) raise(ErrorKind::empty_input, "auc_n: empty input");
    std::vector<double> frac(21);
    for (int i = 0; i <= 20; ++i) {
        const double tau = 5.0 * i;
        int hits = 0;
        for (double v : pias) hits += (v <= tau);
        frac[static_cast<std::size_t>(i)] =
            static_cast<double>(hits) / static_cast<double>(pias.size());
    }
    return 100.0 * trapezoid21(frac);
}

double harmonic_mean(double a, double b) {
    const double s = a + b;
    if (s == 0.0) return 0.0;
    return 2.0 * a * b / s;
}

double f_loc(double ciou_uth, const std::array<double, 3>& pia_by_condition) {
    const double mean_pia =
        (pia_by_condition[0] + pia_by_condition[1] + pia_by_condition[2]) / 3.0;
    return harmonic_mean(ciou_uth, 100.0 - mean_pia);
}

double f_auc(double auc_uth, const std::array<double, 3>& auc_n_by_condition) {
    const double mean_auc_n =
        (auc_n_by_condition[0] + auc_n_by_condition[1] + auc_n_by_condition[2]) / 3.0;
    return harmonic_mean(auc_uth, mean_auc_n);
}

double separability(std::span<const double> pos_maxima, std::span<const double> neg_maxima) {
    if (pos_maxima.size() < 4 || neg_maxima.size() < 4) {
        raise(ErrorKind::too_few_samples, "separability: need >= 4 values per side");
    }
    return quantile(pos_maxima, 0.25) - quantile(neg_maxima, 0.75);
}

double alignment(std::span<const PooledPair> pairs) {
    if (pairs.empty()) raise(ErrorKind::empty_input, "alignment: empty input");
    double acc = 0.0;
    for (const PooledPair& p : pairs) acc += cosine(p.audio, p.visual_pooled);
    return acc / static_cast<double>(pairs.size());
}

double magnitude(std::span<const PooledPair> pairs) {
    if (pairs.empty()) raise(ErrorKind::empty_input, "magnitude: empty input");
    double acc = 0.0;
    for (const PooledPair& p : pairs) acc += l2_distance(p.audio, p.visual_pooled);
    return acc / static_cast<double>(pairs.size());
}

namespace {

struct PerRecord {
    double iou_uth = 0.0;
    double iou_adap = 0.0;
    double pos_max = 0.0;
    std::array<double, 3> pia_v{};
    std::array<double, 3> neg_max{};
};

} // namespace

MetricsReport evaluate(std::span<const EvalRecord> records, const UniversalThreshold& theta) {
    if (records.empty()) raise(ErrorKind::empty_input, "evaluate: no records");

    const auto n = static_cast<std::ptrdiff_t>(records.size());
    std::vector<PerRecord> per(records.size());
    parallel_for(n, [&](std::ptrdiff_t i) {
        const EvalRecord& r = records[static_cast<std::size_t>(i)];
        PerRecord out;
        out.iou_uth = iou(binarize_fixed(r.pos_map, theta.theta), r.gt);
        out.iou_adap = iou(binarize_adaptive(r.pos_map, r.gt.area), r.gt);
        out.pos_max = max_pool(r.pos_map);
        for (Condition c : kAllConditions) {
            const auto ci = static_cast<std::size_t>(c);
            const SimilarityMap& neg = r.neg_maps[ci];
            out.pia_v[ci] = pia(binarize_fixed(neg, theta.theta));
            out.neg_max[ci] = max_pool(neg);
        }
        per[static_cast<std::size_t>(i)] = out;
    });

    // Sequential reduction in manifest order.
    std::vector<double> ious_uth, ious_adap, pos_maxima, neg_maxima;
    std::array<std::vector<double>, 3> pias_by_cond;
    std::vector<PooledPair> pairs;
    ious_uth.reserve(records.size());
    ious_adap.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        ious_uth.push_back(per[i].iou_uth);
        ious_adap.push_back(per[i].iou_adap);
        pos_maxima.push_back(per[i].pos_max);
        for (Condition c : kAllConditions) {
            const auto ci = static_cast<std::size_t>(c);
            pias_by_cond[ci].push_back(per[i].pia_v[ci]);
            neg_maxima.push_back(per[i].neg_max[ci]);
        }
        pairs.push_back(records[i].pooled);
    }

    MetricsReport rep;
    rep.n_samples = static_cast<int>(records.size());
    rep.theta = theta.theta;
    rep.ciou_uth = success_rate(ious_uth, 0.5);
    rep.ciou_adap = success_rate(ious_adap, 0.5);
    rep.auc_uth = auc(ious_uth);
    rep.auc_adap = auc(ious_adap);
    for (Condition c : kAllConditions) {
        const auto ci = static_cast<std::size_t>(c);
        double mean_pia = 0.0;
        for (double v : pias_by_cond[ci]) mean_pia += v;
        rep.pia[ci] = mean_pia / static_cast<double>(pias_by_cond[ci].size());
        rep.auc_n[ci] = auc_n(pias_by_cond[ci]);
    }
    rep.f_loc = f_loc(rep.ciou_uth, rep.pia);
    rep.f_auc = f_auc(rep.auc_uth, rep.auc_n);
    // Same Q1-Q3 arithmetic as separability(), applied directly so reports
    // over tiny fixtures (fewer than 4 records) still carry the field.
    rep.separability = quantile(pos_maxima, 0.25) - quantile(neg_maxima, 0.75);
    rep.alignment = alignment(pairs);
    rep.magnitude = magnitude(pairs);
    return rep;
}

} // namespace avsl
