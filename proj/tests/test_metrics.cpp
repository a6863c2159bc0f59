#include <doctest.h>

#include "avsl/metrics.hpp"
#include "avsl/parallel.hpp"
#include "reference/reference.hpp"
#include "test_util.hpp"

using namespace avsl;

namespace {

BinaryMask mask_from(std::initializer_list<std::initializer_list<int>> rows) {
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows.begin()->size());
    BinaryMask m(h, w);
    int y = 0;
    for (const auto& row : rows) {
        int x = 0;
        for (int bit : row) m.at(y, x++) = static_cast<std::uint8_t>(bit);
        ++y;
    }
    return m;
}

} // namespace

TEST_CASE("iou basics") {
    const BinaryMask a = mask_from({{1, 1, 0, 0}, {1, 1, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
    const GroundTruthRegion gt_a = GroundTruthRegion::from_mask(a);
    CHECK(iou(a, gt_a) == doctest::Approx(1.0));

    const BinaryMask disjoint =
        mask_from({{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 1}});
    CHECK(iou(disjoint, gt_a) == doctest::Approx(0.0));

    // Top-left 2x2 against the same box shifted right by one: 2 common cells,
    // 6 in the union.
    const GroundTruthRegion shifted = GroundTruthRegion::from_bbox(1, 0, 2, 1, 4, 4);
    CHECK(iou(a, shifted) == doctest::Approx(2.0 / 6.0));

    BinaryMask empty(4, 4);
    CHECK(iou(empty, gt_a) == doctest::Approx(0.0));

    BinaryMask wrong(3, 3);
    CHECK(test::thrown_kind([&] { iou(wrong, gt_a); }) == ErrorKind::shape_mismatch);
}

TEST_CASE("iou symmetry and range on random masks") {
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        const int h = 2 + static_cast<int>(rng.below(5));
        const int w = 2 + static_cast<int>(rng.below(5));
        BinaryMask a(h, w), b(h, w);
        for (auto& bit : a.bits) bit = rng.below(2) != 0;
        for (auto& bit : b.bits) bit = rng.below(2) != 0;
        if (b.popcount() == 0) b.bits[0] = 1;
        if (a.popcount() == 0) a.bits[1 % a.bits.size()] = 1;
        const double ab = iou(a, GroundTruthRegion::from_mask(b));
        const double ba = iou(b, GroundTruthRegion::from_mask(a));
        CHECK(ab == doctest::Approx(ba));
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(ab == doctest::Approx(ref::iou(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("gt bbox rasterization") {
    const GroundTruthRegion g = GroundTruthRegion::from_bbox(1, 1, 2, 2, 4, 4);
    CHECK(g.area == 4);
    CHECK(g.region.at(1, 1) == 1);
    CHECK(g.region.at(2, 2) == 1);
    CHECK(g.region.at(0, 0) == 0);
    CHECK(test::thrown_kind([&] { GroundTruthRegion::from_bbox(2, 0, 1, 0, 4, 4); }) ==
          ErrorKind::config_error);
    CHECK(test::thrown_kind([&] { GroundTruthRegion::from_mask(BinaryMask(3, 3)); }) ==
          ErrorKind::config_error);
}

TEST_CASE("success_rate") {
    CHECK(success_rate(Vec{0.6, 0.4, 0.7}, 0.5) == doctest::Approx(100.0 * 2 / 3));
    CHECK(success_rate(Vec{1.0, 1.0}, 0.5) == doctest::Approx(100.0));
    CHECK(success_rate(Vec{0.9, 0.99}, 1.0) == doctest::Approx(0.0)); // strict
    CHECK(test::thrown_kind([&] { success_rate(Vec{}, 0.5); }) == ErrorKind::empty_input);
}

TEST_CASE("auc derived values") {
    CHECK(auc(Vec{0.0, 0.0}) == doctest::Approx(0.0));
    // One iou of 1.0: 19 full steps plus a half step.
    CHECK(auc(Vec{1.0}) == doctest::Approx(97.5));
    // Half the samples at 1.0, half at 0: success ratio 0.5 up to the last
    // half step, by linearity of the trapezoid.
    CHECK(auc(Vec{1.0, 0.0}) == doctest::Approx(48.75));
}

TEST_CASE("auc is monotone in each iou") {
    Rng rng(22);
    for (int t = 0; t < 100; ++t) {
        Vec ious = test::random_vec(1 + rng.below(20), rng, 0.0, 1.0);
        const double before = auc(ious);
        const std::size_t i = rng.below(ious.size());
        ious[i] = std::min(1.0, ious[i] + rng.uniform(0.0, 0.5));
        CHECK(auc(ious) >= before - 1e-12);
    }
}

TEST_CASE("pia") {
    BinaryMask zeros(10, 10);
    CHECK(pia(zeros) == doctest::Approx(0.0));
    BinaryMask five(10, 10);
    for (int i = 0; i < 5; ++i) five.bits[static_cast<std::size_t>(i * 7)] = 1;
    CHECK(pia(five) == doctest::Approx(5.0));
    BinaryMask all(10, 10);
    for (auto& b : all.bits) b = 1;
    CHECK(pia(all) == doctest::Approx(100.0));
}

TEST_CASE("auc_n derived values, non-strict comparison") {
    CHECK(auc_n(Vec{0.0, 0.0}) == doctest::Approx(100.0));
    CHECK(auc_n(Vec{100.0, 100.0}) == doctest::Approx(2.5));
    CHECK(auc_n(Vec{0.0, 100.0}) == doctest::Approx(51.25));
}

TEST_CASE("auc_n is antitone in every pia") {
    Rng rng(23);
    for (int t = 0; t < 100; ++t) {
        Vec pias = test::random_vec(1 + rng.below(20), rng, 0.0, 100.0);
        const double before = auc_n(pias);
        const std::size_t i = rng.below(pias.size());
        pias[i] = std::min(100.0, pias[i] + rng.uniform(0.0, 40.0));
        CHECK(auc_n(pias) <= before + 1e-12);
    }
}

TEST_CASE("f_loc against published rows") {
    CHECK(f_loc(29.61, {0.01, 0.00, 1.72}) == doctest::Approx(45.63).epsilon(0.0003));
    CHECK(f_loc(27.78, {0.78, 0.68, 2.50}) == doctest::Approx(43.36).epsilon(0.0003));
    CHECK(f_loc(0.0, {3.0, 4.0, 5.0}) == doctest::Approx(0.0));
}

TEST_CASE("f_auc against published rows") {
    CHECK(f_auc(29.97, {99.99, 100.00, 98.17}) == doctest::Approx(46.05).epsilon(0.0003));
    CHECK(f_auc(28.23, {99.16, 99.26, 97.39}) == doctest::Approx(43.90).epsilon(0.0003));
    CHECK(f_auc(100.0, {100.0, 100.0, 100.0}) == doctest::Approx(100.0));
}

TEST_CASE("separability") {
    CHECK(separability(Vec{0.5, 0.6, 0.7, 0.8}, Vec{0.1, 0.2, 0.3, 0.4}) ==
          doctest::Approx(0.25));
    const Vec same{0.2, 0.4, 0.6, 0.8};
    CHECK(separability(same, same) <= 0.0);
    CHECK(separability(Vec{1, 1, 1, 1}, Vec{-1, -1, -1, -1}) == doctest::Approx(2.0));
    CHECK(test::thrown_kind([&] { separability(Vec{1, 2, 3}, same); }) ==
          ErrorKind::too_few_samples);
}

TEST_CASE("separability shifts with either side") {
    Rng rng(24);
    for (int t = 0; t < 50; ++t) {
        Vec pos = test::random_vec(4 + rng.below(20), rng);
        Vec neg = test::random_vec(4 + rng.below(20), rng);
        const double base = separability(pos, neg);
        const double delta = rng.uniform(0.01, 0.5);
        Vec pos_up = pos;
        for (double& v : pos_up) v += delta;
        CHECK(separability(pos_up, neg) > base);
        Vec neg_up = neg;
        for (double& v : neg_up) v += delta;
        CHECK(separability(pos, neg_up) < base);
    }
}

TEST_CASE("alignment and magnitude") {
    const PooledPair same{{1.0, 2.0}, {1.0, 2.0}};
    std::vector<PooledPair> pairs{same, same};
    CHECK(alignment(pairs) == doctest::Approx(1.0));
    CHECK(magnitude(pairs) == doctest::Approx(0.0));

    std::vector<PooledPair> ortho{{Vec{1.0, 0.0}, Vec{0.0, 1.0}}};
    CHECK(alignment(ortho) == doctest::Approx(0.0));
    CHECK(magnitude(ortho) == doctest::Approx(std::sqrt(2.0)));

    std::vector<PooledPair> mixed{{Vec{1.0, 0.0}, Vec{1.0, 0.0}},
                                  {Vec{1.0, 0.0}, Vec{0.0, 1.0}}};
    CHECK(alignment(mixed) == doctest::Approx(0.5));
    CHECK(test::thrown_kind([&] { alignment({}); }) == ErrorKind::empty_input);
}

namespace {

// Small synthetic fixture: pos map concentrated around the gt blob, negatives
// mostly flat.
std::vector<EvalRecord> fixture_records(int n, Rng& rng) {
    std::vector<EvalRecord> records;
    for (int i = 0; i < n; ++i) {
        EvalRecord r;
        r.id = "rec" + std::to_string(i);
        r.class_label = "class_" + std::to_string(i % 2);
        const int h = 4, w = 4;
        const int bx = static_cast<int>(rng.below(3));
        const int by = static_cast<int>(rng.below(3));
        BinaryMask gt(h, w);
        gt.at(by, bx) = 1;
        gt.at(by + 1, bx) = 1;
        r.gt = GroundTruthRegion::from_mask(gt);
        r.pos_map = test::random_map(h, w, rng, -0.2, 0.4);
        r.pos_map.at(by, bx) = rng.uniform(0.6, 0.95);
        r.pos_map.at(by + 1, bx) = rng.uniform(0.5, 0.9);
        for (auto c : kAllConditions) {
            r.neg_maps[static_cast<std::size_t>(c)] = test::random_map(h, w, rng, -0.3, 0.35);
        }
        r.pooled.audio = test::random_vec(6, rng);
        r.pooled.audio[0] += 1.5;
        r.pooled.visual_pooled = test::random_vec(6, rng);
        r.pooled.visual_pooled[0] += 1.5;
        records.push_back(std::move(r));
    }
    return records;
}

} // namespace

TEST_CASE("evaluate: single perfect record") {
    EvalRecord r;
    r.id = "one";
    r.class_label = "a";
    r.pos_map = SimilarityMap(2, 2);
    r.pos_map.values = {0.9, 0.1, 0.8, 0.1};
    BinaryMask gt(2, 2);
    gt.at(0, 0) = 1;
    gt.at(1, 0) = 1;
    r.gt = GroundTruthRegion::from_mask(gt);
    for (auto c : kAllConditions) {
        r.neg_maps[static_cast<std::size_t>(c)] = SimilarityMap(2, 2);
        for (double& v : r.neg_maps[static_cast<std::size_t>(c)].values) v = 0.05;
    }
    r.pooled = PooledPair{{1.0, 0.0}, {1.0, 0.0}};

    UniversalThreshold theta;
    theta.theta = 0.5;
    theta.n_calibration = 4;
    const MetricsReport rep = evaluate(std::vector<EvalRecord>{r}, theta);
    CHECK(rep.ciou_uth == doctest::Approx(100.0));
    CHECK(rep.pia[0] == doctest::Approx(0.0));
    CHECK(rep.pia[1] == doctest::Approx(0.0));
    CHECK(rep.pia[2] == doctest::Approx(0.0));
    CHECK(rep.f_loc == doctest::Approx(100.0));
    // Self-consistency: stored harmonic means re-derive from stored parts.
    CHECK(rep.f_loc == doctest::Approx(f_loc(rep.ciou_uth, rep.pia)).epsilon(1e-12));
    CHECK(rep.f_auc == doctest::Approx(f_auc(rep.auc_uth, rep.auc_n)).epsilon(1e-12));
}

TEST_CASE("evaluate matches the naive reference on an 8-record fixture") {
    Rng rng(31);
    const std::vector<EvalRecord> records = fixture_records(8, rng);
    UniversalThreshold theta;
    theta.theta = 0.42;
    theta.n_calibration = 8;
    const MetricsReport got = evaluate(records, theta);
    const MetricsReport want = ref::evaluate(records, theta.theta);
    CHECK(got.ciou_uth == doctest::Approx(want.ciou_uth).epsilon(1e-9));
    CHECK(got.ciou_adap == doctest::Approx(want.ciou_adap).epsilon(1e-9));
    CHECK(got.auc_uth == doctest::Approx(want.auc_uth).epsilon(1e-9));
    CHECK(got.auc_adap == doctest::Approx(want.auc_adap).epsilon(1e-9));
    for (int c = 0; c < 3; ++c) {
        CHECK(got.pia[static_cast<std::size_t>(c)] ==
              doctest::Approx(want.pia[static_cast<std::size_t>(c)]).epsilon(1e-9));
        CHECK(got.auc_n[static_cast<std::size_t>(c)] ==
              doctest::Approx(want.auc_n[static_cast<std::size_t>(c)]).epsilon(1e-9));
    }
    CHECK(got.f_loc == doctest::Approx(want.f_loc).epsilon(1e-9));
    CHECK(got.f_auc == doctest::Approx(want.f_auc).epsilon(1e-9));
    CHECK(got.separability == doctest::Approx(want.separability).epsilon(1e-9));
    CHECK(got.alignment == doctest::Approx(want.alignment).epsilon(1e-9));
    CHECK(got.magnitude == doctest::Approx(want.magnitude).epsilon(1e-9));
}

TEST_CASE("evaluate is identical across thread counts") {
    Rng rng(32);
    const std::vector<EvalRecord> records = fixture_records(12, rng);
    UniversalThreshold theta;
    theta.theta = 0.3;
    theta.n_calibration = 4;
    const int saved = max_threads();
    set_threads(1);
    const MetricsReport serial = evaluate(records, theta);
    set_threads(4);
    const MetricsReport parallel = evaluate(records, theta);
    set_threads(saved);
    CHECK(serial.ciou_uth == parallel.ciou_uth);
    CHECK(serial.auc_uth == parallel.auc_uth);
    CHECK(serial.separability == parallel.separability);
    CHECK(serial.alignment == parallel.alignment);
}

TEST_CASE("adaptive iou is exactly 1 when top-B cells tile the gt") {
    SimilarityMap s(3, 3);
    s.values = {0.9, 0.8, 0.1, 0.7, 0.2, 0.1, 0.1, 0.1, 0.1};
    BinaryMask gt(3, 3);
    gt.at(0, 0) = 1;
    gt.at(0, 1) = 1;
    gt.at(1, 0) = 1;
    const GroundTruthRegion g = GroundTruthRegion::from_mask(gt);
    CHECK(iou(binarize_adaptive(s, g.area), g) == doctest::Approx(1.0));
}
