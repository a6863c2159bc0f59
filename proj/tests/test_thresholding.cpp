#include <doctest.h>

#include "avsl/thresholding.hpp"
#include "reference/reference.hpp"
#include "test_util.hpp"

using namespace avsl;

TEST_CASE("quantile linear interpolation") {
    CHECK(quantile(Vec{0.1, 0.2, 0.3, 0.4}, 0.75) == doctest::Approx(0.325));
    CHECK(quantile(Vec{3.5}, 0.0) == doctest::Approx(3.5));
    CHECK(quantile(Vec{3.5}, 0.9) == doctest::Approx(3.5));
    CHECK(quantile(Vec{5, 5, 5, 5}, 0.25) == doctest::Approx(5.0));
    CHECK(test::thrown_kind([&] { quantile(Vec{}, 0.5); }) == ErrorKind::empty_input);
    CHECK(test::thrown_kind([&] {
              quantile(Vec{1.0, std::numeric_limits<double>::quiet_NaN()}, 0.5);
          }) == ErrorKind::nan_input);
}

TEST_CASE("quantile matches the brute-force reference on 1000 random lists") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng.below(40);
        const Vec xs = test::random_vec(n, rng, -10.0, 10.0);
        const double q = rng.next_unit();
        CHECK(quantile(xs, q) == doctest::Approx(ref::quantile(xs, q)).epsilon(1e-12));
    }
}

TEST_CASE("universal_threshold") {
    const UniversalThreshold t = universal_threshold(Vec{0.1, 0.2, 0.3, 0.4});
    CHECK(t.theta == doctest::Approx(0.325));
    CHECK(t.n_calibration == 4);
    CHECK(t.source_conditions.size() == 3);

    CHECK(universal_threshold(Vec{0.7, 0.7, 0.7, 0.7}).theta == doctest::Approx(0.7));
    CHECK(universal_threshold(Vec{-0.5, -0.4, -0.3, -0.2}).theta == doctest::Approx(-0.275));
    CHECK(test::thrown_kind([&] { universal_threshold(Vec{0.1, 0.2, 0.3}); }) ==
          ErrorKind::too_few_samples);
}

TEST_CASE("universal_threshold permutation invariance and monotonicity") {
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        Vec xs = test::random_vec(4 + rng.below(30), rng);
        const double theta = universal_threshold(xs).theta;
        Vec shuffled = xs;
        rng.shuffle(shuffled);
        CHECK(universal_threshold(shuffled).theta == doctest::Approx(theta).epsilon(1e-12));
        Vec extended = xs;
        extended.push_back(theta + rng.uniform(0.0, 1.0));
        CHECK(universal_threshold(extended).theta >= theta - 1e-12);
    }
}

TEST_CASE("binarize_fixed strictness and extremes") {
    SimilarityMap s(1, 2);
    s.values = {0.2, 0.8};
    const BinaryMask m = binarize_fixed(s, 0.5);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(0, 1) == 1);

    CHECK(binarize_fixed(s, 0.8).popcount() == 0); // strict at the max
    CHECK(binarize_fixed(s, -2.0).popcount() == 2);
}

TEST_CASE("binarize_fixed is antitone in theta") {
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
        const SimilarityMap s = test::random_map(4, 4, rng);
        const double t1 = rng.uniform(-1.0, 1.0);
        const double t2 = t1 + rng.uniform(0.0, 0.5);
        const BinaryMask lo = binarize_fixed(s, t1);
        const BinaryMask hi = binarize_fixed(s, t2);
        for (std::size_t i = 0; i < lo.bits.size(); ++i) {
            if (hi.bits[i]) CHECK(lo.bits[i]); // mask(t2) subset of mask(t1)
        }
    }
}

TEST_CASE("binarize_adaptive examples") {
    SimilarityMap s(2, 2);
    s.values = {0.9, 0.1, 0.5, 0.3};
    const BinaryMask m = binarize_adaptive(s, 2);
    CHECK(m.at(0, 0) == 1);
    CHECK(m.at(1, 0) == 1);
    CHECK(m.popcount() == 2);

    CHECK(binarize_adaptive(s, 4).popcount() == 4);

    SimilarityMap flat(2, 3);
    for (double& v : flat.values) v = 0.7;
    const BinaryMask first3 = binarize_adaptive(flat, 3);
    CHECK(first3.at(0, 0) == 1);
    CHECK(first3.at(0, 1) == 1);
    CHECK(first3.at(0, 2) == 1);
    CHECK(first3.popcount() == 3);

    CHECK(test::thrown_kind([&] { binarize_adaptive(s, 0); }) == ErrorKind::bad_area);
    CHECK(test::thrown_kind([&] { binarize_adaptive(s, 5); }) == ErrorKind::bad_area);
}

TEST_CASE("binarize_adaptive matches the enumerator and keeps popcount == B") {
    Rng rng(14);
    for (int t = 0; t < 500; ++t) {
        const int h = 1 + static_cast<int>(rng.below(6));
        const int w = 1 + static_cast<int>(rng.below(6));
        SimilarityMap s = test::random_map(h, w, rng);
        if (t % 3 == 0) {
            // Force ties so the row-major rule is actually exercised.
            for (double& v : s.values) v = std::round(v * 4.0) / 4.0;
        }
        const int b = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(h * w)));
        const BinaryMask got = binarize_adaptive(s, b);
        const BinaryMask want = ref::binarize_adaptive(s, b);
        CHECK(got.popcount() == b);
        CHECK(got.bits == want.bits);
    }
}
