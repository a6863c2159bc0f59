#include <doctest.h>

#include "avsl/core.hpp"
#include "avsl/rng.hpp"
#include "test_util.hpp"

using namespace avsl;

namespace {

VisualFeatureMap constant_map(int c, int h, int w, const Vec& column) {
    VisualFeatureMap v(c, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < c; ++k) v.at(k, y, x) = column[static_cast<std::size_t>(k)];
        }
    }
    return v;
}

} // namespace

TEST_CASE("cosine_similarity_map on aligned, orthogonal and analytic columns") {
    const AudioEmbedding a{{1.0, 0.0}};

    const VisualFeatureMap aligned = constant_map(2, 3, 4, {1.0, 0.0});
    for (double v : cosine_similarity_map(a, aligned).values) CHECK(v == doctest::Approx(1.0));

    const VisualFeatureMap ortho = constant_map(2, 3, 4, {0.0, 1.0});
    for (double v : cosine_similarity_map(a, ortho).values) CHECK(v == doctest::Approx(0.0));

    const VisualFeatureMap single = constant_map(2, 1, 1, {3.0, 4.0});
    CHECK(cosine_similarity_map(a, single).at(0, 0) == doctest::Approx(0.6));
}

TEST_CASE("cosine_similarity_map errors") {
    const AudioEmbedding a{{1.0, 0.0}};
    const VisualFeatureMap wrong_c = constant_map(3, 2, 2, {1.0, 0.0, 0.0});
    CHECK(test::thrown_kind([&] { cosine_similarity_map(a, wrong_c); }) ==
          ErrorKind::dimension_mismatch);

    const AudioEmbedding zero{{0.0, 0.0}};
    const VisualFeatureMap ok = constant_map(2, 2, 2, {1.0, 0.0});
    CHECK(test::thrown_kind([&] { cosine_similarity_map(zero, ok); }) == ErrorKind::zero_norm);

    VisualFeatureMap with_zero_col = constant_map(2, 2, 2, {1.0, 0.0});
    with_zero_col.at(0, 1, 1) = 0.0;
    with_zero_col.at(1, 1, 1) = 0.0;
    CHECK(test::thrown_kind([&] { cosine_similarity_map(a, with_zero_col); }) ==
          ErrorKind::zero_norm);
}

TEST_CASE("cosine map range and scale invariance on random inputs") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = 2 + static_cast<int>(rng.below(6));
        const int h = 1 + static_cast<int>(rng.below(5));
        const int w = 1 + static_cast<int>(rng.below(5));
        AudioEmbedding a{test::random_vec(static_cast<std::size_t>(c), rng)};
        a.values[0] += 2.0; // keep the norm away from zero
        VisualFeatureMap v(c, h, w);
        for (double& x : v.values) x = rng.uniform(-1.0, 1.0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) v.at(0, y, x) += 2.0;
        }
        const SimilarityMap s = cosine_similarity_map(a, v);
        for (double val : s.values) {
            CHECK(val >= -1.0 - 1e-9);
            CHECK(val <= 1.0 + 1e-9);
        }
        AudioEmbedding scaled = a;
        const double k = rng.uniform(0.1, 10.0);
        for (double& x : scaled.values) x *= k;
        const SimilarityMap s2 = cosine_similarity_map(scaled, v);
        for (int i = 0; i < s.size(); ++i) {
            CHECK(s2.values[static_cast<std::size_t>(i)] ==
                  doctest::Approx(s.values[static_cast<std::size_t>(i)]).epsilon(1e-9));
        }
    }
}

TEST_CASE("max_pool basics and permutation invariance") {
    SimilarityMap s(2, 2);
    s.values = {0.1, 0.9, -0.3, 0.2};
    CHECK(max_pool(s) == doctest::Approx(0.9));

    SimilarityMap zeros(3, 3);
    CHECK(max_pool(zeros) == 0.0);

    SimilarityMap one(1, 1);
    one.values = {0.42};
    CHECK(max_pool(one) == doctest::Approx(0.42));

    Rng rng(7);
    SimilarityMap r = test::random_map(4, 5, rng);
    const double m = max_pool(r);
    for (double v : r.values) CHECK(m >= v);
    std::vector<double> shuffled = r.values;
    rng.shuffle(shuffled);
    SimilarityMap p(4, 5);
    p.values = shuffled;
    CHECK(max_pool(p) == doctest::Approx(m));

    SimilarityMap empty;
    CHECK(test::thrown_kind([&] { max_pool(empty); }) == ErrorKind::empty_map);
}

TEST_CASE("max_pool_argmax ties resolve to first row-major cell") {
    SimilarityMap s(2, 2);
    s.values = {0.5, 0.5, 0.5, 0.5};
    const MapArgmax m = max_pool_argmax(s);
    CHECK(m.y == 0);
    CHECK(m.x == 0);
}

TEST_CASE("mean_pool_visual") {
    CHECK(mean_pool_visual(constant_map(2, 1, 1, {2.0, 4.0})) == Vec{2.0, 4.0});

    VisualFeatureMap v(2, 1, 2);
    v.at(0, 0, 0) = 0.0;
    v.at(1, 0, 0) = 0.0;
    v.at(0, 0, 1) = 2.0;
    v.at(1, 0, 1) = 2.0;
    const Vec pooled = mean_pool_visual(v);
    CHECK(pooled[0] == doctest::Approx(1.0));
    CHECK(pooled[1] == doctest::Approx(1.0));

    const VisualFeatureMap c3 = constant_map(1, 3, 3, {3.0});
    CHECK(mean_pool_visual(c3)[0] == doctest::Approx(3.0));
}

TEST_CASE("norms, distances, cosine") {
    CHECK(l2_distance(Vec{0.0, 0.0}, Vec{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(cosine(Vec{1.0, 0.0}, Vec{1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(cosine(Vec{1.0, 0.0}, Vec{-1.0, 0.0}) == doctest::Approx(-1.0));
    CHECK(test::thrown_kind([&] { cosine(Vec{0.0, 0.0}, Vec{1.0, 0.0}); }) ==
          ErrorKind::zero_norm);
    CHECK(test::thrown_kind([&] { l2_distance(Vec{1.0}, Vec{1.0, 2.0}); }) ==
          ErrorKind::dimension_mismatch);
}
