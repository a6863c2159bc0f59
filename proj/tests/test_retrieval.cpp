#include <doctest.h>

#include <cmath>
#include <numbers>

#include "avsl/retrieval.hpp"
#include "reference/reference.hpp"
#include "test_util.hpp"

using namespace avsl;

namespace {

EmbeddingItem item(std::string id, std::string cls, Vec emb, Modality m) {
    return EmbeddingItem{std::move(id), std::move(cls), std::move(emb), m};
}

} // namespace

TEST_CASE("rank basics") {
    EmbeddingSet gallery;
    gallery.items.push_back(item("a0", "cat", {1.0, 0.0}, Modality::audio));
    const EmbeddingItem q = item("q", "cat", {0.5, 0.5}, Modality::image);
    CHECK(rank(q, gallery, 1) == std::vector<std::string>{"a0"});

    gallery.items.push_back(item("a1", "dog", {0.0, 1.0}, Modality::audio));
    gallery.items.push_back(item("a2", "owl", {-1.0, 0.0}, Modality::audio));
    const EmbeddingItem q2 = item("q2", "cat", {1.0, 0.0}, Modality::image);
    CHECK(rank(q2, gallery, 1) == std::vector<std::string>{"a0"});

    CHECK(test::thrown_kind([&] { rank(q2, EmbeddingSet{}, 1); }) == ErrorKind::empty_gallery);
    CHECK(test::thrown_kind([&] { rank(q2, gallery, 9); }) == ErrorKind::bad_k);
}

TEST_CASE("rank excludes the query id and breaks ties by id") {
    EmbeddingSet gallery;
    gallery.items.push_back(item("dup_b", "x", {1.0, 0.0}, Modality::audio));
    gallery.items.push_back(item("dup_a", "x", {1.0, 0.0}, Modality::audio));
    gallery.items.push_back(item("self", "x", {1.0, 0.0}, Modality::audio));
    EmbeddingItem q = item("self", "x", {1.0, 0.0}, Modality::image);
    const auto ids = rank(q, gallery, 2);
    CHECK(ids == std::vector<std::string>{"dup_a", "dup_b"});
}

TEST_CASE("rank matches the full-sort reference on random galleries") {
    Rng rng(41);
    for (int t = 0; t < 200; ++t) {
        EmbeddingSet gallery;
        const int n = 5 + static_cast<int>(rng.below(8));
        for (int i = 0; i < n; ++i) {
            Vec e = test::random_vec(4, rng);
            e[0] += 2.0;
            gallery.items.push_back(item("g" + std::to_string(i),
                                         "c" + std::to_string(i % 3), std::move(e),
                                         Modality::audio));
        }
        Vec qe = test::random_vec(4, rng);
        qe[0] += 2.0;
        const EmbeddingItem q = item("q", "c0", std::move(qe), Modality::image);
        const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        CHECK(rank(q, gallery, k) == ref::rank(q, gallery.items, k));
    }
}

TEST_CASE("precision and accuracy on a hand-built gallery") {
    // Six audio items, classes: cat cat dog dog owl owl, on the unit circle.
    auto at_angle = [](double deg) {
        const double r = deg * std::numbers::pi / 180.0;
        return Vec{std::cos(r), std::sin(r)};
    };
    EmbeddingSet gallery;
    gallery.items.push_back(item("g0", "cat", at_angle(0), Modality::audio));
    gallery.items.push_back(item("g1", "cat", at_angle(20), Modality::audio));
    gallery.items.push_back(item("g2", "dog", at_angle(90), Modality::audio));
    gallery.items.push_back(item("g3", "dog", at_angle(110), Modality::audio));
    gallery.items.push_back(item("g4", "owl", at_angle(200), Modality::audio));
    gallery.items.push_back(item("g5", "owl", at_angle(220), Modality::audio));

    std::vector<EmbeddingItem> queries{
        item("q0", "cat", at_angle(5), Modality::image),   // top-2: g0,g1 -> 2 hits
        item("q1", "dog", at_angle(95), Modality::image),  // top-2: g2,g3 -> 2 hits
        item("q2", "owl", at_angle(205), Modality::image), // top-2: g4,g5 -> 2 hits
        item("q3", "cat", at_angle(50), Modality::image),  // top-2: g1,g2 -> 1 hit
    };
    // Hand count: (2+2+2+1)/8 = 87.5% precision; all four have >= 1 hit.
    CHECK(precision_at_k(queries, gallery, 2) == doctest::Approx(87.5));
    CHECK(accuracy_at_k(queries, gallery, 2) == doctest::Approx(100.0));
    CHECK(precision_at_k(queries, gallery, 2) ==
          doctest::Approx(ref::precision_at_k(queries, gallery.items, 2)).epsilon(1e-12));
    CHECK(accuracy_at_k(queries, gallery, 2) ==
          doctest::Approx(ref::accuracy_at_k(queries, gallery.items, 2)).epsilon(1e-12));

    // Every / no gallery item sharing the class.
    std::vector<EmbeddingItem> cat_only{item("qa", "cat", at_angle(33), Modality::image)};
    EmbeddingSet cats;
    for (int i = 0; i < 4; ++i) {
        cats.items.push_back(item("c" + std::to_string(i), "cat", at_angle(i * 50.0), Modality::audio));
    }
    CHECK(precision_at_k(cat_only, cats, 4) == doctest::Approx(100.0));
    CHECK(accuracy_at_k(cat_only, cats, 4) == doctest::Approx(100.0));
    std::vector<EmbeddingItem> stranger{item("qs", "fox", at_angle(33), Modality::image)};
    CHECK(precision_at_k(stranger, cats, 4) == doctest::Approx(0.0));
    CHECK(accuracy_at_k(stranger, cats, 4) == doctest::Approx(0.0));
}

TEST_CASE("P@1 equals A@1 and A@K is monotone in K") {
    Rng rng(42);
    for (int t = 0; t < 50; ++t) {
        EmbeddingSet gallery;
        const int n = 6 + static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i) {
            Vec e = test::random_vec(5, rng);
            e[static_cast<std::size_t>(i % 5)] += 1.5;
            gallery.items.push_back(item("g" + std::to_string(i),
                                         "c" + std::to_string(i % 3), std::move(e),
                                         Modality::audio));
        }
        std::vector<EmbeddingItem> queries;
        for (int i = 0; i < 4; ++i) {
            Vec e = test::random_vec(5, rng);
            e[0] += 1.0;
            queries.push_back(
                item("q" + std::to_string(i), "c" + std::to_string(i % 3), std::move(e),
                     Modality::image));
        }
        CHECK(precision_at_k(queries, gallery, 1) == accuracy_at_k(queries, gallery, 1));
        double prev = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double acc = accuracy_at_k(queries, gallery, k);
            CHECK(acc >= prev - 1e-12);
            prev = acc;
        }
    }
}

TEST_CASE("precision is invariant under a rigid rotation of all embeddings") {
    Rng rng(43);
    EmbeddingSet gallery;
    for (int i = 0; i < 8; ++i) {
        gallery.items.push_back(item("g" + std::to_string(i), "c" + std::to_string(i % 2),
                                     test::random_vec(2, rng), Modality::audio));
    }
    std::vector<EmbeddingItem> queries;
    for (int i = 0; i < 3; ++i) {
        queries.push_back(item("q" + std::to_string(i), "c0", test::random_vec(2, rng),
                               Modality::image));
    }
    const double before = precision_at_k(queries, gallery, 3);
    const double angle = 1.1;
    auto rotate = [&](Vec& v) {
        const double x = v[0] * std::cos(angle) - v[1] * std::sin(angle);
        const double y = v[0] * std::sin(angle) + v[1] * std::cos(angle);
        v = {x, y};
    };
    for (auto& g : gallery.items) rotate(g.embedding);
    for (auto& q : queries) rotate(q.embedding);
    CHECK(precision_at_k(queries, gallery, 3) == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("modality mixing is rejected") {
    EmbeddingSet gallery;
    gallery.items.push_back(item("g0", "cat", {1.0, 0.0}, Modality::image));
    const EmbeddingItem q = item("q", "cat", {1.0, 0.0}, Modality::image);
    CHECK(test::thrown_kind([&] { rank(q, gallery, 1); }) == ErrorKind::config_error);
}
