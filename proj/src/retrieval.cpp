#include "avsl/retrieval.hpp"

#include <algorithm>
#include <string>

#include "avsl/parallel.hpp"

namespace avsl {

namespace {

std::vector<const EmbeddingItem*> eligible_gallery(const EmbeddingItem& query,
                                                   const EmbeddingSet& gallery) {
    std::vector<const EmbeddingItem*> out;
    out.reserve(gallery.items.size());
    for (const EmbeddingItem& item : gallery.items) {
        if (item.id == query.id) continue;
        if (item.modality == query.modality) {
            raise(ErrorKind::config_error,
                  "rank: gallery item " + item.id + " has the query's modality");
        }
        out.push_back(&item);
    }
    return out;
}

std::vector<const EmbeddingItem*> ranked(const EmbeddingItem& query, const EmbeddingSet& gallery,
                                         int k) {
    if (gallery.items.empty()) raise(ErrorKind::empty_gallery, "rank: empty gallery");
    auto pool = eligible_gallery(query, gallery);
    if (pool.empty()) raise(ErrorKind::empty_gallery, "rank: gallery holds only the query");
    if (k < 1 || static_cast<std::size_t>(k) > pool.size()) {
        raise(ErrorKind::bad_k,
              "rank: k=" + std::to_string(k) + " outside [1," + std::to_string(pool.size()) + "]");
    }
    std::vector<std::pair<double, const EmbeddingItem*>> scored;
    scored.reserve(pool.size());
    for (const EmbeddingItem* item : pool) {
        scored.emplace_back(cosine(query.embedding, item->embedding), item);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->id < b.second->id;
    });
    std::vector<const EmbeddingItem*> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

} // namespace

std::vector<std::string> rank(const EmbeddingItem& query, const EmbeddingSet& gallery, int k) {
    std::vector<std::string> ids;
    for (const EmbeddingItem* item : ranked(query, gallery, k)) ids.push_back(item->id);
    return ids;
}

double precision_at_k(std::span<const EmbeddingItem> queries, const EmbeddingSet& gallery, int k) {
    if (queries.empty()) raise(ErrorKind::empty_input, "precision_at_k: no queries");
    std::vector<double> per(queries.size(), 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(queries.size()), [&](std::ptrdiff_t i) {
        const EmbeddingItem& q = queries[static_cast<std::size_t>(i)];
        int hits = 0;
        for (const EmbeddingItem* item : ranked(q, gallery, k)) {
            hits += (item->class_label == q.class_label);
        }
        per[static_cast<std::size_t>(i)] = static_cast<double>(hits) / static_cast<double>(k);
    });
    double acc = 0.0;
    for (double v : per) acc += v;
    return 100.0 * acc / static_cast<double>(queries.size());
}

double accuracy_at_k(std::span<const EmbeddingItem> queries, const EmbeddingSet& gallery, int k) {
    if (queries.empty()) raise(ErrorKind::empty_input, "accuracy_at_k: no queries");
    std::vector<double> per(queries.size(), 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(queries.size()), [&](std::ptrdiff_t i) {
        const EmbeddingItem& q = queries[static_cast<std::size_t>(i)];
        bool hit = false;
        for (const EmbeddingItem* item : ranked(q, gallery, k)) {
            hit = hit || (item->class_label == q.class_label);
        }
        per[static_cast<std::size_t>(i)] = hit ? 1.0 : 0.0;
    });
    double acc = 0.0;
    for (double v : per) acc += v;
    return 100.0 * acc / static_cast<double>(queries.size());
}

} // namespace avsl
