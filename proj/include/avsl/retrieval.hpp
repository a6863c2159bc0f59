#pragma once

#include <span>
#include <string>
#include <vector>

#include "avsl/core.hpp"

namespace avsl {

enum class Modality { audio = 0, image = 1 };

inline std::string_view modality_name(Modality m) {
    return m == Modality::audio ? "audio" : "image";
}

struct EmbeddingItem {
    std::string id;
    std::string class_label;
    Vec embedding;
    Modality modality = Modality::audio;
};

struct EmbeddingSet {
    std::vector<EmbeddingItem> items;
};

// Ids of the k gallery items most cosine-similar to the query, descending;
// ties break by ascending id. An item sharing the query's id is skipped.
std::vector<std::string> rank(const EmbeddingItem& query, const EmbeddingSet& gallery, int k);

// Mean over queries of (same-class hits in top-k)/k, as a percent. Queries
// run in parallel; the mean reduces in query order.
double precision_at_k(std::span<const EmbeddingItem> queries, const EmbeddingSet& gallery, int k);

// Mean over queries of the at-least-one-match indicator, as a percent.
double accuracy_at_k(std::span<const EmbeddingItem> queries, const EmbeddingSet& gallery, int k);

} // namespace avsl
