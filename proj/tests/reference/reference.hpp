#pragma once

// Serial reference implementations, written independently of the library
// kernels they check. Tests and the benchmark target compare the OpenMP
// paths against these; nothing in libavsl may call into this code.

#include <functional>
#include <string>
#include <vector>

#include "avsl/core.hpp"
#include "avsl/metrics.hpp"
#include "avsl/retrieval.hpp"
#include "avsl/thresholding.hpp"

namespace avsl::ref {

double quantile(std::vector<double> xs, double q);

// Set-based IoU over explicit cell index sets.
double iou(const BinaryMask& mask, const BinaryMask& gt);

double success_rate(const std::vector<double>& ious, double tau);
double auc(const std::vector<double>& ious);
double pia(const BinaryMask& mask);
double auc_n(const std::vector<double>& pias);
double separability(const std::vector<double>& pos, const std::vector<double>& neg);

// Enumerator: sort every cell by (value desc, index asc), mark the first B.
BinaryMask binarize_adaptive(const SimilarityMap& s, int area);

// Naive sequential evaluator over EvalRecords; its own binarization, IoU and
// aggregation loops.
MetricsReport evaluate(const std::vector<EvalRecord>& records, double theta);

// Full-sort retrieval.
std::vector<std::string> rank(const EmbeddingItem& query,
                              const std::vector<EmbeddingItem>& gallery, int k);
double precision_at_k(const std::vector<EmbeddingItem>& queries,
                      const std::vector<EmbeddingItem>& gallery, int k);
double accuracy_at_k(const std::vector<EmbeddingItem>& queries,
                     const std::vector<EmbeddingItem>& gallery, int k);

// Scalar log-sum-exp InfoNCE over a precomputed logit matrix.
double contrastive_from_logits(const std::vector<std::vector<double>>& logits);

// Central finite differences, step h, over a flat parameter vector.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& params,
                         double step);

// Largest elementwise mismatch between two gradients, relative to
// max(|a|, |b|, floor).
double max_rel_error(const Vec& a, const Vec& b, double floor = 1e-2);

} // namespace avsl::ref
