#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace avsl::ref {

double quantile(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(pos));
    const auto upper = static_cast<std::size_t>(std::ceil(pos));
    if (lower == upper) return xs[lower];
    const double w = pos - std::floor(pos);
    return (1.0 - w) * xs[lower] + w * xs[upper];
}

double iou(const BinaryMask& mask, const BinaryMask& gt) {
    std::set<int> a, b;
    for (int i = 0; i < mask.size(); ++i) {
        if (mask.bits[static_cast<std::size_t>(i)]) a.insert(i);
    }
    for (int i = 0; i < gt.size(); ++i) {
        if (gt.bits[static_cast<std::size_t>(i)]) b.insert(i);
    }
    std::vector<int> inter, uni;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
    if (uni.empty()) return 0.0;
    return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

double success_rate(const std::vector<double>& ious, double tau) {
    int count = 0;
    for (double v : ious) {
        if (v > tau) ++count;
    }
    return 100.0 * count / static_cast<double>(ious.size());
}

double auc(const std::vector<double>& ious) {
    double integral = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double f0 = success_rate(ious, 0.05 * i) / 100.0;
        const double f1 = success_rate(ious, 0.05 * (i + 1)) / 100.0;
        integral += (f0 + f1) / 2.0 * 0.05;
    }
    if (integral > 1.0) integral = 1.0;
    return 100.0 * integral;
}

double pia(const BinaryMask& mask) {
    int on = 0;
    for (auto b : mask.bits) on += b ? 1 : 0;
    return 100.0 * on / static_cast<double>(mask.size());
}

double auc_n(const std::vector<double>& pias) {
    auto frac_below = [&](double tau) {
        int count = 0;
        for (double v : pias) {
            if (v <= tau) ++count;
        }
        return static_cast<double>(count) / static_cast<double>(pias.size());
    };
    double integral = 0.0;
    for (int i = 0; i < 20; ++i) {
        integral += (frac_below(5.0 * i) + frac_below(5.0 * (i + 1))) / 2.0 * 0.05;
    }
    if (integral > 1.0) integral = 1.0;
    return 100.0 * integral;
}

double separability(const std::vector<double>& pos, const std::vector<double>& neg) {
    return quantile(pos, 0.25) - quantile(neg, 0.75);
}

BinaryMask binarize_adaptive(const SimilarityMap& s, int area) {
    std::vector<std::pair<double, int>> cells;
    for (int i = 0; i < s.size(); ++i) {
        cells.emplace_back(s.values[static_cast<std::size_t>(i)], i);
    }
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    BinaryMask m(s.h, s.w);
    for (int i = 0; i < area; ++i) {
        m.bits[static_cast<std::size_t>(cells[static_cast<std::size_t>(i)].second)] = 1;
    }
    return m;
}

MetricsReport evaluate(const std::vector<EvalRecord>& records, double theta) {
    std::vector<double> ious_uth, ious_adap, pos_max, neg_max;
    std::vector<std::vector<double>> pias(3);
    double align = 0.0, mag = 0.0;
    for (const EvalRecord& r : records) {
        BinaryMask uth(r.pos_map.h, r.pos_map.w);
        for (int i = 0; i < r.pos_map.size(); ++i) {
            uth.bits[static_cast<std::size_t>(i)] =
                r.pos_map.values[static_cast<std::size_t>(i)] > theta;
        }
        ious_uth.push_back(iou(uth, r.gt.region));
        ious_adap.push_back(ref::iou(ref::binarize_adaptive(r.pos_map, r.gt.area), r.gt.region));
        pos_max.push_back(*std::max_element(r.pos_map.values.begin(), r.pos_map.values.end()));
        for (int c = 0; c < 3; ++c) {
            const SimilarityMap& neg = r.neg_maps[static_cast<std::size_t>(c)];
            BinaryMask nm(neg.h, neg.w);
            for (int i = 0; i < neg.size(); ++i) {
                nm.bits[static_cast<std::size_t>(i)] =
                    neg.values[static_cast<std::size_t>(i)] > theta;
            }
            pias[static_cast<std::size_t>(c)].push_back(ref::pia(nm));
            neg_max.push_back(*std::max_element(neg.values.begin(), neg.values.end()));
        }
        double dot = 0.0, na = 0.0, nv = 0.0, dist = 0.0;
        for (std::size_t k = 0; k < r.pooled.audio.size(); ++k) {
            dot += r.pooled.audio[k] * r.pooled.visual_pooled[k];
            na += r.pooled.audio[k] * r.pooled.audio[k];
            nv += r.pooled.visual_pooled[k] * r.pooled.visual_pooled[k];
            const double d = r.pooled.audio[k] - r.pooled.visual_pooled[k];
            dist += d * d;
        }
        align += dot / (std::sqrt(na) * std::sqrt(nv));
        mag += std::sqrt(dist);
    }
    const auto n = static_cast<double>(records.size());
    MetricsReport rep;
    rep.n_samples = static_cast<int>(records.size());
    rep.theta = theta;
    rep.ciou_uth = success_rate(ious_uth, 0.5);
    rep.ciou_adap = success_rate(ious_adap, 0.5);
    rep.auc_uth = auc(ious_uth);
    rep.auc_adap = auc(ious_adap);
    for (int c = 0; c < 3; ++c) {
        const auto& xs = pias[static_cast<std::size_t>(c)];
        rep.pia[static_cast<std::size_t>(c)] = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        rep.auc_n[static_cast<std::size_t>(c)] = auc_n(xs);
    }
    const double mean_pia = (rep.pia[0] + rep.pia[1] + rep.pia[2]) / 3.0;
    const double pos_side = rep.ciou_uth;
    const double neg_side = 100.0 - mean_pia;
    rep.f_loc = (pos_side + neg_side) == 0.0 ? 0.0
                                             : 2.0 * pos_side * neg_side / (pos_side + neg_side);
    const double mean_aucn = (rep.auc_n[0] + rep.auc_n[1] + rep.auc_n[2]) / 3.0;
    rep.f_auc = (rep.auc_uth + mean_aucn) == 0.0
                    ? 0.0
                    : 2.0 * rep.auc_uth * mean_aucn / (rep.auc_uth + mean_aucn);
    rep.separability = quantile(pos_max, 0.25) - quantile(neg_max, 0.75);
    rep.alignment = align / n;
    rep.magnitude = mag / n;
    return rep;
}

namespace {

double cosine_sim(const Vec& a, const Vec& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

} // namespace

std::vector<std::string> rank(const EmbeddingItem& query,
                              const std::vector<EmbeddingItem>& gallery, int k) {
    std::vector<std::pair<double, std::string>> scored;
    for (const EmbeddingItem& item : gallery) {
        if (item.id == query.id) continue;
        scored.emplace_back(cosine_sim(query.embedding, item.embedding), item.id);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (int i = 0; i < k; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

double precision_at_k(const std::vector<EmbeddingItem>& queries,
                      const std::vector<EmbeddingItem>& gallery, int k) {
    double acc = 0.0;
    for (const EmbeddingItem& q : queries) {
        int hits = 0;
        for (const std::string& id : rank(q, gallery, k)) {
            for (const EmbeddingItem& item : gallery) {
                if (item.id == id && item.class_label == q.class_label) ++hits;
            }
        }
        acc += static_cast<double>(hits) / k;
    }
    return 100.0 * acc / static_cast<double>(queries.size());
}

double accuracy_at_k(const std::vector<EmbeddingItem>& queries,
                     const std::vector<EmbeddingItem>& gallery, int k) {
    double acc = 0.0;
    for (const EmbeddingItem& q : queries) {
        bool hit = false;
        for (const std::string& id : rank(q, gallery, k)) {
            for (const EmbeddingItem& item : gallery) {
                if (item.id == id && item.class_label == q.class_label) hit = true;
            }
        }
        acc += hit ? 1.0 : 0.0;
    }
    return 100.0 * acc / static_cast<double>(queries.size());
}

double contrastive_from_logits(const std::vector<std::vector<double>>& logits) {
    const auto n = logits.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = logits[i][0];
        for (double v : logits[i]) m = std::max(m, v);
        double z = 0.0;
        for (double v : logits[i]) z += std::exp(v - m);
        loss += 0.5 * (m + std::log(z) - logits[i][i]) / static_cast<double>(n);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double m = logits[0][j];
        for (std::size_t i = 0; i < n; ++i) m = std::max(m, logits[i][j]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) z += std::exp(logits[i][j] - m);
        loss += 0.5 * (m + std::log(z) - logits[j][j]) / static_cast<double>(n);
    }
    return loss;
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& params,
                         double step) {
    Vec grad(params.size(), 0.0);
    Vec work = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = work[i];
        work[i] = saved + step;
        const double up = f(work);
        work[i] = saved - step;
        const double down = f(work);
        work[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

double max_rel_error(const Vec& a, const Vec& b, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

} // namespace avsl::ref
