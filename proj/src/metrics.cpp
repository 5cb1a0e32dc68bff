#include "probe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace probe {

MetricValue unfaithfulness(const GnnModel& model, const Explanation& e,
                           const PerturbationSet& set) {
    if (e.node != set.original.target)
        throw MetricError("unfaithfulness: explanation belongs to a different node");
    double total = 0.0;
    auto member_gap = [&](const ComputationSubgraph& sg) {
        const Vec orig = forward(model, sg).probabilities;
        const Vec masked = forward(model, apply_mask(e, sg)).probabilities;
        return norm2(sub(orig, masked));
    };
    total += member_gap(set.original);
    for (const auto& sg : set.perturbed) total += member_gap(sg);
    MetricValue mv;
    mv.name = "unfaithfulness";
    mv.node = set.original.target;
    mv.method_tag = e.method_tag;
    mv.k_size = set.k_size();
    mv.value = total / set.k_size();
    return mv;
}

namespace {

double node_mask_distance(const Explanation& a, const Explanation& b) {
    const std::size_t len = a.node_mask.size();
    if (len != b.node_mask.size()) throw MetricError("node mask length mismatch");
    if (len == 0) return 0.0;
    double diff = 0.0;
    for (std::size_t i = 0; i < len; ++i) diff += std::abs(int(a.node_mask[i]) - int(b.node_mask[i]));
    return diff / static_cast<double>(len);
}

double edge_mask_distance(const Explanation& a, const Explanation& b) {
    // union of the incident-edge sets; absent entries count as 0
    std::vector<int> union_nbrs = a.edge_neighbors;
    union_nbrs.insert(union_nbrs.end(), b.edge_neighbors.begin(), b.edge_neighbors.end());
    std::sort(union_nbrs.begin(), union_nbrs.end());
    union_nbrs.erase(std::unique(union_nbrs.begin(), union_nbrs.end()), union_nbrs.end());
    if (union_nbrs.empty()) return 0.0;
    auto mask_at = [](const Explanation& e, int v) -> int {
        const auto it = std::lower_bound(e.edge_neighbors.begin(), e.edge_neighbors.end(), v);
        if (it == e.edge_neighbors.end() || *it != v) return 0;
        return e.edge_mask[static_cast<std::size_t>(it - e.edge_neighbors.begin())];
    };
    double diff = 0.0;
    for (int v : union_nbrs) diff += std::abs(mask_at(a, v) - mask_at(b, v));
    return diff / static_cast<double>(union_nbrs.size());
}

}  // namespace

double mask_distance(const Explanation& a, const Explanation& b) {
    if (a.kind != b.kind) throw MetricError("mask_distance: explanation kinds differ");
    switch (a.kind) {
        case ExplanationKind::NodeFeature:
            return node_mask_distance(a, b);
        case ExplanationKind::Edge:
            return edge_mask_distance(a, b);
        case ExplanationKind::Both:
            return 0.5 * (node_mask_distance(a, b) + edge_mask_distance(a, b));
    }
    return 0.0;
}

MetricValue instability(const Explanation& original, const Explanation& perturbed) {
    if (original.method_tag != perturbed.method_tag)
        throw MetricError("instability: explanations from different methods");
    MetricValue mv;
    mv.name = "instability";
    mv.node = original.node;
    mv.method_tag = original.method_tag;
    mv.value = mask_distance(original, perturbed);
    return mv;
}

MetricValue counterfactual_fairness_mismatch(const Explanation& original,
                                             const Explanation& counterfactual) {
    if (original.method_tag != counterfactual.method_tag)
        throw MetricError("cf_mismatch: explanations from different methods");
    MetricValue mv;
    mv.name = "cf_mismatch";
    mv.node = original.node;
    mv.method_tag = original.method_tag;
    mv.value = mask_distance(original, counterfactual);
    return mv;
}

double statistical_parity(const std::vector<int>& predicted_labels,
                          const std::vector<double>& sensitive_values) {
    if (predicted_labels.size() != sensitive_values.size())
        throw MetricError("statistical_parity: length mismatch");
    double pos0 = 0.0, pos1 = 0.0;
    int n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < predicted_labels.size(); ++i) {
        const int y = predicted_labels[i];
        if (y != 0 && y != 1) throw MetricError("statistical_parity: labels must be binary");
        if (sensitive_values[i] == 0.0) {
            ++n0;
            pos0 += y;
        } else if (sensitive_values[i] == 1.0) {
            ++n1;
            pos1 += y;
        } else {
            throw MetricError("statistical_parity: sensitive values must be binary");
        }
    }
    if (n0 == 0 || n1 == 0) throw EmptyGroupError("statistical_parity: a sensitive group is empty");
    return std::abs(pos0 / n0 - pos1 / n1);
}

MetricValue group_fairness_mismatch(const GnnModel& model, const Explanation& e,
                                    const GroupFairnessInputs& pool) {
    if (pool.members.empty()) throw MetricError("group_fairness_mismatch: empty pool");
    std::vector<int> pred, pred_masked;
    pred.reserve(pool.members.size());
    pred_masked.reserve(pool.members.size());
    for (const auto& sg : pool.members) {
        pred.push_back(forward(model, sg).predicted_class());
        pred_masked.push_back(forward(model, apply_mask(e, sg)).predicted_class());
    }
    const double sp = statistical_parity(pred, pool.sensitive_values);
    const double sp_masked = statistical_parity(pred_masked, pool.sensitive_values);
    MetricValue mv;
    mv.name = "group_fairness_mismatch";
    mv.node = e.node;
    mv.method_tag = e.method_tag;
    mv.k_size = static_cast<int>(pool.members.size());
    mv.value = std::abs(sp - sp_masked);
    return mv;
}

double pearson(const Vec& xs, const Vec& ys) {
    if (xs.size() != ys.size()) throw MetricError("pearson: length mismatch");
    const int n = static_cast<int>(xs.size());
    if (n < 3) throw MetricError("pearson: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) throw MetricError("pearson: degenerate variance");
    return sxy / std::sqrt(sxx * syy);
}

namespace {

Vec average_ranks(const Vec& xs) {
    const int n = static_cast<int>(xs.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return xs[a] < xs[b]; });
    Vec ranks(n, 0.0);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (i + j) / 2.0 + 1.0;  // ranks are 1-based
        for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const Vec& xs, const Vec& ys) {
    return pearson(average_ranks(xs), average_ranks(ys));
}

Aggregate aggregate(const Vec& values) {
    Aggregate a;
    a.count = static_cast<int>(values.size());
    if (a.count == 0) return a;
    for (double v : values) a.mean += v;
    a.mean /= a.count;
    if (a.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.standard_error = std::sqrt(ss / (a.count - 1)) / std::sqrt(static_cast<double>(a.count));
    }
    return a;
}

}  // namespace probe
