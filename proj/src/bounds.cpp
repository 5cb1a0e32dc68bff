#include "probe/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace probe {

std::string to_string(Theorem t) {
    switch (t) {
        case Theorem::T1_node: return "T1_node";
        case Theorem::T1_edge: return "T1_edge";
        case Theorem::T2: return "T2";
        case Theorem::T3: return "T3";
        case Theorem::T4: return "T4";
        case Theorem::T5: return "T5";
        case Theorem::T6: return "T6";
        case Theorem::T7: return "T7";
        case Theorem::T8: return "T8";
    }
    return "?";
}

namespace {

std::string digest(std::initializer_list<double> vals) {
    // cheap stable fingerprint of the inputs actually used
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double v : vals) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h ^= bits;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace

BoundValue faithfulness_bound(const LipschitzProfile& profile, const Explanation& e,
                              const ComputationSubgraph& sg, int k_size) {
    if (k_size < 1) throw BoundError("faithfulness_bound: |K| must be >= 1");
    const double k_factor = (1.0 + k_size) / static_cast<double>(k_size);
    const Vec x = sg.target_features();

    double node_branch = 0.0;
    double edge_branch = 0.0;
    const bool want_node =
        e.kind == ExplanationKind::NodeFeature || e.kind == ExplanationKind::Both;
    const bool want_edge = e.kind == ExplanationKind::Edge || e.kind == ExplanationKind::Both;
    if (want_node) {
        if (!e.has_node_mask()) throw BoundError("faithfulness_bound: node mask missing");
        Vec residual(x.size(), 0.0);
        for (std::size_t j = 0; j < x.size(); ++j)
            residual[j] = e.node_mask[j] ? 0.0 : x[j];
        node_branch = profile.gamma11 * k_factor * norm2(residual);
    }
    if (want_edge) {
        if (!e.has_edge_mask()) throw BoundError("faithfulness_bound: edge mask missing");
        // raw-feature aggregation difference: sum of dropped neighbors' rows
        Vec delta(sg.features.cols, 0.0);
        for (std::size_t i = 0; i < e.edge_neighbors.size(); ++i) {
            if (e.edge_mask[i]) continue;
            const int lv = sg.local_index(e.edge_neighbors[i]);
            if (lv < 0) continue;
            for (int c = 0; c < sg.features.cols; ++c) delta[c] += sg.features(lv, c);
        }
        edge_branch = profile.gamma12 * k_factor * norm2(delta);
    }
    BoundValue b;
    b.theorem = e.kind == ExplanationKind::Edge
                    ? Theorem::T1_edge
                    : Theorem::T1_node;
    b.value = node_branch + edge_branch;
    b.inputs_digest = digest({profile.gamma11, profile.gamma12, double(k_size), b.value});
    return b;
}

BoundValue grad_stability_bound(const LipschitzProfile& profile, const Vec& prediction_error,
                                const Vec& x, const Vec& x_perturbed) {
    const double gamma3 = norm_p(prediction_error, profile.p) * profile.gamma3_weights;
    BoundValue b;
    b.theorem = Theorem::T2;
    b.value = gamma3 * norm_p(sub(x_perturbed, x), profile.p);
    b.inputs_digest = digest({gamma3, b.value});
    return b;
}

BoundValue grad_cf_bound(const LipschitzProfile& profile, const Vec& prediction_error) {
    BoundValue b;
    b.theorem = Theorem::T5;
    b.value = norm_p(prediction_error, profile.p) * profile.gamma3_weights;
    b.inputs_digest = digest({b.value});
    return b;
}

double erasure_layer_gamma(const ErasureFunction& erasure, int layer) {
    const ErasureLayer& el = erasure.layers.at(layer);
    Vec inv_std(el.ln_std.size());
    for (std::size_t i = 0; i < el.ln_std.size(); ++i) {
        if (el.ln_std[i] <= 0.0) throw BoundError("erasure layer-norm std must be positive");
        inv_std[i] = 1.0 / el.ln_std[i];
    }
    const double c_ln = norm2(inv_std);
    const double c_sp = 1.0;
    return c_sp * c_ln * spectral_norm(el.w2).value * spectral_norm(el.w1).value;
}

BoundValue graphmask_bound(const ErasureFunction& erasure, const Vec& q, const Vec& q_other,
                           int layer, bool counterfactual) {
    BoundValue b;
    b.theorem = counterfactual ? Theorem::T6 : Theorem::T3;
    b.value = erasure_layer_gamma(erasure, layer) * norm2(sub(q_other, q));
    b.inputs_digest = digest({double(layer), b.value});
    return b;
}

BoundValue graphlime_bound(const GraphLimeBoundInputs& in, double sigma_x,
                           GraphLimeVariant variant) {
    GraphLimeBoundDiagnostics diag;
    return graphlime_bound(in, sigma_x, variant, diag);
}

BoundValue graphlime_bound(const GraphLimeBoundInputs& in, double sigma_x,
                           GraphLimeVariant variant, GraphLimeBoundDiagnostics& diag) {
    const GraphLimeArtifacts& art = *in.artifacts;
    const int n = static_cast<int>(art.samples.size());
    const int k = in.feature;
    if (k < 0 || k >= static_cast<int>(art.gram_raw.size()))
        throw BoundError("graphlime_bound: feature index out of range");
    double eta = in.eta;
    if (variant == GraphLimeVariant::Counterfactual) eta = in.eta >= 0.0 ? 1.0 : -1.0;
    if (eta == 0.0) throw SingularNoiseMatrixError("graphlime_bound: eta = 0 gives the all-ones matrix");
    if (sigma_x <= 0.0) throw BoundError("graphlime_bound: sigma_x must be positive");

    // sample values of feature k drive both W and K^(k)
    const Matrix& k_raw = art.gram_raw[k];
    if (art.sample_values.size() != art.gram_raw.size())
        throw BoundError("graphlime_bound: artifacts missing sample values");
    const Vec& xk = art.sample_values[k];

    Matrix w(n, n);
    const double denom = 2.0 * sigma_x * sigma_x;
    for (int i = 0; i < n; ++i) {
        w(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
            const double v = std::exp(-std::abs(2.0 * eta * (xk[i] - xk[j])) / denom);
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    const InverseResult winv = invert(w);
    if (winv.singular)
        throw SingularNoiseMatrixError("graphlime_bound: noise matrix W is singular");
    diag.w_condition = winv.condition_estimate;

    const InverseResult kinv = invert(k_raw);
    if (kinv.singular)
        throw SingularNoiseMatrixError("graphlime_bound: Gram matrix K^(k) is singular");
    diag.k_condition = kinv.condition_estimate;

    // residual gates: ||A A^-1 - I||_max
    auto residual = [&](const Matrix& a, const Matrix& ai) {
        Matrix prod = matmul(a, ai);
        for (int i = 0; i < prod.rows; ++i) prod(i, i) -= 1.0;
        return max_abs(prod);
    };
    diag.w_inverse_residual = residual(w, winv.inverse);
    diag.k_inverse_residual = residual(k_raw, kinv.inverse);

    double c = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c += winv.inverse(i, j);
    diag.c_value = c;

    // L-bar = L - sum_{j != k} beta_j K^(j), on the matrices beta was fit to
    double tr_lbar = trace(art.output_gram_centered);
    for (std::size_t j = 0; j < art.gram_centered.size(); ++j) {
        if (static_cast<int>(j) == k) continue;
        tr_lbar -= art.beta[j] * trace(art.gram_centered[j]);
    }
    diag.trace_lbar = tr_lbar;
    if (tr_lbar <= 0.0)
        throw TheoremInapplicableError(
            "graphlime_bound: tr(L-bar) <= 0, the closed-form fit assumption does not hold here");

    const double gamma2 = tr_lbar * trace(kinv.inverse);
    BoundValue b;
    b.theorem = variant == GraphLimeVariant::Stability ? Theorem::T4 : Theorem::T7;
    b.value = gamma2 * n * (c - 1.0);
    b.ill_conditioned_warning = diag.w_condition > 1e12 || diag.k_condition > 1e12;
    b.inputs_digest = digest({gamma2, c, double(n), b.value});
    if (b.value < 0.0)
        throw TheoremInapplicableError("graphlime_bound: negative bound value (c < 1)");
    return b;
}

BoundValue group_fairness_bound(const GnnModel& model, const Explanation& e,
                                const GroupFairnessInputs& pool, GroupFairnessReading reading) {
    if (pool.members.empty()) throw BoundError("group_fairness_bound: empty pool");
    double acc[2] = {0.0, 0.0};
    int counts[2] = {0, 0};
    for (std::size_t i = 0; i < pool.members.size(); ++i) {
        const double sv = pool.sensitive_values[i];
        if (sv != 0.0 && sv != 1.0) throw BoundError("group_fairness_bound: non-binary sensitive value");
        const int g = sv == 0.0 ? 0 : 1;
        const ComputationSubgraph& sg = pool.members[i];
        const Vec orig = forward(model, sg).probabilities;
        const Vec masked = forward(model, apply_mask(e, sg)).probabilities;
        if (reading == GroupFairnessReading::Difference) {
            // positive class is class 1
            acc[g] += std::abs(masked[1] - orig[1]);
        } else {
            const int y = pool.labels[i];
            const int pred = static_cast<int>(std::max_element(orig.begin(), orig.end()) - orig.begin());
            const int pred_masked =
                static_cast<int>(std::max_element(masked.begin(), masked.end()) - masked.begin());
            acc[g] += (pred != y ? 1.0 : 0.0) + (pred_masked != y ? 1.0 : 0.0);
        }
        ++counts[g];
    }
    if (counts[0] == 0 || counts[1] == 0)
        throw EmptyGroupError("group_fairness_bound: a sensitive group is empty");
    BoundValue b;
    b.theorem = Theorem::T8;
    b.value = std::abs(acc[0] / counts[0]) + std::abs(acc[1] / counts[1]);
    b.inputs_digest = digest({double(pool.members.size()), b.value});
    return b;
}

double worst_case_bound(const GnnModel& model, const PerturbationSet& set, const Explanation& e) {
    double worst = 0.0;
    auto gap = [&](const ComputationSubgraph& sg) {
        const Vec orig = forward(model, sg).probabilities;
        const Vec masked = forward(model, apply_mask(e, sg)).probabilities;
        return norm2(sub(orig, masked));
    };
    worst = gap(set.original);
    for (const auto& sg : set.perturbed) worst = std::max(worst, gap(sg));
    return worst;
}

VerificationRecord verify(const MetricValue& metric, const BoundValue& bound, double tol) {
    VerificationRecord r;
    r.node = metric.node;
    r.method_tag = metric.method_tag;
    r.metric_name = metric.name;
    r.theorem = bound.theorem;
    r.metric_value = metric.value;
    r.bound_value = bound.value;
    r.slack = bound.value - metric.value;
    r.tol = tol;
    r.violated = r.slack < -tol;
    return r;
}

}  // namespace probe
