#include <algorithm>
#include <cmath>

#include "probe/explainers.hpp"

namespace probe {

namespace {

// Masked forward for the target only: features x_u o sigmoid(mf), incident
// messages scaled by sigmoid(me) at every layer, neighbor hidden states fixed
// at the unmasked trace values.
struct MaskedEval {
    double objective = 0.0;
    double ce = 0.0;
    Vec grad_feat;   // d obj / d mf
    Vec grad_edge;   // d obj / d me
    Vec probs;
};

MaskedEval evaluate_masks(const GnnModel& model, const ComputationSubgraph& sg,
                          const ForwardTrace& trace, const std::vector<int>& nbr_local,
                          const Vec& mf, const Vec& me, int label, const MaskOptConfig& cfg,
                          bool with_grad) {
    const int L = model.layer_count();
    const int deg = static_cast<int>(nbr_local.size());
    const int m = sg.features.cols;

    Vec qf(m), qe(deg);
    for (int j = 0; j < m; ++j) qf[j] = sigmoid(mf[j]);
    for (int e = 0; e < deg; ++e) qe[e] = sigmoid(me[e]);

    const Vec x = sg.target_features();
    Vec h = hadamard(x, qf);
    std::vector<Vec> pre(L), hid(L);
    for (int l = 0; l < L; ++l) {
        const GnnLayer& gl = model.layer(l);
        const Matrix& h_in = (l == 0) ? sg.features : trace.hidden[l - 1];
        Vec agg(h_in.cols, 0.0);
        for (int e = 0; e < deg; ++e)
            for (int c = 0; c < h_in.cols; ++c) agg[c] += qe[e] * h_in(nbr_local[e], c);
        Vec a = matvec(gl.w_self, h);
        const Vec na = matvec(gl.w_neighbor, agg);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += na[i];
        pre[l] = a;
        hid[l].resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) hid[l][i] = softplus(a[i]);
        h = hid[l];
    }
    Vec logits = matvec(model.classifier_weight(), h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];

    MaskedEval out;
    out.probs = softmax(logits);
    out.ce = -std::log(std::max(out.probs[label], 1e-300));

    double size_term = 0.0, entropy_term = 0.0;
    auto ent = [](double q) {
        if (q <= 0.0 || q >= 1.0) return 0.0;
        return -q * std::log(q) - (1.0 - q) * std::log(1.0 - q);
    };
    for (double q : qf) size_term += q;
    for (double q : qe) size_term += q;
    for (double q : qf) entropy_term += ent(q);
    for (double q : qe) entropy_term += ent(q);
    out.objective = out.ce + cfg.size_weight * size_term + cfg.entropy_weight * entropy_term;
    if (!with_grad) return out;

    // reverse pass
    Vec dlogits = out.probs;
    dlogits[label] -= 1.0;
    Vec dh = matvec_transposed(model.classifier_weight(), dlogits);
    out.grad_feat.assign(m, 0.0);
    out.grad_edge.assign(deg, 0.0);
    for (int l = L - 1; l >= 0; --l) {
        const GnnLayer& gl = model.layer(l);
        const Matrix& h_in = (l == 0) ? sg.features : trace.hidden[l - 1];
        Vec da(dh.size());
        for (std::size_t i = 0; i < dh.size(); ++i) da[i] = dh[i] * sigmoid(pre[l][i]);
        const Vec dagg = matvec_transposed(gl.w_neighbor, da);
        for (int e = 0; e < deg; ++e) {
            double s = 0.0;
            for (int c = 0; c < h_in.cols; ++c) s += dagg[c] * h_in(nbr_local[e], c);
            out.grad_edge[e] += s;  // d ce / d qe
        }
        dh = matvec_transposed(gl.w_self, da);
    }
    // dh now holds d ce / d (x o qf)
    for (int j = 0; j < m; ++j) out.grad_feat[j] = dh[j] * x[j];
    // regularizers, then chain through the sigmoid parameterization
    for (int j = 0; j < m; ++j) {
        const double q = qf[j];
        double d = out.grad_feat[j] + cfg.size_weight;
        if (q > 0.0 && q < 1.0) d += cfg.entropy_weight * std::log((1.0 - q) / q);
        out.grad_feat[j] = d * q * (1.0 - q);
    }
    for (int e = 0; e < deg; ++e) {
        const double q = qe[e];
        double d = out.grad_edge[e] + cfg.size_weight;
        if (q > 0.0 && q < 1.0) d += cfg.entropy_weight * std::log((1.0 - q) / q);
        out.grad_edge[e] = d * q * (1.0 - q);
    }
    return out;
}

}  // namespace

Explanation gnnexplainer(const GnnModel& model, const ComputationSubgraph& sg,
                         const MaskOptConfig& cfg, Rng& rng, double p) {
    (void)rng;  // init is deterministic; the signature keeps the seeding surface uniform
    const ForwardTrace trace = forward(model, sg);
    const int label = trace.predicted_class();
    const auto nbrs = sg.target_neighbors();
    std::vector<int> nbr_local;
    for (int v : nbrs) nbr_local.push_back(sg.local_index(v));
    const int m = sg.features.cols;
    const int deg = static_cast<int>(nbrs.size());

    Vec mf(m, 0.0), me(deg, 0.0);  // sigmoid(0) = 0.5 start
    double lr = cfg.learning_rate;
    MaskedEval cur = evaluate_masks(model, sg, trace, nbr_local, mf, me, label, cfg, true);
    for (int step = 0; step < cfg.steps; ++step) {
        double trial_lr = lr;
        bool accepted = false;
        for (int half = 0; half < 20; ++half) {
            Vec mf2 = mf, me2 = me;
            axpy(-trial_lr, cur.grad_feat, mf2);
            axpy(-trial_lr, cur.grad_edge, me2);
            MaskedEval nxt = evaluate_masks(model, sg, trace, nbr_local, mf2, me2, label, cfg, true);
            if (nxt.objective <= cur.objective + 1e-6) {
                mf = std::move(mf2);
                me = std::move(me2);
                cur = std::move(nxt);
                accepted = true;
                break;
            }
            trial_lr *= 0.5;
        }
        if (!accepted) break;
    }

    Explanation e;
    e.kind = deg > 0 ? ExplanationKind::Both : ExplanationKind::NodeFeature;
    e.method_tag = "gnnexplainer";
    e.node = sg.target;
    e.top_p = p;
    e.node_scores.resize(m);
    for (int j = 0; j < m; ++j) e.node_scores[j] = sigmoid(mf[j]);
    e.node_mask = top_p_mask(e.node_scores, p);
    if (deg > 0) {
        e.edge_neighbors = nbrs;
        e.edge_scores.resize(deg);
        for (int j = 0; j < deg; ++j) e.edge_scores[j] = sigmoid(me[j]);
        e.edge_mask = top_p_mask(e.edge_scores, p);
    }
    return e;
}

}  // namespace probe
