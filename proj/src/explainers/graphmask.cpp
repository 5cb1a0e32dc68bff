#include <algorithm>
#include <cmath>

#include "probe/explainers.hpp"

namespace probe {

double ErasureFunction::score(int layer, const Vec& q) const {
    const ErasureLayer& el = layers[layer];
    Vec t = matvec(el.w1, q);
    double z = 0.0;
    for (int d = 0; d < el.w1.rows; ++d) {
        const double ln = (t[d] - el.ln_mean[d]) / el.ln_std[d];
        z += el.w2(0, d) * softplus(ln);
    }
    return z;
}

namespace {

struct NodeContext {
    ComputationSubgraph sg;
    ForwardTrace trace;
    std::vector<int> neighbors;          // global ids
    std::vector<int> neighbors_local;    // local indices
    Vec target_probs;                    // f(G_u)
};

// Per-layer gate input q^{l}_{u,v} built from the unmasked trace.
Vec gate_input(const NodeContext& ctx, int layer, int v_local) {
    const Matrix& h = (layer == 0) ? ctx.sg.features : ctx.trace.hidden[layer - 1];
    const int lu = ctx.trace.target_local;
    Vec q;
    q.reserve(2 * h.cols);
    for (int c = 0; c < h.cols; ++c) q.push_back(h(lu, c));
    for (int c = 0; c < h.cols; ++c) q.push_back(h(v_local, c));
    return q;
}

struct AdamState {
    std::vector<Vec> m, v;
    int step = 0;
    void init(const std::vector<Vec*>& params) {
        for (auto* p : params) {
            m.emplace_back(p->size(), 0.0);
            v.emplace_back(p->size(), 0.0);
        }
    }
    void update(std::vector<Vec*>& params, const std::vector<Vec*>& grads, double lr) {
        ++step;
        const double bc1 = 1.0 - std::pow(0.9, step);
        const double bc2 = 1.0 - std::pow(0.999, step);
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = *params[pi];
            const auto& g = *grads[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                m[pi][i] = 0.9 * m[pi][i] + 0.1 * g[i];
                v[pi][i] = 0.999 * v[pi][i] + 0.001 * g[i] * g[i];
                p[i] -= lr * (m[pi][i] / bc1) / (std::sqrt(v[pi][i] / bc2) + 1e-8);
            }
        }
    }
};

}  // namespace

ErasureFunction graphmask_train(const GnnModel& model, const Graph& graph,
                                const ErasureConfig& cfg, Rng& rng, ErasureTrainStats* stats) {
    const int L = model.layer_count();
    const int D = cfg.hidden_dim;

    std::vector<NodeContext> contexts;
    for (int u = 0; u < graph.node_count && static_cast<int>(contexts.size()) < cfg.max_train_nodes;
         ++u) {
        if (!graph.train_mask[u]) continue;
        NodeContext ctx;
        ctx.sg = computation_subgraph(graph, u, L);
        ctx.neighbors = ctx.sg.target_neighbors();
        if (ctx.neighbors.empty()) continue;
        ctx.trace = forward(model, ctx.sg);
        for (int v : ctx.neighbors) ctx.neighbors_local.push_back(ctx.sg.local_index(v));
        ctx.target_probs = ctx.trace.probabilities;
        contexts.push_back(std::move(ctx));
    }
    if (contexts.empty()) throw ExplainError("graphmask_train: no usable training nodes");

    ErasureFunction er;
    er.config = cfg;
    er.layers.resize(L);
    for (int l = 0; l < L; ++l) {
        const int hin = (l == 0) ? model.input_dim() : model.hidden_dim(l - 1);
        ErasureLayer& el = er.layers[l];
        el.w1 = Matrix(D, 2 * hin);
        el.w2 = Matrix(1, D);
        const double b1 = 1.0 / std::sqrt(2.0 * hin);
        for (double& x : el.w1.data) x = rng.uniform(-b1, b1);
        const double b2 = 1.0 / std::sqrt(static_cast<double>(D));
        for (double& x : el.w2.data) x = rng.uniform(-b2, b2);
        el.ln_mean.assign(D, 0.0);
        el.ln_std.assign(D, 1.0);
        // baseline starts at the mean message over training edges
        el.baseline.assign(hin, 0.0);
        int count = 0;
        for (const auto& ctx : contexts) {
            const Matrix& h = (l == 0) ? ctx.sg.features : ctx.trace.hidden[l - 1];
            for (int vl : ctx.neighbors_local) {
                for (int c = 0; c < hin; ++c) el.baseline[c] += h(vl, c);
                ++count;
            }
        }
        if (count > 0)
            for (double& x : el.baseline) x /= count;
    }

    std::vector<Vec*> params;
    for (auto& el : er.layers) {
        params.push_back(&el.w1.data);
        params.push_back(&el.w2.data);
        params.push_back(&el.baseline);
    }
    AdamState adam;
    adam.init(params);

    const double ln_momentum = 0.9;
    Vec loss_trace;
    double kl_first = 0.0, kl_last = 0.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Matrix> gw1;
        std::vector<Matrix> gw2;
        std::vector<Vec> galpha;
        for (int l = 0; l < L; ++l) {
            gw1.emplace_back(er.layers[l].w1.rows, er.layers[l].w1.cols);
            gw2.emplace_back(1, D);
            galpha.emplace_back(er.layers[l].baseline.size(), 0.0);
        }
        // per-layer accumulators for the running LN statistics
        std::vector<Vec> stat_sum(L, Vec(D, 0.0)), stat_sumsq(L, Vec(D, 0.0));
        std::vector<int> stat_count(L, 0);

        double kl_total = 0.0, sparsity_total = 0.0;
        int edge_total = 0;

        for (const auto& ctx : contexts) {
            const int deg = static_cast<int>(ctx.neighbors.size());

            // gates and intermediates per layer
            std::vector<std::vector<Vec>> q_store(L), t_store(L), s_store(L);
            std::vector<Vec> z_store(L), g_store(L);
            std::vector<Vec> masked_pre(L), masked_hidden(L), masked_agg(L);
            Vec h_prev = ctx.sg.target_features();
            for (int l = 0; l < L; ++l) {
                const ErasureLayer& el = er.layers[l];
                const Matrix& h_in = (l == 0) ? ctx.sg.features : ctx.trace.hidden[l - 1];
                const int hin = h_in.cols;
                Vec agg(hin, 0.0);
                z_store[l].resize(deg);
                g_store[l].resize(deg);
                for (int e = 0; e < deg; ++e) {
                    Vec q = gate_input(ctx, l, ctx.neighbors_local[e]);
                    Vec t = matvec(el.w1, q);
                    Vec s(D);
                    double z = 0.0;
                    for (int d = 0; d < D; ++d) {
                        const double ln = (t[d] - el.ln_mean[d]) / el.ln_std[d];
                        s[d] = softplus(ln);
                        z += el.w2(0, d) * s[d];
                        stat_sum[l][d] += t[d];
                        stat_sumsq[l][d] += t[d] * t[d];
                    }
                    ++stat_count[l];
                    const double gate = sigmoid(z);
                    z_store[l][e] = z;
                    g_store[l][e] = gate;
                    sparsity_total += gate;
                    ++edge_total;
                    for (int c = 0; c < hin; ++c)
                        agg[c] += gate * h_in(ctx.neighbors_local[e], c) +
                                  el.baseline[c] * (1.0 - gate);
                    q_store[l].push_back(std::move(q));
                    t_store[l].push_back(std::move(t));
                    s_store[l].push_back(std::move(s));
                }
                masked_agg[l] = agg;
                const GnnLayer& gl = model.layer(l);
                Vec a = matvec(gl.w_self, h_prev);
                const Vec na = matvec(gl.w_neighbor, agg);
                for (std::size_t i = 0; i < a.size(); ++i) a[i] += na[i];
                masked_pre[l] = a;
                masked_hidden[l].resize(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) masked_hidden[l][i] = softplus(a[i]);
                h_prev = masked_hidden[l];
            }
            Vec logits = matvec(model.classifier_weight(), h_prev);
            for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];
            const Vec pm = softmax(logits);
            const Vec& po = ctx.target_probs;
            for (std::size_t c = 0; c < po.size(); ++c)
                if (po[c] > 0.0) kl_total += po[c] * (std::log(po[c]) - std::log(std::max(pm[c], 1e-300)));

            // backward: d KL / d logits = pm - po
            Vec dlogits(po.size());
            for (std::size_t c = 0; c < po.size(); ++c) dlogits[c] = pm[c] - po[c];
            Vec dh = matvec_transposed(model.classifier_weight(), dlogits);
            for (int l = L - 1; l >= 0; --l) {
                const ErasureLayer& el = er.layers[l];
                const GnnLayer& gl = model.layer(l);
                const Matrix& h_in = (l == 0) ? ctx.sg.features : ctx.trace.hidden[l - 1];
                const int hin = h_in.cols;
                Vec da(dh.size());
                for (std::size_t i = 0; i < dh.size(); ++i)
                    da[i] = dh[i] * sigmoid(masked_pre[l][i]);
                const Vec dagg = matvec_transposed(gl.w_neighbor, da);
                for (int e = 0; e < deg; ++e) {
                    double dgate = 0.0;
                    for (int c = 0; c < hin; ++c)
                        dgate += dagg[c] * (h_in(ctx.neighbors_local[e], c) - el.baseline[c]);
                    const double gate = g_store[l][e];
                    for (int c = 0; c < hin; ++c) galpha[l][c] += dagg[c] * (1.0 - gate);
                    // combined gate gradient from KL plus the sparsity term
                    const double dz = (dgate + cfg.sparsity_weight) * gate * (1.0 - gate);
                    // z = w2 . sp((t - mu)/sigma)
                    const Vec& t = t_store[l][e];
                    const Vec& s = s_store[l][e];
                    const Vec& q = q_store[l][e];
                    for (int d = 0; d < D; ++d) {
                        gw2[l](0, d) += dz * s[d];
                        const double ln = (t[d] - el.ln_mean[d]) / el.ln_std[d];
                        const double dt = dz * el.w2(0, d) * sigmoid(ln) / el.ln_std[d];
                        for (std::size_t c = 0; c < q.size(); ++c)
                            gw1[l](d, static_cast<int>(c)) += dt * q[c];
                    }
                }
                if (l > 0) dh = matvec_transposed(gl.w_self, da);
            }
        }

        (void)edge_total;
        const double loss = (kl_total + cfg.sparsity_weight * sparsity_total) / contexts.size();
        if (!std::isfinite(loss)) throw DivergenceError("graphmask training diverged", epoch);
        loss_trace.push_back(loss);
        if (epoch == 0) kl_first = kl_total / contexts.size();
        kl_last = kl_total / contexts.size();

        std::vector<Vec*> grads;
        std::vector<Vec> grad_storage;
        grad_storage.reserve(3 * L);
        for (int l = 0; l < L; ++l) {
            const double scale = 1.0 / contexts.size();
            for (double& x : gw1[l].data) x *= scale;
            for (double& x : gw2[l].data) x *= scale;
            for (double& x : galpha[l]) x *= scale;
        }
        for (int l = 0; l < L; ++l) {
            grads.push_back(&gw1[l].data);
            grads.push_back(&gw2[l].data);
            grads.push_back(&galpha[l]);
        }
        adam.update(params, grads, cfg.learning_rate);

        for (int l = 0; l < L; ++l) {
            if (stat_count[l] == 0) continue;
            ErasureLayer& el = er.layers[l];
            for (int d = 0; d < D; ++d) {
                const double mean = stat_sum[l][d] / stat_count[l];
                const double var = std::max(stat_sumsq[l][d] / stat_count[l] - mean * mean, 0.0);
                const double sd = std::sqrt(var) + 1e-3;
                el.ln_mean[d] = ln_momentum * el.ln_mean[d] + (1.0 - ln_momentum) * mean;
                el.ln_std[d] = ln_momentum * el.ln_std[d] + (1.0 - ln_momentum) * sd;
            }
        }
    }

    if (stats) {
        stats->loss_trace = loss_trace;
        stats->kl_initial = kl_first;
        stats->kl_final = kl_last;
    }
    return er;
}

Explanation graphmask_explain(const ErasureFunction& erasure, const GnnModel& model,
                              const ComputationSubgraph& sg, double p) {
    const auto nbrs = sg.target_neighbors();
    if (nbrs.empty())
        throw IsolatedNodeError("graphmask_explain: node " + std::to_string(sg.target) +
                                " has no incident edges");
    const ForwardTrace tr = forward(model, sg);
    const int L = model.layer_count();

    Explanation e;
    e.kind = ExplanationKind::Edge;
    e.method_tag = "graphmask";
    e.node = sg.target;
    e.top_p = p;
    e.edge_neighbors = nbrs;
    e.per_layer_edge_scores.assign(L, Vec(nbrs.size(), 0.0));
    for (int l = 0; l < L; ++l) {
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const Vec q = concatenated_embedding(model, sg, tr, nbrs[i], l);
            e.per_layer_edge_scores[l][i] = erasure.score(l, q);
        }
    }
    e.edge_scores = e.per_layer_edge_scores[L - 1];
    e.edge_mask = top_p_mask(e.edge_scores, p);
    return e;
}

}  // namespace probe
