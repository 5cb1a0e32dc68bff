#include <algorithm>
#include <cmath>

#include "probe/explainers.hpp"

namespace probe {

double PgExplainer::omega(const Vec& q) const {
    const Vec t = matvec(w1, q);
    double z = b2;
    for (int d = 0; d < w1.rows; ++d) {
        const double h = std::max(t[d] + b1[d], 0.0);  // relu
        z += w2(0, d) * h;
    }
    return z;
}

namespace {

struct EdgeSample {
    Vec q;          // concat(h_u^L, h_v^L)
    int node;       // target u
};

struct NodeBatch {
    ComputationSubgraph sg;
    ForwardTrace trace;
    std::vector<int> nbr_local;
    std::vector<Vec> q;  // per incident edge
    int label = 0;
};

// masked CE and d ce / d edge-weight for one node, neighbor states frozen
void masked_ce_grad(const GnnModel& model, const NodeBatch& nb, const Vec& weights, double& ce,
                    Vec& dweights) {
    const int L = model.layer_count();
    const int deg = static_cast<int>(nb.nbr_local.size());
    Vec h = nb.sg.target_features();
    std::vector<Vec> pre(L);
    for (int l = 0; l < L; ++l) {
        const GnnLayer& gl = model.layer(l);
        const Matrix& h_in = (l == 0) ? nb.sg.features : nb.trace.hidden[l - 1];
        Vec agg(h_in.cols, 0.0);
        for (int e = 0; e < deg; ++e)
            for (int c = 0; c < h_in.cols; ++c) agg[c] += weights[e] * h_in(nb.nbr_local[e], c);
        Vec a = matvec(gl.w_self, h);
        const Vec na = matvec(gl.w_neighbor, agg);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += na[i];
        pre[l] = a;
        h.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) h[i] = softplus(a[i]);
    }
    Vec logits = matvec(model.classifier_weight(), h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];
    const Vec probs = softmax(logits);
    ce = -std::log(std::max(probs[nb.label], 1e-300));

    Vec dlogits = probs;
    dlogits[nb.label] -= 1.0;
    Vec dh = matvec_transposed(model.classifier_weight(), dlogits);
    dweights.assign(deg, 0.0);
    for (int l = L - 1; l >= 0; --l) {
        const GnnLayer& gl = model.layer(l);
        const Matrix& h_in = (l == 0) ? nb.sg.features : nb.trace.hidden[l - 1];
        Vec da(dh.size());
        for (std::size_t i = 0; i < dh.size(); ++i) da[i] = dh[i] * sigmoid(pre[l][i]);
        const Vec dagg = matvec_transposed(gl.w_neighbor, da);
        for (int e = 0; e < deg; ++e) {
            double s = 0.0;
            for (int c = 0; c < h_in.cols; ++c) s += dagg[c] * h_in(nb.nbr_local[e], c);
            dweights[e] += s;
        }
        dh = matvec_transposed(gl.w_self, da);
    }
}

}  // namespace

PgExplainer pgexplainer_train(const GnnModel& model, const Graph& graph,
                              const std::vector<int>& train_nodes, const MaskOptConfig& cfg,
                              Rng& rng) {
    const int L = model.layer_count();
    const int hl = model.hidden_dim(L - 1);

    std::vector<NodeBatch> batch;
    for (int u : train_nodes) {
        if (static_cast<int>(batch.size()) >= cfg.max_train_nodes) break;
        NodeBatch nb;
        nb.sg = computation_subgraph(graph, u, L);
        const auto nbrs = nb.sg.target_neighbors();
        if (nbrs.empty()) continue;
        nb.trace = forward(model, nb.sg);
        nb.label = nb.trace.predicted_class();
        const int lu = nb.trace.target_local;
        for (int v : nbrs) {
            const int lv = nb.sg.local_index(v);
            nb.nbr_local.push_back(lv);
            Vec q;
            q.reserve(2 * hl);
            for (int c = 0; c < hl; ++c) q.push_back(nb.trace.hidden[L - 1](lu, c));
            for (int c = 0; c < hl; ++c) q.push_back(nb.trace.hidden[L - 1](lv, c));
            nb.q.push_back(std::move(q));
        }
        batch.push_back(std::move(nb));
    }
    if (batch.empty()) throw ExplainError("pgexplainer_train: no usable training nodes");

    PgExplainer pg;
    pg.w1 = Matrix(cfg.mlp_hidden, 2 * hl);
    pg.b1.assign(cfg.mlp_hidden, 0.0);
    pg.w2 = Matrix(1, cfg.mlp_hidden);
    pg.b2 = 0.0;
    const double bound1 = 1.0 / std::sqrt(2.0 * hl);
    for (double& x : pg.w1.data) x = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
    for (double& x : pg.w2.data) x = rng.uniform(-bound2, bound2);

    // Adam over the four parameter blocks
    Vec b2_store{0.0};
    std::vector<Vec*> params = {&pg.w1.data, &pg.b1, &pg.w2.data, &b2_store};
    std::vector<Vec> mstate, vstate;
    for (auto* pp : params) {
        mstate.emplace_back(pp->size(), 0.0);
        vstate.emplace_back(pp->size(), 0.0);
    }

    for (int step = 0; step < cfg.steps; ++step) {
        const double frac = cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 1.0;
        const double temp = cfg.temperature_start + frac * (cfg.temperature_end - cfg.temperature_start);

        Matrix gw1(pg.w1.rows, pg.w1.cols);
        Vec gb1(pg.b1.size(), 0.0);
        Matrix gw2(1, cfg.mlp_hidden);
        double gb2 = 0.0;
        double loss = 0.0;
        int loss_terms = 0;

        for (const auto& nb : batch) {
            const int deg = static_cast<int>(nb.nbr_local.size());
            Vec omega(deg), domega(deg, 0.0);
            std::vector<Vec> tcache(deg);
            for (int e = 0; e < deg; ++e) {
                tcache[e] = matvec(pg.w1, nb.q[e]);
                double z = b2_store[0];
                for (int d = 0; d < cfg.mlp_hidden; ++d)
                    z += pg.w2(0, d) * std::max(tcache[e][d] + pg.b1[d], 0.0);
                omega[e] = z;
            }
            for (int s = 0; s < cfg.sample_count; ++s) {
                Vec weights(deg), dedge(deg);
                Vec gum(deg);
                for (int e = 0; e < deg; ++e) {
                    double eps = rng.uniform();
                    eps = std::min(std::max(eps, 1e-12), 1.0 - 1e-12);
                    gum[e] = std::log(eps) - std::log(1.0 - eps);
                    weights[e] = sigmoid((gum[e] + omega[e]) / temp);
                }
                double ce = 0.0;
                masked_ce_grad(model, nb, weights, ce, dedge);
                loss += ce;
                ++loss_terms;
                for (int e = 0; e < deg; ++e)
                    domega[e] += dedge[e] * weights[e] * (1.0 - weights[e]) / temp;
            }
            for (int e = 0; e < deg; ++e) {
                const double dz = domega[e] / cfg.sample_count;
                gb2 += dz;
                for (int d = 0; d < cfg.mlp_hidden; ++d) {
                    const double pre = tcache[e][d] + pg.b1[d];
                    const double hidden = std::max(pre, 0.0);
                    gw2(0, d) += dz * hidden;
                    if (pre > 0.0) {
                        const double dt = dz * pg.w2(0, d);
                        gb1[d] += dt;
                        for (std::size_t c = 0; c < nb.q[e].size(); ++c)
                            gw1(d, static_cast<int>(c)) += dt * nb.q[e][c];
                    }
                }
            }
        }
        if (!std::isfinite(loss)) throw DivergenceError("pgexplainer training diverged", step);
        const double scale = 1.0 / std::max(loss_terms, 1);
        for (double& x : gw1.data) x *= scale;
        for (double& x : gb1) x *= scale;
        for (double& x : gw2.data) x *= scale;
        gb2 *= scale;

        std::vector<Vec> grads = {gw1.data, gb1, gw2.data, Vec{gb2}};
        const double bc1 = 1.0 - std::pow(0.9, step + 1);
        const double bc2 = 1.0 - std::pow(0.999, step + 1);
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = *params[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                mstate[pi][i] = 0.9 * mstate[pi][i] + 0.1 * grads[pi][i];
                vstate[pi][i] = 0.999 * vstate[pi][i] + 0.001 * grads[pi][i] * grads[pi][i];
                p[i] -= cfg.learning_rate * (mstate[pi][i] / bc1) /
                        (std::sqrt(vstate[pi][i] / bc2) + 1e-8);
            }
        }
    }
    pg.b2 = b2_store[0];
    pg.temperature = cfg.temperature_end;
    return pg;
}

Explanation pgexplainer_explain(const PgExplainer& pg, const GnnModel& model,
                                const ComputationSubgraph& sg, double p) {
    const auto nbrs = sg.target_neighbors();
    if (nbrs.empty())
        throw IsolatedNodeError("pgexplainer_explain: node " + std::to_string(sg.target) +
                                " has no incident edges");
    const ForwardTrace trace = forward(model, sg);
    const int L = model.layer_count();
    const int hl = model.hidden_dim(L - 1);
    const int lu = trace.target_local;

    Explanation e;
    e.kind = ExplanationKind::Edge;
    e.method_tag = "pgexplainer";
    e.node = sg.target;
    e.top_p = p;
    e.edge_neighbors = nbrs;
    e.edge_scores.resize(nbrs.size());
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
        const int lv = sg.local_index(nbrs[i]);
        Vec q;
        q.reserve(2 * hl);
        for (int c = 0; c < hl; ++c) q.push_back(trace.hidden[L - 1](lu, c));
        for (int c = 0; c < hl; ++c) q.push_back(trace.hidden[L - 1](lv, c));
        // epsilon integrated out at its mean: log(eps) - log(1-eps) = 0
        e.edge_scores[i] = sigmoid(pg.omega(q) / pg.temperature);
    }
    e.edge_mask = top_p_mask(e.edge_scores, p);
    return e;
}

}  // namespace probe
