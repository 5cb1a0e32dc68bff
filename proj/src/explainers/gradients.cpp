#include "probe/explainers.hpp"

namespace probe {

Explanation vanilla_grad(const GnnModel& model, const ComputationSubgraph& sg, double p) {
    const ForwardTrace tr = forward(model, sg);
    Explanation e;
    e.kind = ExplanationKind::NodeFeature;
    e.method_tag = "vanilla_grad";
    e.node = sg.target;
    e.top_p = p;
    e.node_scores = self_path_gradient(model, tr, sg.target_features(), tr.predicted_class());
    e.node_mask = top_p_mask(e.node_scores, p);
    return e;
}

Explanation integrated_gradients(const GnnModel& model, const ComputationSubgraph& sg,
                                 const IntegratedGradientsConfig& cfg, double p) {
    if (cfg.steps < 1) throw ExplainError("integrated_gradients: steps must be >= 1");
    const ForwardTrace tr = forward(model, sg);
    const int label = tr.predicted_class();
    const Vec x = sg.target_features();
    Vec baseline(x.size(), cfg.baseline_value);
    Vec path = sub(x, baseline);

    // midpoint Riemann sum over alpha; attribution target is the
    // predicted-class logit
    Vec acc(x.size(), 0.0);
    for (int i = 0; i < cfg.steps; ++i) {
        const double alpha = (i + 0.5) / cfg.steps;
        Vec xi = baseline;
        axpy(alpha, path, xi);
        const Vec g = self_path_logit_gradient(model, tr, xi, label);
        axpy(1.0 / cfg.steps, g, acc);
    }
    Explanation e;
    e.kind = ExplanationKind::NodeFeature;
    e.method_tag = "integrated_gradients";
    e.node = sg.target;
    e.top_p = p;
    e.node_scores = hadamard(path, acc);
    e.node_mask = top_p_mask(e.node_scores, p);
    return e;
}

}  // namespace probe
