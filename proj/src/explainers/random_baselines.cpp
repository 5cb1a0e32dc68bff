#include "probe/explainers.hpp"

namespace probe {

Explanation random_node_features(Rng& rng, int feature_dim, double p) {
    if (feature_dim <= 0) throw ExplainError("feature_dim must be positive");
    Explanation e;
    e.kind = ExplanationKind::NodeFeature;
    e.method_tag = "random_node_features";
    e.top_p = p;
    e.node_scores.resize(feature_dim);
    for (double& s : e.node_scores) s = rng.normal();
    e.node_mask = top_p_mask(e.node_scores, p);
    return e;
}

Explanation random_edges(Rng& rng, const ComputationSubgraph& sg, double p) {
    const auto nbrs = sg.target_neighbors();
    if (nbrs.empty())
        throw IsolatedNodeError("random_edges: node " + std::to_string(sg.target) +
                                " has no incident edges");
    Explanation e;
    e.kind = ExplanationKind::Edge;
    e.method_tag = "random_edges";
    e.node = sg.target;
    e.top_p = p;
    e.edge_neighbors = nbrs;
    e.edge_scores.resize(nbrs.size());
    for (double& s : e.edge_scores) s = rng.uniform();
    e.edge_mask = top_p_mask(e.edge_scores, p);
    return e;
}

}  // namespace probe
