#include "probe/explanation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace probe {

std::string to_string(ExplanationKind k) {
    switch (k) {
        case ExplanationKind::NodeFeature: return "node-feature";
        case ExplanationKind::Edge: return "edge";
        case ExplanationKind::Both: return "both";
    }
    return "?";
}

static ExplanationKind kind_from_string(const std::string& s) {
    if (s == "node-feature") return ExplanationKind::NodeFeature;
    if (s == "edge") return ExplanationKind::Edge;
    if (s == "both") return ExplanationKind::Both;
    throw std::invalid_argument("unknown explanation kind: " + s);
}

std::vector<std::uint8_t> top_p_mask(const Vec& scores, double p) {
    if (scores.empty()) throw std::invalid_argument("top_p_mask: empty scores");
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("top_p_mask: p must be in (0,1]");
    for (double s : scores)
        if (!std::isfinite(s)) throw std::invalid_argument("top_p_mask: non-finite score");
    const int len = static_cast<int>(scores.size());
    const int keep = static_cast<int>(std::ceil(p * len));
    std::vector<int> order(len);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(scores[a]) > std::abs(scores[b]);
    });
    std::vector<std::uint8_t> mask(len, 0);
    for (int i = 0; i < keep; ++i) mask[order[i]] = 1;
    return mask;
}

ComputationSubgraph apply_mask(const Explanation& e, const ComputationSubgraph& sg) {
    ComputationSubgraph out = sg;
    const int lt = out.local_index(out.target);
    if (!e.node_mask.empty()) {
        if (static_cast<int>(e.node_mask.size()) != out.features.cols)
            throw std::invalid_argument("apply_mask: node mask length mismatch");
        for (int c = 0; c < out.features.cols; ++c)
            out.features(lt, c) *= e.node_mask[c] ? 1.0 : 0.0;
    }
    if (!e.edge_mask.empty()) {
        if (e.edge_mask.size() != e.edge_neighbors.size())
            throw std::invalid_argument("apply_mask: edge mask length mismatch");
        // Positional application against the member's incident edges in
        // ascending neighbor order (identity when the explanation came from
        // this subgraph); extras beyond the mask are kept.
        std::vector<int> incident = sg.target_neighbors();
        std::vector<Edge> drop;
        for (std::size_t i = 0; i < incident.size() && i < e.edge_mask.size(); ++i)
            if (!e.edge_mask[i]) drop.emplace_back(sg.target, incident[i]);
        if (!drop.empty()) {
            std::vector<Edge> kept;
            kept.reserve(out.edges.size());
            for (const Edge& ed : out.edges)
                if (std::find(drop.begin(), drop.end(), ed) == drop.end()) kept.push_back(ed);
            out.edges = std::move(kept);
        }
    }
    return out;
}

std::string Explanation::to_json() const {
    nlohmann::ordered_json j;
    j["node"] = node;
    j["method"] = method_tag;
    j["kind"] = to_string(kind);
    j["p"] = top_p;
    if (!node_scores.empty()) j["node_scores"] = node_scores;
    if (!node_mask.empty()) j["node_mask"] = node_mask;
    if (!edge_neighbors.empty()) j["edge_neighbors"] = edge_neighbors;
    if (!edge_scores.empty()) j["edge_scores"] = edge_scores;
    if (!edge_mask.empty()) j["edge_mask"] = edge_mask;
    if (!per_layer_edge_scores.empty()) j["per_layer_edge_scores"] = per_layer_edge_scores;
    return j.dump(2);
}

Explanation Explanation::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Explanation e;
    e.node = j.at("node").get<int>();
    e.method_tag = j.at("method").get<std::string>();
    e.kind = kind_from_string(j.at("kind").get<std::string>());
    e.top_p = j.at("p").get<double>();
    if (j.contains("node_scores")) e.node_scores = j["node_scores"].get<Vec>();
    if (j.contains("node_mask")) e.node_mask = j["node_mask"].get<std::vector<std::uint8_t>>();
    if (j.contains("edge_neighbors")) e.edge_neighbors = j["edge_neighbors"].get<std::vector<int>>();
    if (j.contains("edge_scores")) e.edge_scores = j["edge_scores"].get<Vec>();
    if (j.contains("edge_mask")) e.edge_mask = j["edge_mask"].get<std::vector<std::uint8_t>>();
    if (j.contains("per_layer_edge_scores"))
        e.per_layer_edge_scores = j["per_layer_edge_scores"].get<std::vector<Vec>>();
    return e;
}

}  // namespace probe
