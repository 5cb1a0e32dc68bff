#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probe/graph.hpp"

namespace probe {

enum class ExplanationKind { NodeFeature, Edge, Both };

std::string to_string(ExplanationKind k);

// Importance scores and top-p masks for one target node. Edge entries refer
// to the target's incident edges, identified by neighbor id in ascending
// order so explanations from different subgraphs can be compared.
struct Explanation {
    ExplanationKind kind = ExplanationKind::NodeFeature;
    int node = 0;
    std::string method_tag;
    double top_p = 0.25;

    Vec node_scores;                  // length M when present
    std::vector<std::uint8_t> node_mask;

    std::vector<int> edge_neighbors;  // ascending global neighbor ids
    Vec edge_scores;                  // aligned with edge_neighbors
    std::vector<std::uint8_t> edge_mask;
    std::vector<Vec> per_layer_edge_scores;  // GraphMASK: one row per layer

    bool has_node_mask() const { return !node_mask.empty(); }
    bool has_edge_mask() const { return !edge_mask.empty(); }

    std::string to_json() const;
    static Explanation from_json(const std::string& text);
};

// Exactly ceil(p * len) ones at the largest |score| positions, ties broken by
// lower index.
std::vector<std::uint8_t> top_p_mask(const Vec& scores, double p);

// Masking function t: target features -> x_u o r_u, incident edges with mask 0
// removed; neighbors untouched. Missing masks act as all-ones.
ComputationSubgraph apply_mask(const Explanation& e, const ComputationSubgraph& sg);

}  // namespace probe
