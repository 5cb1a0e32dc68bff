#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "probe/linalg.hpp"

namespace probe {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatchError : GraphError {
    using GraphError::GraphError;
};
struct NonBinarySensitiveError : GraphError {
    using GraphError::GraphError;
};
struct DanglingEdgeError : GraphError {
    using GraphError::GraphError;
};

// Undirected edge, smaller endpoint first.
struct Edge {
    int a = 0;
    int b = 0;
    Edge() = default;
    Edge(int x, int y) : a(x < y ? x : y), b(x < y ? y : x) {}
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Graph {
    int node_count = 0;              // N
    int feature_dim = 0;             // M
    Matrix features;                 // N x M
    std::vector<Edge> edges;         // sorted, unique, no self-loops
    std::vector<int> labels;         // in [0, class_count)
    int class_count = 0;             // C
    std::optional<int> sensitive_index;
    std::vector<bool> train_mask;
    std::vector<bool> test_mask;

    std::vector<std::vector<int>> adjacency() const;  // neighbor lists, ascending
    void validate() const;
};

// L-hop view around a target node. Owns a copy of the included nodes'
// features so perturbations never touch the parent graph.
struct ComputationSubgraph {
    int target = 0;                  // global node id
    int hop_count = 0;
    std::vector<int> nodes;          // global ids, ascending
    std::vector<Edge> edges;         // global id pairs among nodes, sorted
    Matrix features;                 // row i = features of nodes[i]

    int local_index(int global_id) const;  // -1 if absent
    std::vector<std::vector<int>> local_adjacency() const;
    std::vector<int> target_neighbors() const;  // global ids, ascending
    Vec target_features() const;
};

struct SplitSpec {
    double train_ratio = 0.8;
    std::uint64_t seed = 0;
};

Graph load_graph(const std::string& features_path, const std::string& edges_path,
                 const std::string& labels_path, std::optional<int> sensitive_column,
                 const SplitSpec& split);

struct SyntheticConfig {
    int n_per_class = 150;
    int feature_dim = 10;
    int class_count = 2;
    double intra_edge_prob = 0.1;
    double inter_edge_prob = 0.01;
    double class_mean_shift = 1.0;
    double sensitive_bias = 0.3;  // class-dependent Bernoulli bias of the sensitive column
    std::uint64_t seed = 0;
    double train_ratio = 0.8;
};

// Stochastic block model with Gaussian class-conditional features; the last
// feature column is binary sensitive with class-dependent bias.
Graph generate_synthetic(const SyntheticConfig& cfg);

ComputationSubgraph computation_subgraph(const Graph& g, int u, int hops);

}  // namespace probe
