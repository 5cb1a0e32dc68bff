#pragma once

#include <cstdint>
#include <vector>

#include "probe/graph.hpp"
#include "probe/rng.hpp"

namespace probe {

struct PerturbationConfig {
    double feature_noise_prob = 0.1;  // per-dimension
    double noise_sigma = 1.0;         // stddev of the Gaussian tau
    double edge_rewire_prob = 0.0;    // p_r; 0 in bound-verification runs
    bool require_same_prediction = false;
    int max_resample_attempts = 100;

    void validate() const;
};

// Exact record of one perturbation so bounds can be recomputed from it.
struct NoiseRecord {
    Vec tau;                              // length M, zero where not perturbed
    std::vector<std::uint8_t> perturbed;  // per-dimension flags
    std::vector<Edge> removed_edges;
    std::vector<Edge> added_edges;

    bool any_feature_noise() const {
        for (auto f : perturbed)
            if (f) return true;
        return false;
    }
};

struct PerturbedNode {
    ComputationSubgraph subgraph;
    NoiseRecord record;
};

// Gaussian noise on the target's features (sensitive column excluded) and
// optional incident-edge rewiring. Non-target rows are never touched.
PerturbedNode perturb_node(const ComputationSubgraph& sg, const PerturbationConfig& cfg,
                           std::optional<int> sensitive_index, Rng& rng);

struct PerturbationSet {
    ComputationSubgraph original;
    std::vector<ComputationSubgraph> perturbed;  // k members
    std::vector<NoiseRecord> noise_records;      // aligned with perturbed

    int k_size() const { return static_cast<int>(perturbed.size()) + 1; }  // |K|, original included
};

struct ResampleExhaustedError : GraphError {
    using GraphError::GraphError;
};

class GnnModel;  // gnn.hpp

// Original plus k perturbations; with require_same_prediction each member is
// rejection-sampled until its argmax matches the original's.
PerturbationSet perturbation_set(const ComputationSubgraph& sg, const GnnModel& model, int k,
                                 const PerturbationConfig& cfg, std::optional<int> sensitive_index,
                                 Rng& rng);

// Target's sensitive feature flipped, everything else identical.
ComputationSubgraph counterfactual_node(const ComputationSubgraph& sg,
                                        std::optional<int> sensitive_index);

}  // namespace probe
