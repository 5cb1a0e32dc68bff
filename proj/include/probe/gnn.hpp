#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probe/graph.hpp"
#include "probe/linalg.hpp"

namespace probe {

struct GnnError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergenceError : GnnError {
    int epoch = -1;
    DivergenceError(const std::string& msg, int ep) : GnnError(msg), epoch(ep) {}
};

// Softplus message-passing layer: h^l = sp(W_a h^{l-1} + W_n sum_nbr h^{l-1})
struct GnnLayer {
    Matrix w_self;      // W_a^l, H_l x H_{l-1}
    Matrix w_neighbor;  // W_n^l, H_l x H_{l-1}
};

class GnnModel {
public:
    GnnModel() = default;
    GnnModel(int input_dim, const std::vector<int>& hidden_dims, int class_count,
             std::uint64_t init_seed);

    int layer_count() const { return static_cast<int>(layers_.size()); }
    int input_dim() const { return input_dim_; }
    int class_count() const { return class_count_; }
    int hidden_dim(int l) const { return layers_[l].w_self.rows; }  // H_{l+1}

    const GnnLayer& layer(int l) const { return layers_[l]; }
    GnnLayer& layer(int l) { return layers_[l]; }
    const Matrix& classifier_weight() const { return w_fc_; }
    Matrix& classifier_weight() { return w_fc_; }
    const Vec& classifier_bias() const { return b_; }
    Vec& classifier_bias() { return b_; }

    void check_shapes() const;

    std::string to_json() const;
    static GnnModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static GnnModel load(const std::string& path);

    std::uint64_t init_seed = 0;

private:
    int input_dim_ = 0;
    int class_count_ = 0;
    std::vector<GnnLayer> layers_;
    Matrix w_fc_;  // C x H_L
    Vec b_;        // C
};

// Per-node intermediates of one forward pass over a subgraph.
struct ForwardTrace {
    std::vector<Matrix> pre_activations;  // per layer, |nodes| x H_l
    std::vector<Matrix> hidden;           // per layer, |nodes| x H_l (hidden[0] = sp(a^1))
    std::vector<Matrix> neighbor_sums;    // per layer, aggregated inputs feeding layer l
    Vec logits;                           // target only
    Vec probabilities;                    // softmax, target only
    int target_local = 0;

    int predicted_class() const;
};

ForwardTrace forward(const GnnModel& model, const ComputationSubgraph& sg);

// Softmax probabilities for an arbitrary node of the subgraph.
Vec forward_probabilities(const GnnModel& model, const ComputationSubgraph& sg, int global_node);

struct TrainConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    int epochs = 1000;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct TrainResult {
    GnnModel model;
    Vec loss_trace;  // mean train CE per epoch
};

// Full-batch Adam on mean cross-entropy over train-mask nodes; manual
// reverse-mode derivatives of the fixed architecture.
TrainResult train(const GnnModel& init, const Graph& graph, const TrainConfig& cfg);

// Weight gradients of mean train CE (exposed for finite-difference checks).
struct WeightGradients {
    std::vector<GnnLayer> layers;
    Matrix w_fc;
    Vec b;
};
WeightGradients loss_gradients(const GnnModel& model, const Graph& graph);
double mean_train_ce(const GnnModel& model, const Graph& graph);

// CE gradient w.r.t. the target's features holding neighbor hidden states
// fixed at the trace values (the closed-form self-path chain). Optional
// probability override fixes the softmax prefactor, used by the stability
// bound protocol where the original node's prediction stands in for the
// perturbed one.
Vec input_gradient(const GnnModel& model, const ComputationSubgraph& sg, int label,
                   const std::optional<Vec>& probability_override = std::nullopt);

// Same chain evaluated at explicit target features x against frozen
// neighbor aggregates taken from `base` (must come from the same subgraph).
Vec self_path_gradient(const GnnModel& model, const ForwardTrace& base, const Vec& x, int label,
                       const std::optional<Vec>& probability_override = std::nullopt);

// CE of the self-path forward at explicit x (finite-difference oracle target).
double self_path_ce(const GnnModel& model, const ForwardTrace& base, const Vec& x, int label);

// Gradient of the class-c logit along the same frozen-neighbor chain
// (integrated-gradients attribution target).
Vec self_path_logit_gradient(const GnnModel& model, const ForwardTrace& base, const Vec& x,
                             int class_index);
double self_path_logit(const GnnModel& model, const ForwardTrace& base, const Vec& x,
                       int class_index);

// q^l_{u,v} = concat(h_u^l, h_v^l); layer 0 is the raw features.
Vec concatenated_embedding(const GnnModel& model, const ComputationSubgraph& sg,
                           const ForwardTrace& trace, int v_global, int layer);

}  // namespace probe
