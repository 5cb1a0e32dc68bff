#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probe/explanation.hpp"
#include "probe/gnn.hpp"
#include "probe/rng.hpp"

namespace probe {

struct ExplainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IsolatedNodeError : ExplainError {
    using ExplainError::ExplainError;
};
struct TooFewSamplesError : ExplainError {
    using ExplainError::ExplainError;
};

// ---- random baselines ----

Explanation random_node_features(Rng& rng, int feature_dim, double p);
Explanation random_edges(Rng& rng, const ComputationSubgraph& sg, double p);

// ---- gradient methods ----

Explanation vanilla_grad(const GnnModel& model, const ComputationSubgraph& sg, double p);

struct IntegratedGradientsConfig {
    int steps = 50;
    double baseline_value = 0.0;  // x-tilde entries
};
Explanation integrated_gradients(const GnnModel& model, const ComputationSubgraph& sg,
                                 const IntegratedGradientsConfig& cfg, double p);

// ---- GraphLIME (HSIC Lasso surrogate) ----

struct GraphLimeArtifacts {
    double sigma_x = 1.0;
    double sigma_y = 1.0;
    std::vector<int> samples;          // global node ids, ascending
    std::vector<Vec> sample_values;    // per feature, the samples' values of that feature
    std::vector<Matrix> gram_raw;      // per feature, uncentered (unit diagonal)
    std::vector<Matrix> gram_centered; // per feature, double-centered + Frobenius-normalized
    Matrix output_gram_centered;       // L, centered + normalized
    Vec beta;                          // nonnegative coefficients
    double rho = 0.0;
    int sweeps_used = 0;
};

struct GraphLimeResult {
    Explanation explanation;
    GraphLimeArtifacts artifacts;
};

struct GraphLimeOptions {
    double rho = 0.01;
    // Bound-check protocol fixes the kernel widths and the output Gram matrix
    // to the original run's values so only K^(k) varies.
    std::optional<double> fixed_sigma_x;
    std::optional<double> fixed_sigma_y;
    const Matrix* fixed_output_gram = nullptr;
};

GraphLimeResult graphlime(const GnnModel& model, const ComputationSubgraph& sg, double p,
                          const GraphLimeOptions& opts = {});

// Nonnegative lasso on ||L - sum_k beta_k K_k||_F^2 / 2 + rho |beta|_1 by cyclic
// coordinate descent; converged when max coefficient change < 1e-8.
Vec hsic_lasso_solve(const std::vector<Matrix>& grams, const Matrix& output_gram, double rho,
                     int max_sweeps, double tol, int* sweeps_used = nullptr);

double hsic_objective(const std::vector<Matrix>& grams, const Matrix& output_gram, const Vec& beta,
                      double rho);

// ---- GraphMASK-style erasure function ----

struct ErasureLayer {
    Matrix w1;      // D x 2*H_{l-1}
    Matrix w2;      // 1 x D
    Vec ln_mean;    // mu^l, length D
    Vec ln_std;     // sigma^l, length D, entries > 0
    Vec baseline;   // alpha^l, length H_{l-1}
};

struct ErasureConfig {
    int hidden_dim = 16;  // D
    int epochs = 120;
    double learning_rate = 5e-3;
    double sparsity_weight = 0.01;  // lambda
    int max_train_nodes = 64;
    std::uint64_t seed = 0;
};

struct ErasureFunction {
    std::vector<ErasureLayer> layers;  // one per GNN layer
    ErasureConfig config;

    // z^l_{u,v} = W_2^l sp(LN^l(W_1^l q))
    double score(int layer, const Vec& q) const;
};

struct ErasureTrainStats {
    Vec loss_trace;
    double kl_initial = 0.0;
    double kl_final = 0.0;
};

ErasureFunction graphmask_train(const GnnModel& model, const Graph& graph,
                                const ErasureConfig& cfg, Rng& rng,
                                ErasureTrainStats* stats = nullptr);

// Per-layer raw z scores over incident edges; final layer drives the top-p mask.
Explanation graphmask_explain(const ErasureFunction& erasure, const GnnModel& model,
                              const ComputationSubgraph& sg, double p);

// ---- mask-optimization methods ----

struct MaskOptConfig {
    int steps = 300;
    double learning_rate = 0.01;
    double size_weight = 0.005;
    double entropy_weight = 0.1;
    // PGExplainer extras
    double temperature_start = 1.0;
    double temperature_end = 0.5;
    int sample_count = 16;
    int mlp_hidden = 16;
    int max_train_nodes = 32;
};

Explanation gnnexplainer(const GnnModel& model, const ComputationSubgraph& sg,
                         const MaskOptConfig& cfg, Rng& rng, double p);

struct PgExplainer {
    Matrix w1;  // hidden x 2*H_L
    Vec b1;
    Matrix w2;  // 1 x hidden
    double b2 = 0.0;
    double temperature = 1.0;

    double omega(const Vec& q) const;
};

PgExplainer pgexplainer_train(const GnnModel& model, const Graph& graph,
                              const std::vector<int>& train_nodes, const MaskOptConfig& cfg,
                              Rng& rng);

// Deterministic readout: edge score sigma(omega / temperature), epsilon
// integrated out at its mean 0.5.
Explanation pgexplainer_explain(const PgExplainer& pg, const GnnModel& model,
                                const ComputationSubgraph& sg, double p);

}  // namespace probe
