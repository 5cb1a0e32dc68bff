#pragma once

#include <optional>
#include <string>
#include <vector>

#include "probe/explainers.hpp"
#include "probe/explanation.hpp"
#include "probe/lipschitz.hpp"
#include "probe/metrics.hpp"
#include "probe/perturb.hpp"

namespace probe {

struct BoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularNoiseMatrixError : BoundError {
    using BoundError::BoundError;
};
// Raised when the computed inputs step outside the theorem's validity (for
// the GraphLIME bound: non-positive tr(L-bar)); never silently clamped.
struct TheoremInapplicableError : BoundError {
    using BoundError::BoundError;
};

enum class Theorem { T1_node, T1_edge, T2, T3, T4, T5, T6, T7, T8 };
std::string to_string(Theorem t);

struct BoundValue {
    Theorem theorem = Theorem::T1_node;
    double value = 0.0;
    std::string inputs_digest;
    std::optional<double> worst_case;
    bool ill_conditioned_warning = false;
};

struct VerificationRecord {
    int node = -1;
    std::string method_tag;
    std::string metric_name;
    Theorem theorem = Theorem::T1_node;
    double metric_value = 0.0;
    double bound_value = 0.0;
    double slack = 0.0;
    bool violated = false;
    double tol = 1e-9;
};

// Theorem 1: node branch gamma11 (1+|K|)/|K| ||(1-r) o x_u||_2, edge branch
// gamma12 (1+|K|)/|K| ||sum of dropped neighbors' features||_2; kind=both sums
// the branches.
BoundValue faithfulness_bound(const LipschitzProfile& profile, const Explanation& e,
                              const ComputationSubgraph& sg, int k_size);

// Theorem 2: gamma3 ||x' - x||_p with gamma3 = ||y - yhat||_p ||W_fc^T||_p
// prod_l ||W_a^l||_p ||(W_a^1)^T||_p. yhat is the original node's prediction.
BoundValue grad_stability_bound(const LipschitzProfile& profile, const Vec& prediction_error,
                                const Vec& x, const Vec& x_perturbed);

// Theorem 5: gamma3 (||x^s - x|| = 1).
BoundValue grad_cf_bound(const LipschitzProfile& profile, const Vec& prediction_error);

// Theorems 3/6: gamma4^l ||q' - q||_2 with gamma4^l = C_SP C_LN^l ||W2||_2 ||W1||_2.
double erasure_layer_gamma(const ErasureFunction& erasure, int layer);
BoundValue graphmask_bound(const ErasureFunction& erasure, const Vec& q, const Vec& q_other,
                           int layer, bool counterfactual = false);

// Theorems 4/7. W_ij = exp(-|2 eta (x_i - x_j)|/(2 sigma_x^2)), unit diagonal;
// bound = gamma2 * n * (e^T W^-1 e - 1) with gamma2 = tr(L-bar) tr((K_raw^(k))^-1).
enum class GraphLimeVariant { Stability, Counterfactual };
struct GraphLimeBoundInputs {
    const GraphLimeArtifacts* artifacts = nullptr;
    int feature = 0;   // k, the perturbed feature
    double eta = 0.0;  // noise on feature k (stability) or +/-1 (counterfactual)
};
BoundValue graphlime_bound(const GraphLimeBoundInputs& in, double sigma_x,
                           GraphLimeVariant variant);

// max_max-norm residual of the last accepted inversion, for the acceptance gate
struct GraphLimeBoundDiagnostics {
    double w_inverse_residual = 0.0;
    double k_inverse_residual = 0.0;
    double w_condition = 0.0;
    double k_condition = 0.0;
    double c_value = 0.0;
    double trace_lbar = 0.0;
};
BoundValue graphlime_bound(const GraphLimeBoundInputs& in, double sigma_x,
                           GraphLimeVariant variant, GraphLimeBoundDiagnostics& diag);

// Theorem 8. The difference reading follows the spec's primary decision; the
// label reading is the sum-of-model-errors form the proof machinery supports
// (true labels, 0/1 errors) and is the sound one for the argmax SP metric.
enum class GroupFairnessReading { Difference, Label };
BoundValue group_fairness_bound(const GnnModel& model, const Explanation& e,
                                const GroupFairnessInputs& pool,
                                GroupFairnessReading reading = GroupFairnessReading::Difference);

// max over K of the per-member softmax gap under this explanation
double worst_case_bound(const GnnModel& model, const PerturbationSet& set, const Explanation& e);

constexpr double kSoftmaxRangeBound = 1.4142135623730951;  // sqrt(2)

VerificationRecord verify(const MetricValue& metric, const BoundValue& bound, double tol = 1e-9);

}  // namespace probe
