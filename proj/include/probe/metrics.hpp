#pragma once

#include <string>
#include <vector>

#include "probe/explanation.hpp"
#include "probe/gnn.hpp"
#include "probe/perturb.hpp"

namespace probe {

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyGroupError : MetricError {
    using MetricError::MetricError;
};

struct MetricValue {
    std::string name;
    double value = 0.0;
    int node = -1;
    std::string method_tag;
    int k_size = 0;
};

// (1/|K|) sum over members of ||f(G_u') - f(t(E_u, G_u'))||_2
MetricValue unfaithfulness(const GnnModel& model, const Explanation& e,
                           const PerturbationSet& set);

// normalized l1 distance between binary masks; edge masks compared over the
// union of the two incident-edge sets, kind=both averages the two parts
double mask_distance(const Explanation& a, const Explanation& b);

MetricValue instability(const Explanation& original, const Explanation& perturbed);
MetricValue counterfactual_fairness_mismatch(const Explanation& original,
                                             const Explanation& counterfactual);

// SP = |Pr(yhat=1 | s=0) - Pr(yhat=1 | s=1)|
double statistical_parity(const std::vector<int>& predicted_labels,
                          const std::vector<double>& sensitive_values);

// Pooled perturbation sets spanning both sensitive groups; the explanation's
// masks are applied to every member.
struct GroupFairnessInputs {
    std::vector<ComputationSubgraph> members;  // each member's own subgraph view
    std::vector<double> sensitive_values;      // target's s per member
    std::vector<int> labels;                   // true label per member
};

MetricValue group_fairness_mismatch(const GnnModel& model, const Explanation& e,
                                    const GroupFairnessInputs& pool);

double pearson(const Vec& xs, const Vec& ys);
double spearman(const Vec& xs, const Vec& ys);

struct Aggregate {
    double mean = 0.0;
    double standard_error = 0.0;  // sample stddev / sqrt(n)
    int count = 0;
};
Aggregate aggregate(const Vec& values);

}  // namespace probe
