#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "probe/bounds.hpp"
#include "probe/config.hpp"

namespace probe {

// One (node, method) cell of the evaluation grid.
struct CellResult {
    int node = -1;
    std::string method;
    std::optional<double> unfaithfulness;
    std::optional<double> instability;        // mean over the k perturbed members
    std::optional<double> cf_mismatch;
    std::optional<double> group_fairness;
    std::optional<double> cf_prediction_gap;  // ||f(G_u) - f(G_us)||_2 side channel
    std::optional<double> t1_bound;
    std::optional<double> t8_bound_difference;
    std::optional<double> t8_bound_label;
    std::optional<double> worst_case;
    std::vector<std::string> skips;
    std::vector<VerificationRecord> records;
};

// Aggregated theorem-level protocol checks (T2-T7).
struct TheoremCheck {
    Theorem theorem = Theorem::T2;
    int checked = 0;
    int violations = 0;
    int skipped = 0;
    double min_slack = 0.0;
    std::vector<VerificationRecord> records;
    std::vector<std::string> skip_reasons;
};

struct MethodAggregate {
    std::string method;
    std::string metric;
    double mean = 0.0;
    double standard_error = 0.0;
    int count = 0;
};

struct ReliabilityReport {
    std::string config_echo;
    std::uint64_t global_seed = 0;
    int workers = 1;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<int> eval_nodes;
    std::vector<CellResult> cells;
    std::vector<TheoremCheck> theorem_checks;
    std::vector<MethodAggregate> aggregates;
    // correlation rows: name -> {pearson, spearman}
    std::map<std::string, std::pair<double, double>> correlations;
    int violation_count = 0;
    int record_count = 0;

    std::string to_json() const;
    static ReliabilityReport from_json(const std::string& text);
};

struct RunArtifacts {
    Graph graph;
    GnnModel model;
    Vec loss_trace;
    LipschitzProfile profile;
    std::optional<ErasureFunction> erasure;
    std::optional<PgExplainer> pg;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

RunArtifacts prepare_run(const ExperimentConfig& cfg, const std::optional<GnnModel>& checkpoint);

// One explanation by method name; throws ExplainError subtypes for skips.
Explanation explain_node(const std::string& method, const RunArtifacts& art,
                         const ExperimentConfig& cfg, const ComputationSubgraph& sg,
                         std::uint64_t purpose_salt);

ReliabilityReport run_evaluation(const ExperimentConfig& cfg,
                                 const std::optional<GnnModel>& checkpoint = std::nullopt);

// accuracy over a mask
double masked_accuracy(const GnnModel& model, const Graph& g, const std::vector<bool>& mask);

}  // namespace probe
