#pragma once

#include <optional>
#include <string>
#include <vector>

#include "probe/explainers.hpp"
#include "probe/gnn.hpp"
#include "probe/graph.hpp"
#include "probe/perturb.hpp"

namespace probe {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvDatasetSpec {
    std::string features_path;
    std::string edges_path;
    std::string labels_path;
    std::optional<int> sensitive_column;
    double train_ratio = 0.8;
};

struct ExperimentConfig {
    // dataset: exactly one of synthetic / csv
    std::optional<SyntheticConfig> synthetic;
    std::optional<CsvDatasetSpec> csv;

    // model
    std::vector<int> hidden_dims = {16, 16};
    std::uint64_t model_seed = 1;

    TrainConfig train;

    // explainers
    std::vector<std::string> methods = {
        "random_node_features", "random_edges",  "vanilla_grad",
        "integrated_gradients", "graphlime",     "graphmask",
        "gnnexplainer",         "pgexplainer",   "full_mask_control"};
    double top_p = 0.25;
    int k_perturbations = 10;
    PerturbationConfig perturbation;
    IntegratedGradientsConfig integrated_gradients;
    double graphlime_rho = 0.01;
    ErasureConfig graphmask;
    MaskOptConfig mask_opt;

    // evaluation
    bool compute_bounds = true;
    bool compute_metrics = true;
    int max_eval_nodes = 50;       // test nodes evaluated, ascending
    int group_pool_max = 40;       // pooled nodes for group fairness
    int group_pool_perturbations = 1;
    double verify_tol = 1e-9;

    std::string output_dir = "out";
    std::uint64_t global_seed = 1;
    int workers = 1;

    static const std::vector<std::string>& known_methods();
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json() const;
    void validate() const;

    Graph build_graph() const;
};

}  // namespace probe
