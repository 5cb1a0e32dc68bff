#include "probe/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "probe/gnn.hpp"

namespace probe {

void PerturbationConfig::validate() const {
    auto in01 = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in01(feature_noise_prob) || !in01(edge_rewire_prob))
        throw GraphError("perturbation probabilities must lie in [0,1]");
    if (noise_sigma < 0.0) throw GraphError("noise_sigma must be non-negative");
    if (max_resample_attempts <= 0) throw GraphError("max_resample_attempts must be positive");
}

PerturbedNode perturb_node(const ComputationSubgraph& sg, const PerturbationConfig& cfg,
                           std::optional<int> sensitive_index, Rng& rng) {
    cfg.validate();
    PerturbedNode out{sg, {}};
    ComputationSubgraph& psg = out.subgraph;
    NoiseRecord& rec = out.record;
    const int m = sg.features.cols;
    const int lt = psg.local_index(psg.target);
    rec.tau.assign(m, 0.0);
    rec.perturbed.assign(m, 0);

    for (int j = 0; j < m; ++j) {
        if (sensitive_index && *sensitive_index == j) continue;
        if (rng.uniform() < cfg.feature_noise_prob) {
            const double tau = rng.normal(0.0, cfg.noise_sigma);
            rec.tau[j] = tau;
            rec.perturbed[j] = 1;
            psg.features(lt, j) += tau;
        }
    }

    if (cfg.edge_rewire_prob > 0.0) {
        const std::vector<int> incident = sg.target_neighbors();
        std::vector<int> non_neighbors;
        for (int v : sg.nodes) {
            if (v == sg.target) continue;
            if (!std::binary_search(incident.begin(), incident.end(), v)) non_neighbors.push_back(v);
        }
        for (int v : incident) {
            if (rng.uniform() < cfg.edge_rewire_prob) {
                const Edge gone(sg.target, v);
                auto it = std::find(psg.edges.begin(), psg.edges.end(), gone);
                if (it != psg.edges.end()) {
                    psg.edges.erase(it);
                    rec.removed_edges.push_back(gone);
                }
            }
            if (!non_neighbors.empty() && rng.uniform() < cfg.edge_rewire_prob) {
                const int w = non_neighbors[rng.below(non_neighbors.size())];
                const Edge fresh(sg.target, w);
                if (std::find(psg.edges.begin(), psg.edges.end(), fresh) == psg.edges.end()) {
                    psg.edges.push_back(fresh);
                    rec.added_edges.push_back(fresh);
                }
            }
        }
        std::sort(psg.edges.begin(), psg.edges.end());
    }
    return out;
}

PerturbationSet perturbation_set(const ComputationSubgraph& sg, const GnnModel& model, int k,
                                 const PerturbationConfig& cfg, std::optional<int> sensitive_index,
                                 Rng& rng) {
    if (k < 1) throw GraphError("perturbation_set: k must be >= 1");
    PerturbationSet set;
    set.original = sg;
    int original_pred = -1;
    if (cfg.require_same_prediction) original_pred = forward(model, sg).predicted_class();
    for (int i = 0; i < k; ++i) {
        if (!cfg.require_same_prediction) {
            PerturbedNode p = perturb_node(sg, cfg, sensitive_index, rng);
            set.perturbed.push_back(std::move(p.subgraph));
            set.noise_records.push_back(std::move(p.record));
            continue;
        }
        bool accepted = false;
        for (int attempt = 0; attempt < cfg.max_resample_attempts; ++attempt) {
            PerturbedNode p = perturb_node(sg, cfg, sensitive_index, rng);
            if (forward(model, p.subgraph).predicted_class() == original_pred) {
                set.perturbed.push_back(std::move(p.subgraph));
                set.noise_records.push_back(std::move(p.record));
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw ResampleExhaustedError("no same-prediction perturbation found for node " +
                                         std::to_string(sg.target) + " in " +
                                         std::to_string(cfg.max_resample_attempts) + " attempts");
    }
    return set;
}

ComputationSubgraph counterfactual_node(const ComputationSubgraph& sg,
                                        std::optional<int> sensitive_index) {
    if (!sensitive_index) throw GraphError("counterfactual_node: sensitive index unset");
    const int s = *sensitive_index;
    if (s < 0 || s >= sg.features.cols) throw GraphError("sensitive index out of range");
    ComputationSubgraph out = sg;
    const int lt = out.local_index(out.target);
    const double v = out.features(lt, s);
    if (v != 0.0 && v != 1.0) throw NonBinarySensitiveError("sensitive feature is not binary");
    out.features(lt, s) = 1.0 - v;
    return out;
}

}  // namespace probe
