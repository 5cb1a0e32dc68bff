#include "probe/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace probe {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_methods() {
    static const std::vector<std::string> k = {
        "random_node_features", "random_edges", "vanilla_grad", "integrated_gradients",
        "graphlime",            "graphmask",    "gnnexplainer", "pgexplainer",
        "full_mask_control"};
    return k;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
    }
    reject_unknown(j, {"dataset", "model", "train", "explainers", "evaluation", "output_dir",
                       "seed", "workers"},
                   "config root");
    ExperimentConfig cfg;

    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        reject_unknown(d, {"synthetic", "csv"}, "dataset");
        if (d.contains("synthetic") && d.contains("csv"))
            throw ConfigError("dataset must be synthetic or csv, not both");
        if (d.contains("synthetic")) {
            const json& s = d["synthetic"];
            reject_unknown(s,
                           {"n_per_class", "feature_dim", "class_count", "intra_edge_prob",
                            "inter_edge_prob", "class_mean_shift", "sensitive_bias", "seed",
                            "train_ratio"},
                           "dataset.synthetic");
            SyntheticConfig sc;
            read_if(s, "n_per_class", sc.n_per_class);
            read_if(s, "feature_dim", sc.feature_dim);
            read_if(s, "class_count", sc.class_count);
            read_if(s, "intra_edge_prob", sc.intra_edge_prob);
            read_if(s, "inter_edge_prob", sc.inter_edge_prob);
            read_if(s, "class_mean_shift", sc.class_mean_shift);
            read_if(s, "sensitive_bias", sc.sensitive_bias);
            read_if(s, "seed", sc.seed);
            read_if(s, "train_ratio", sc.train_ratio);
            cfg.synthetic = sc;
        }
        if (d.contains("csv")) {
            const json& c = d["csv"];
            reject_unknown(c, {"features", "edges", "labels", "sensitive_column", "train_ratio"},
                           "dataset.csv");
            CsvDatasetSpec spec;
            spec.features_path = c.at("features").get<std::string>();
            spec.edges_path = c.at("edges").get<std::string>();
            spec.labels_path = c.at("labels").get<std::string>();
            if (c.contains("sensitive_column")) spec.sensitive_column = c["sensitive_column"].get<int>();
            read_if(c, "train_ratio", spec.train_ratio);
            cfg.csv = spec;
        }
    }
    if (!cfg.synthetic && !cfg.csv) cfg.synthetic = SyntheticConfig{};

    if (j.contains("model")) {
        const json& m = j["model"];
        reject_unknown(m, {"hidden_dims", "seed"}, "model");
        read_if(m, "hidden_dims", cfg.hidden_dims);
        read_if(m, "seed", cfg.model_seed);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t, {"learning_rate", "weight_decay", "epochs", "seed"}, "train");
        read_if(t, "learning_rate", cfg.train.learning_rate);
        read_if(t, "weight_decay", cfg.train.weight_decay);
        read_if(t, "epochs", cfg.train.epochs);
        read_if(t, "seed", cfg.train.seed);
    }
    if (j.contains("explainers")) {
        const json& e = j["explainers"];
        reject_unknown(e,
                       {"methods", "top_p", "k_perturbations", "perturbation",
                        "integrated_gradients", "graphlime_rho", "graphmask", "mask_opt"},
                       "explainers");
        read_if(e, "methods", cfg.methods);
        read_if(e, "top_p", cfg.top_p);
        read_if(e, "k_perturbations", cfg.k_perturbations);
        if (e.contains("perturbation")) {
            const json& p = e["perturbation"];
            reject_unknown(p,
                           {"feature_noise_prob", "noise_sigma", "edge_rewire_prob",
                            "require_same_prediction", "max_resample_attempts"},
                           "explainers.perturbation");
            read_if(p, "feature_noise_prob", cfg.perturbation.feature_noise_prob);
            read_if(p, "noise_sigma", cfg.perturbation.noise_sigma);
            read_if(p, "edge_rewire_prob", cfg.perturbation.edge_rewire_prob);
            read_if(p, "require_same_prediction", cfg.perturbation.require_same_prediction);
            read_if(p, "max_resample_attempts", cfg.perturbation.max_resample_attempts);
        }
        if (e.contains("integrated_gradients")) {
            const json& ig = e["integrated_gradients"];
            reject_unknown(ig, {"steps", "baseline_value"}, "explainers.integrated_gradients");
            read_if(ig, "steps", cfg.integrated_gradients.steps);
            read_if(ig, "baseline_value", cfg.integrated_gradients.baseline_value);
        }
        read_if(e, "graphlime_rho", cfg.graphlime_rho);
        if (e.contains("graphmask")) {
            const json& gm = e["graphmask"];
            reject_unknown(gm,
                           {"hidden_dim", "epochs", "learning_rate", "sparsity_weight",
                            "max_train_nodes", "seed"},
                           "explainers.graphmask");
            read_if(gm, "hidden_dim", cfg.graphmask.hidden_dim);
            read_if(gm, "epochs", cfg.graphmask.epochs);
            read_if(gm, "learning_rate", cfg.graphmask.learning_rate);
            read_if(gm, "sparsity_weight", cfg.graphmask.sparsity_weight);
            read_if(gm, "max_train_nodes", cfg.graphmask.max_train_nodes);
            read_if(gm, "seed", cfg.graphmask.seed);
        }
        if (e.contains("mask_opt")) {
            const json& mo = e["mask_opt"];
            reject_unknown(mo,
                           {"steps", "learning_rate", "size_weight", "entropy_weight",
                            "temperature_start", "temperature_end", "sample_count", "mlp_hidden",
                            "max_train_nodes"},
                           "explainers.mask_opt");
            read_if(mo, "steps", cfg.mask_opt.steps);
            read_if(mo, "learning_rate", cfg.mask_opt.learning_rate);
            read_if(mo, "size_weight", cfg.mask_opt.size_weight);
            read_if(mo, "entropy_weight", cfg.mask_opt.entropy_weight);
            read_if(mo, "temperature_start", cfg.mask_opt.temperature_start);
            read_if(mo, "temperature_end", cfg.mask_opt.temperature_end);
            read_if(mo, "sample_count", cfg.mask_opt.sample_count);
            read_if(mo, "mlp_hidden", cfg.mask_opt.mlp_hidden);
            read_if(mo, "max_train_nodes", cfg.mask_opt.max_train_nodes);
        }
    }
    if (j.contains("evaluation")) {
        const json& ev = j["evaluation"];
        reject_unknown(ev,
                       {"compute_bounds", "compute_metrics", "max_eval_nodes", "group_pool_max",
                        "group_pool_perturbations", "verify_tol"},
                       "evaluation");
        read_if(ev, "compute_bounds", cfg.compute_bounds);
        read_if(ev, "compute_metrics", cfg.compute_metrics);
        read_if(ev, "max_eval_nodes", cfg.max_eval_nodes);
        read_if(ev, "group_pool_max", cfg.group_pool_max);
        read_if(ev, "group_pool_perturbations", cfg.group_pool_perturbations);
        read_if(ev, "verify_tol", cfg.verify_tol);
    }
    read_if(j, "output_dir", cfg.output_dir);
    read_if(j, "seed", cfg.global_seed);
    read_if(j, "workers", cfg.workers);
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void ExperimentConfig::validate() const {
    if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("top_p must lie in (0,1]");
    if (k_perturbations < 1) throw ConfigError("k_perturbations must be >= 1");
    if (hidden_dims.empty()) throw ConfigError("model needs at least one hidden layer");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (methods.empty()) throw ConfigError("explainers.methods must not be empty");
    const auto& known = known_methods();
    for (const auto& m : methods) {
        if (std::find(known.begin(), known.end(), m) == known.end()) {
            std::string valid;
            for (const auto& k : known) valid += (valid.empty() ? "" : ", ") + k;
            throw ConfigError("unknown method '" + m + "'; valid names: " + valid);
        }
    }
    try {
        perturbation.validate();
    } catch (const std::exception& ex) {
        throw ConfigError(ex.what());
    }
}

std::string ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    if (synthetic) {
        j["dataset"]["synthetic"] = {{"n_per_class", synthetic->n_per_class},
                                     {"feature_dim", synthetic->feature_dim},
                                     {"class_count", synthetic->class_count},
                                     {"intra_edge_prob", synthetic->intra_edge_prob},
                                     {"inter_edge_prob", synthetic->inter_edge_prob},
                                     {"class_mean_shift", synthetic->class_mean_shift},
                                     {"sensitive_bias", synthetic->sensitive_bias},
                                     {"seed", synthetic->seed},
                                     {"train_ratio", synthetic->train_ratio}};
    }
    if (csv) {
        j["dataset"]["csv"] = {{"features", csv->features_path},
                               {"edges", csv->edges_path},
                               {"labels", csv->labels_path},
                               {"train_ratio", csv->train_ratio}};
        if (csv->sensitive_column) j["dataset"]["csv"]["sensitive_column"] = *csv->sensitive_column;
    }
    j["model"] = {{"hidden_dims", hidden_dims}, {"seed", model_seed}};
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"weight_decay", train.weight_decay},
                  {"epochs", train.epochs},
                  {"seed", train.seed}};
    j["explainers"] = {{"methods", methods},
                       {"top_p", top_p},
                       {"k_perturbations", k_perturbations},
                       {"graphlime_rho", graphlime_rho}};
    j["explainers"]["perturbation"] = {{"feature_noise_prob", perturbation.feature_noise_prob},
                                       {"noise_sigma", perturbation.noise_sigma},
                                       {"edge_rewire_prob", perturbation.edge_rewire_prob},
                                       {"require_same_prediction", perturbation.require_same_prediction},
                                       {"max_resample_attempts", perturbation.max_resample_attempts}};
    j["evaluation"] = {{"compute_bounds", compute_bounds},
                       {"compute_metrics", compute_metrics},
                       {"max_eval_nodes", max_eval_nodes},
                       {"group_pool_max", group_pool_max},
                       {"group_pool_perturbations", group_pool_perturbations},
                       {"verify_tol", verify_tol}};
    j["output_dir"] = output_dir;
    j["seed"] = global_seed;
    j["workers"] = workers;
    return j.dump(2);
}

Graph ExperimentConfig::build_graph() const {
    if (csv) {
        SplitSpec split;
        split.train_ratio = csv->train_ratio;
        split.seed = global_seed;
        return load_graph(csv->features_path, csv->edges_path, csv->labels_path,
                          csv->sensitive_column, split);
    }
    return generate_synthetic(*synthetic);
}

}  // namespace probe
