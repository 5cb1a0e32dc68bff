#include "probe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace probe {

namespace {

// purpose salts for derived RNG streams
constexpr std::uint64_t kPurposePerturb = 0x01;
constexpr std::uint64_t kPurposeExplainBase = 0x100;
constexpr std::uint64_t kPurposeGradPairs = 0x02;
constexpr std::uint64_t kPurposeGraphLime = 0x03;
constexpr std::uint64_t kPurposeGroupPool = 0x04;

std::uint64_t method_salt(const std::string& method) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : method) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return kPurposeExplainBase ^ h;
}

Explanation full_mask_control(const ComputationSubgraph& sg, double p) {
    Explanation e;
    e.method_tag = "full_mask_control";
    e.node = sg.target;
    e.top_p = p;
    const auto nbrs = sg.target_neighbors();
    e.kind = nbrs.empty() ? ExplanationKind::NodeFeature : ExplanationKind::Both;
    e.node_scores.assign(sg.features.cols, 1.0);
    e.node_mask.assign(sg.features.cols, 1);
    if (!nbrs.empty()) {
        e.edge_neighbors = nbrs;
        e.edge_scores.assign(nbrs.size(), 1.0);
        e.edge_mask.assign(nbrs.size(), 1);
    }
    return e;
}

}  // namespace

double masked_accuracy(const GnnModel& model, const Graph& g, const std::vector<bool>& mask) {
    int correct = 0, total = 0;
    const int hops = model.layer_count();
    for (int u = 0; u < g.node_count; ++u) {
        if (!mask[u]) continue;
        const ComputationSubgraph sg = computation_subgraph(g, u, hops);
        const ForwardTrace tr = forward(model, sg);
        ++total;
        if (tr.predicted_class() == g.labels[u]) ++correct;
    }
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
}

RunArtifacts prepare_run(const ExperimentConfig& cfg, const std::optional<GnnModel>& checkpoint) {
    RunArtifacts art{cfg.build_graph(), {}, {}, {}, {}, {}, 0.0, 0.0};
    if (checkpoint) {
        art.model = *checkpoint;
        if (art.model.input_dim() != art.graph.feature_dim)
            throw ConfigError("checkpoint input dim does not match dataset");
    } else {
        GnnModel init(art.graph.feature_dim, cfg.hidden_dims, art.graph.class_count,
                      cfg.model_seed);
        TrainResult tr = train(init, art.graph, cfg.train);
        art.model = std::move(tr.model);
        art.loss_trace = std::move(tr.loss_trace);
    }
    art.profile = lipschitz_profile(art.model);
    art.train_accuracy = masked_accuracy(art.model, art.graph, art.graph.train_mask);
    art.test_accuracy = masked_accuracy(art.model, art.graph, art.graph.test_mask);

    const bool want_graphmask =
        std::find(cfg.methods.begin(), cfg.methods.end(), "graphmask") != cfg.methods.end();
    const bool want_pg =
        std::find(cfg.methods.begin(), cfg.methods.end(), "pgexplainer") != cfg.methods.end();
    if (want_graphmask) {
        Rng rng = node_stream(cfg.global_seed, 0, method_salt("graphmask_train"));
        ErasureConfig ec = cfg.graphmask;
        art.erasure = graphmask_train(art.model, art.graph, ec, rng);
    }
    if (want_pg) {
        Rng rng = node_stream(cfg.global_seed, 0, method_salt("pgexplainer_train"));
        std::vector<int> train_nodes;
        for (int u = 0; u < art.graph.node_count; ++u)
            if (art.graph.train_mask[u]) train_nodes.push_back(u);
        art.pg = pgexplainer_train(art.model, art.graph, train_nodes, cfg.mask_opt, rng);
    }
    return art;
}

Explanation explain_node(const std::string& method, const RunArtifacts& art,
                         const ExperimentConfig& cfg, const ComputationSubgraph& sg,
                         std::uint64_t purpose_salt) {
    Rng rng = node_stream(cfg.global_seed, sg.target, method_salt(method) ^ purpose_salt);
    Explanation e;
    if (method == "random_node_features") {
        e = random_node_features(rng, sg.features.cols, cfg.top_p);
        e.node = sg.target;
    } else if (method == "random_edges") {
        e = random_edges(rng, sg, cfg.top_p);
    } else if (method == "vanilla_grad") {
        e = vanilla_grad(art.model, sg, cfg.top_p);
    } else if (method == "integrated_gradients") {
        e = integrated_gradients(art.model, sg, cfg.integrated_gradients, cfg.top_p);
    } else if (method == "graphlime") {
        GraphLimeOptions opts;
        opts.rho = cfg.graphlime_rho;
        e = graphlime(art.model, sg, cfg.top_p, opts).explanation;
    } else if (method == "graphmask") {
        if (!art.erasure) throw ExplainError("graphmask erasure not trained");
        e = graphmask_explain(*art.erasure, art.model, sg, cfg.top_p);
    } else if (method == "gnnexplainer") {
        e = gnnexplainer(art.model, sg, cfg.mask_opt, rng, cfg.top_p);
    } else if (method == "pgexplainer") {
        if (!art.pg) throw ExplainError("pgexplainer not trained");
        e = pgexplainer_explain(*art.pg, art.model, sg, cfg.top_p);
    } else if (method == "full_mask_control") {
        e = full_mask_control(sg, cfg.top_p);
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }
    return e;
}

namespace {

GroupFairnessInputs build_group_pool(const RunArtifacts& art, const ExperimentConfig& cfg) {
    GroupFairnessInputs pool;
    if (!art.graph.sensitive_index) return pool;
    const int hops = art.model.layer_count();
    const int s = *art.graph.sensitive_index;
    int taken = 0;
    for (int u = 0; u < art.graph.node_count && taken < cfg.group_pool_max; ++u) {
        if (!art.graph.test_mask[u]) continue;
        ++taken;
        ComputationSubgraph sg = computation_subgraph(art.graph, u, hops);
        const double sv = art.graph.features(u, s);
        pool.members.push_back(sg);
        pool.sensitive_values.push_back(sv);
        pool.labels.push_back(art.graph.labels[u]);
        if (cfg.group_pool_perturbations > 0) {
            Rng rng = node_stream(cfg.global_seed, u, kPurposeGroupPool);
            PerturbationConfig pc = cfg.perturbation;
            pc.require_same_prediction = false;
            for (int i = 0; i < cfg.group_pool_perturbations; ++i) {
                PerturbedNode p = perturb_node(sg, pc, art.graph.sensitive_index, rng);
                pool.members.push_back(std::move(p.subgraph));
                pool.sensitive_values.push_back(sv);
                pool.labels.push_back(art.graph.labels[u]);
            }
        }
    }
    return pool;
}

struct NodeWork {
    std::vector<CellResult> cells;
};

NodeWork evaluate_node(int u, const RunArtifacts& art, const ExperimentConfig& cfg,
                       const GroupFairnessInputs& pool) {
    NodeWork work;
    const int hops = art.model.layer_count();
    const ComputationSubgraph sg = computation_subgraph(art.graph, u, hops);

    // shared perturbation set
    std::optional<PerturbationSet> pert;
    std::string pert_failure;
    {
        Rng rng = node_stream(cfg.global_seed, u, kPurposePerturb);
        try {
            pert = perturbation_set(sg, art.model, cfg.k_perturbations, cfg.perturbation,
                                    art.graph.sensitive_index, rng);
        } catch (const ResampleExhaustedError& ex) {
            pert_failure = ex.what();
        }
    }
    std::optional<ComputationSubgraph> cf;
    if (art.graph.sensitive_index) cf = counterfactual_node(sg, art.graph.sensitive_index);

    for (const std::string& method : cfg.methods) {
        CellResult cell;
        cell.node = u;
        cell.method = method;
        Explanation expl;
        try {
            expl = explain_node(method, art, cfg, sg, 0);
        } catch (const ExplainError& ex) {
            cell.skips.push_back(std::string("explanation: ") + ex.what());
            work.cells.push_back(std::move(cell));
            continue;
        }

        if (cfg.compute_metrics && pert) {
            MetricValue unf = unfaithfulness(art.model, expl, *pert);
            cell.unfaithfulness = unf.value;
            cell.worst_case = worst_case_bound(art.model, *pert, expl);
            if (cfg.compute_bounds) {
                const BoundValue t1 = faithfulness_bound(art.profile, expl, sg, pert->k_size());
                cell.t1_bound = t1.value;
                cell.records.push_back(verify(unf, t1, cfg.verify_tol));
            }
            // instability: mean mask distance over the k perturbed members
            Vec dists;
            for (std::size_t i = 0; i < pert->perturbed.size(); ++i) {
                try {
                    const Explanation pe = explain_node(method, art, cfg, pert->perturbed[i],
                                                        0x700 + static_cast<std::uint64_t>(i));
                    dists.push_back(instability(expl, pe).value);
                } catch (const ExplainError& ex) {
                    cell.skips.push_back(std::string("instability member: ") + ex.what());
                }
            }
            if (!dists.empty()) {
                double s = 0.0;
                for (double d : dists) s += d;
                cell.instability = s / dists.size();
            }
        } else if (cfg.compute_metrics && !pert) {
            cell.skips.push_back("perturbation set unavailable: " + pert_failure);
        }

        if (cfg.compute_metrics && cf) {
            try {
                const Explanation ce = explain_node(method, art, cfg, *cf, 0x900);
                cell.cf_mismatch = counterfactual_fairness_mismatch(expl, ce).value;
                const Vec porig = forward(art.model, sg).probabilities;
                const Vec pcf = forward(art.model, *cf).probabilities;
                cell.cf_prediction_gap = norm2(sub(porig, pcf));
            } catch (const ExplainError& ex) {
                cell.skips.push_back(std::string("counterfactual: ") + ex.what());
            }
        }

        if (cfg.compute_metrics && !pool.members.empty()) {
            try {
                MetricValue gf = group_fairness_mismatch(art.model, expl, pool);
                cell.group_fairness = gf.value;
                if (cfg.compute_bounds) {
                    const BoundValue t8d =
                        group_fairness_bound(art.model, expl, pool, GroupFairnessReading::Difference);
                    const BoundValue t8l =
                        group_fairness_bound(art.model, expl, pool, GroupFairnessReading::Label);
                    cell.t8_bound_difference = t8d.value;
                    cell.t8_bound_label = t8l.value;
                    cell.records.push_back(verify(gf, t8l, cfg.verify_tol));
                }
            } catch (const EmptyGroupError& ex) {
                cell.skips.push_back(std::string("group fairness: ") + ex.what());
            }
        }
        work.cells.push_back(std::move(cell));
    }
    return work;
}

void run_gradient_checks(const RunArtifacts& art, const ExperimentConfig& cfg,
                         const std::vector<int>& nodes, TheoremCheck& t2, TheoremCheck& t5) {
    t2.theorem = Theorem::T2;
    t5.theorem = Theorem::T5;
    const int hops = art.model.layer_count();
    const int want_pairs = 100;
    const int want_cf = 50;
    for (int u : nodes) {
        if (t2.checked >= want_pairs && t5.checked >= want_cf) break;
        const ComputationSubgraph sg = computation_subgraph(art.graph, u, hops);
        const ForwardTrace tr = forward(art.model, sg);
        const int pred = tr.predicted_class();
        Vec err = tr.probabilities;
        err[pred] -= 1.0;
        const Vec x = sg.target_features();
        const Vec g0 = self_path_gradient(art.model, tr, x, pred);

        Rng rng = node_stream(cfg.global_seed, u, kPurposeGradPairs);
        if (t2.checked < want_pairs) {
            // two feature perturbations per node
            for (int rep = 0; rep < 2 && t2.checked < want_pairs; ++rep) {
                PerturbationConfig pc = cfg.perturbation;
                pc.edge_rewire_prob = 0.0;
                PerturbedNode p = perturb_node(sg, pc, art.graph.sensitive_index, rng);
                if (!p.record.any_feature_noise()) {
                    ++t2.skipped;
                    t2.skip_reasons.push_back("node " + std::to_string(u) + ": empty noise draw");
                    continue;
                }
                const Vec xp = p.subgraph.target_features();
                const Vec g1 = self_path_gradient(art.model, tr, xp, pred, tr.probabilities);
                MetricValue mv;
                mv.name = "grad_stability_gap";
                mv.node = u;
                mv.method_tag = "vanilla_grad";
                mv.value = norm2(sub(g1, g0));
                const BoundValue b = grad_stability_bound(art.profile, err, x, xp);
                t2.records.push_back(verify(mv, b, cfg.verify_tol));
                ++t2.checked;
            }
        }
        if (t5.checked < want_cf && art.graph.sensitive_index) {
            const ComputationSubgraph cf = counterfactual_node(sg, art.graph.sensitive_index);
            const Vec g1 = self_path_gradient(art.model, tr, cf.target_features(), pred,
                                              tr.probabilities);
            MetricValue mv;
            mv.name = "grad_cf_gap";
            mv.node = u;
            mv.method_tag = "vanilla_grad";
            mv.value = norm2(sub(g1, g0));
            const BoundValue b = grad_cf_bound(art.profile, err);
            t5.records.push_back(verify(mv, b, cfg.verify_tol));
            ++t5.checked;
        }
    }
    for (auto* tc : {&t2, &t5})
        for (const auto& r : tc->records) {
            if (r.violated) ++tc->violations;
            tc->min_slack = std::min(tc->min_slack, r.slack);
        }
}

void run_erasure_checks(const RunArtifacts& art, const ExperimentConfig& cfg,
                        const std::vector<int>& nodes, TheoremCheck& t3, TheoremCheck& t6) {
    t3.theorem = Theorem::T3;
    t6.theorem = Theorem::T6;
    if (!art.erasure) return;
    const ErasureFunction& er = *art.erasure;
    const int hops = art.model.layer_count();
    const int want_pairs = 100;
    const int want_cf = 50;
    for (int u : nodes) {
        if (t3.checked >= want_pairs && t6.checked >= want_cf) break;
        const ComputationSubgraph sg = computation_subgraph(art.graph, u, hops);
        const auto nbrs = sg.target_neighbors();
        if (nbrs.empty()) continue;
        const ForwardTrace tr = forward(art.model, sg);
        Rng rng = node_stream(cfg.global_seed, u, kPurposeGradPairs ^ 0xE0);

        if (t3.checked < want_pairs) {
            PerturbationConfig pc = cfg.perturbation;
            pc.edge_rewire_prob = 0.0;
            const PerturbedNode p = perturb_node(sg, pc, art.graph.sensitive_index, rng);
            const ForwardTrace trp = forward(art.model, p.subgraph);
            for (int l = 0; l < art.model.layer_count() && t3.checked < want_pairs; ++l) {
                const int v = nbrs[0];
                const Vec q = concatenated_embedding(art.model, sg, tr, v, l);
                const Vec qp = concatenated_embedding(art.model, p.subgraph, trp, v, l);
                MetricValue mv;
                mv.name = "graphmask_z_gap_layer" + std::to_string(l);
                mv.node = u;
                mv.method_tag = "graphmask";
                mv.value = std::abs(er.score(l, qp) - er.score(l, q));
                t3.records.push_back(verify(mv, graphmask_bound(er, q, qp, l), cfg.verify_tol));
                ++t3.checked;
            }
        }
        if (t6.checked < want_cf && art.graph.sensitive_index) {
            const ComputationSubgraph cf = counterfactual_node(sg, art.graph.sensitive_index);
            const ForwardTrace trc = forward(art.model, cf);
            for (int l = 0; l < art.model.layer_count() && t6.checked < want_cf; ++l) {
                const int v = nbrs[0];
                const Vec q = concatenated_embedding(art.model, sg, tr, v, l);
                const Vec qc = concatenated_embedding(art.model, cf, trc, v, l);
                MetricValue mv;
                mv.name = "graphmask_cf_z_gap_layer" + std::to_string(l);
                mv.node = u;
                mv.method_tag = "graphmask";
                mv.value = std::abs(er.score(l, qc) - er.score(l, q));
                t6.records.push_back(verify(mv, graphmask_bound(er, q, qc, l, true), cfg.verify_tol));
                ++t6.checked;
            }
        }
    }
    for (auto* tc : {&t3, &t6})
        for (const auto& r : tc->records) {
            if (r.violated) ++tc->violations;
            tc->min_slack = std::min(tc->min_slack, r.slack);
        }
}

void run_graphlime_checks(const RunArtifacts& art, const ExperimentConfig& cfg,
                          TheoremCheck& t4, TheoremCheck& t7) {
    t4.theorem = Theorem::T4;
    t7.theorem = Theorem::T7;
    const int hops = art.model.layer_count();
    const int want = 50;
    const int m = art.graph.feature_dim;
    const int sensitive = art.graph.sensitive_index.value_or(-1);

    for (int u = 0; u < art.graph.node_count && (t4.checked < want || t7.checked < want); ++u) {
        ComputationSubgraph sg = computation_subgraph(art.graph, u, hops);
        if (static_cast<int>(sg.nodes.size()) < 3) continue;
        Rng rng = node_stream(cfg.global_seed, u, kPurposeGraphLime);

        GraphLimeOptions opts;
        opts.rho = cfg.graphlime_rho;
        GraphLimeResult base;
        try {
            base = graphlime(art.model, sg, cfg.top_p, opts);
        } catch (const ExplainError&) {
            continue;
        }

        // continuous feature chosen per node; sensitive column excluded
        std::vector<int> candidates;
        for (int k = 0; k < m; ++k)
            if (k != sensitive) candidates.push_back(k);
        if (candidates.empty()) break;
        const int k0 = candidates[rng.below(candidates.size())];
        const int lt = sg.local_index(sg.target);

        auto perturbed_beta = [&](double delta) -> std::optional<Vec> {
            ComputationSubgraph pg = sg;
            pg.features(lt, k0) += delta;
            GraphLimeOptions popts;
            popts.rho = cfg.graphlime_rho;
            popts.fixed_sigma_x = base.artifacts.sigma_x;
            popts.fixed_sigma_y = base.artifacts.sigma_y;
            popts.fixed_output_gram = &base.artifacts.output_gram_centered;
            try {
                return graphlime(art.model, pg, cfg.top_p, popts).artifacts.beta;
            } catch (const ExplainError&) {
                return std::nullopt;
            }
        };

        if (t4.checked < want) {
            double eta = rng.normal();
            while (std::abs(eta) < 1e-3) eta = rng.normal();
            const auto beta_p = perturbed_beta(eta);
            if (beta_p) {
                GraphLimeBoundInputs in;
                in.artifacts = &base.artifacts;
                in.feature = k0;
                in.eta = eta;
                GraphLimeBoundDiagnostics diag;
                try {
                    const BoundValue b =
                        graphlime_bound(in, base.artifacts.sigma_x, GraphLimeVariant::Stability, diag);
                    if (b.ill_conditioned_warning ||
                        diag.w_inverse_residual > 1e-8 || diag.k_inverse_residual > 1e-8) {
                        ++t4.skipped;
                        t4.skip_reasons.push_back("node " + std::to_string(u) +
                                                  ": inversion outside tolerance");
                    } else {
                        MetricValue mv;
                        mv.name = "graphlime_beta_gap_f" + std::to_string(k0);
                        mv.node = u;
                        mv.method_tag = "graphlime";
                        mv.value = std::abs((*beta_p)[k0] - base.artifacts.beta[k0]);
                        t4.records.push_back(verify(mv, b, cfg.verify_tol));
                        ++t4.checked;
                    }
                } catch (const BoundError& ex) {
                    ++t4.skipped;
                    t4.skip_reasons.push_back("node " + std::to_string(u) + ": " + ex.what());
                }
            }
        }
        if (t7.checked < want) {
            const double eta = rng.uniform() < 0.5 ? 1.0 : -1.0;
            const auto beta_p = perturbed_beta(eta);
            if (beta_p) {
                GraphLimeBoundInputs in;
                in.artifacts = &base.artifacts;
                in.feature = k0;
                in.eta = eta;
                GraphLimeBoundDiagnostics diag;
                try {
                    const BoundValue b = graphlime_bound(in, base.artifacts.sigma_x,
                                                         GraphLimeVariant::Counterfactual, diag);
                    if (b.ill_conditioned_warning ||
                        diag.w_inverse_residual > 1e-8 || diag.k_inverse_residual > 1e-8) {
                        ++t7.skipped;
                        t7.skip_reasons.push_back("node " + std::to_string(u) +
                                                  ": inversion outside tolerance");
                    } else {
                        MetricValue mv;
                        mv.name = "graphlime_cf_beta_gap_f" + std::to_string(k0);
                        mv.node = u;
                        mv.method_tag = "graphlime";
                        mv.value = std::abs((*beta_p)[k0] - base.artifacts.beta[k0]);
                        t7.records.push_back(verify(mv, b, cfg.verify_tol));
                        ++t7.checked;
                    }
                } catch (const BoundError& ex) {
                    ++t7.skipped;
                    t7.skip_reasons.push_back("node " + std::to_string(u) + ": " + ex.what());
                }
            }
        }
    }
    for (auto* tc : {&t4, &t7})
        for (const auto& r : tc->records) {
            if (r.violated) ++tc->violations;
            tc->min_slack = std::min(tc->min_slack, r.slack);
        }
}

void build_aggregates(ReliabilityReport& rep, const ExperimentConfig& cfg) {
    struct Key {
        const char* metric;
        std::optional<double> CellResult::*field;
    };
    const Key keys[] = {
        {"unfaithfulness", &CellResult::unfaithfulness},
        {"instability", &CellResult::instability},
        {"cf_mismatch", &CellResult::cf_mismatch},
        {"group_fairness_mismatch", &CellResult::group_fairness},
        {"t1_bound", &CellResult::t1_bound},
        {"worst_case", &CellResult::worst_case},
    };
    for (const std::string& method : cfg.methods) {
        for (const Key& key : keys) {
            Vec values;
            for (const CellResult& c : rep.cells) {
                if (c.method != method) continue;
                if (const auto& v = c.*(key.field)) values.push_back(*v);
            }
            MethodAggregate agg;
            agg.method = method;
            agg.metric = key.metric;
            const Aggregate a = aggregate(values);
            agg.mean = a.mean;
            agg.standard_error = a.standard_error;
            agg.count = a.count;
            rep.aggregates.push_back(agg);
        }
    }

    // method-level correlations echoing the paper's trade-off analysis
    auto method_means = [&](const char* metric) {
        Vec out;
        for (const std::string& method : cfg.methods) {
            for (const MethodAggregate& a : rep.aggregates)
                if (a.method == method && a.metric == metric && a.count > 0) out.push_back(a.mean);
        }
        return out;
    };
    const Vec unf = method_means("unfaithfulness");
    const Vec gf = method_means("group_fairness_mismatch");
    const Vec inst = method_means("instability");
    const Vec cfm = method_means("cf_mismatch");
    const Vec t1 = method_means("t1_bound");
    auto put = [&](const std::string& name, const Vec& a, const Vec& b) {
        if (a.size() != b.size() || a.size() < 3) return;
        try {
            rep.correlations[name] = {pearson(a, b), spearman(a, b)};
        } catch (const MetricError&) {
            // degenerate variance: leave the row out
        }
    };
    put("unfaithfulness_vs_group_fairness", unf, gf);
    put("instability_vs_cf_mismatch", inst, cfm);
    put("t1_bound_vs_unfaithfulness", t1, unf);
}

}  // namespace

ReliabilityReport run_evaluation(const ExperimentConfig& cfg,
                                 const std::optional<GnnModel>& checkpoint) {
    const RunArtifacts art = prepare_run(cfg, checkpoint);
    ReliabilityReport rep;
    rep.config_echo = cfg.to_json();
    rep.global_seed = cfg.global_seed;
    rep.workers = cfg.workers;
    rep.train_accuracy = art.train_accuracy;
    rep.test_accuracy = art.test_accuracy;

    for (int u = 0; u < art.graph.node_count; ++u) {
        if (static_cast<int>(rep.eval_nodes.size()) >= cfg.max_eval_nodes) break;
        if (art.graph.test_mask[u]) rep.eval_nodes.push_back(u);
    }
    const GroupFairnessInputs pool = build_group_pool(art, cfg);

    // per-node work in parallel; slots keep the output order fixed
    std::vector<NodeWork> slots(rep.eval_nodes.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, cfg.workers);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= rep.eval_nodes.size()) break;
            slots[i] = evaluate_node(rep.eval_nodes[i], art, cfg, pool);
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    for (auto& slot : slots)
        for (auto& cell : slot.cells) rep.cells.push_back(std::move(cell));

    if (cfg.compute_bounds) {
        TheoremCheck t2, t5, t3, t6, t4, t7;
        run_gradient_checks(art, cfg, rep.eval_nodes, t2, t5);
        run_erasure_checks(art, cfg, rep.eval_nodes, t3, t6);
        run_graphlime_checks(art, cfg, t4, t7);
        rep.theorem_checks = {t2, t3, t4, t5, t6, t7};
    }
    build_aggregates(rep, cfg);

    for (const CellResult& c : rep.cells) {
        rep.record_count += static_cast<int>(c.records.size());
        for (const auto& r : c.records)
            if (r.violated) ++rep.violation_count;
    }
    for (const TheoremCheck& tc : rep.theorem_checks) {
        rep.record_count += static_cast<int>(tc.records.size());
        rep.violation_count += tc.violations;
    }
    return rep;
}

}  // namespace probe
