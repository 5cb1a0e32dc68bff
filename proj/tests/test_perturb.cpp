#include <doctest.h>

#include "probe/gnn.hpp"
#include "probe/perturb.hpp"

using namespace probe;

namespace {

Graph star_graph(int leaves, int feature_dim = 4) {
    Graph g;
    g.node_count = leaves + 1;
    g.feature_dim = feature_dim;
    g.class_count = 2;
    g.features = Matrix(g.node_count, feature_dim);
    Rng rng(17);
    for (double& x : g.features.data) x = rng.normal();
    for (int i = 0; i < g.node_count; ++i) g.features(i, feature_dim - 1) = i % 2;
    g.sensitive_index = feature_dim - 1;
    g.labels.assign(g.node_count, 0);
    for (int i = 1; i < g.node_count; i += 2) g.labels[i] = 1;
    for (int leaf = 1; leaf <= leaves; ++leaf) g.edges.emplace_back(0, leaf);
    g.train_mask.assign(g.node_count, true);
    g.test_mask.assign(g.node_count, false);
    return g;
}

}  // namespace

TEST_CASE("zero-probability perturbation is the identity") {
    const Graph g = star_graph(5);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 0.0;
    cfg.edge_rewire_prob = 0.0;
    Rng rng(1);
    const PerturbedNode p = perturb_node(sg, cfg, g.sensitive_index, rng);
    CHECK(p.subgraph.features.data == sg.features.data);
    CHECK(p.subgraph.edges == sg.edges);
    CHECK_FALSE(p.record.any_feature_noise());
}

TEST_CASE("noise record matches the applied perturbation exactly") {
    const Graph g = star_graph(5);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 1.0;
    cfg.noise_sigma = 1.0;
    Rng rng(3);
    const PerturbedNode p = perturb_node(sg, cfg, g.sensitive_index, rng);
    const int lt = sg.local_index(0);
    for (int j = 0; j < sg.features.cols; ++j) {
        const double delta = p.subgraph.features(lt, j) - sg.features(lt, j);
        CHECK(delta == doctest::Approx(p.record.tau[j]).epsilon(1e-15));
    }
    // sensitive column untouched even at probability one
    CHECK(p.record.tau[sg.features.cols - 1] == 0.0);
    CHECK(p.subgraph.features(lt, sg.features.cols - 1) == sg.features(lt, sg.features.cols - 1));
}

TEST_CASE("perturbation never touches non-target rows") {
    const Graph g = star_graph(6);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 1.0;
    Rng rng(5);
    const PerturbedNode p = perturb_node(sg, cfg, g.sensitive_index, rng);
    const int lt = sg.local_index(0);
    for (int i = 0; i < p.subgraph.features.rows; ++i) {
        if (i == lt) continue;
        for (int c = 0; c < p.subgraph.features.cols; ++c)
            CHECK(p.subgraph.features(i, c) == sg.features(i, c));
    }
}

TEST_CASE("rewire probability one replaces every incident edge of a star center") {
    const Graph g = star_graph(5);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 1);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 0.0;
    cfg.edge_rewire_prob = 1.0;
    Rng rng(9);
    const PerturbedNode p = perturb_node(sg, cfg, g.sensitive_index, rng);
    CHECK(p.record.removed_edges.size() == 5);
}

TEST_CASE("perturbation set has k+1 members and deterministic records") {
    const Graph g = star_graph(5);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    GnnModel model(g.feature_dim, {8, 8}, 2, 11);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 0.1;
    Rng r1(21), r2(21);
    const PerturbationSet s1 = perturbation_set(sg, model, 10, cfg, g.sensitive_index, r1);
    const PerturbationSet s2 = perturbation_set(sg, model, 10, cfg, g.sensitive_index, r2);
    CHECK(s1.k_size() == 11);
    REQUIRE(s1.noise_records.size() == s2.noise_records.size());
    for (std::size_t i = 0; i < s1.noise_records.size(); ++i)
        CHECK(s1.noise_records[i].tau == s2.noise_records[i].tau);
}

TEST_CASE("noise off yields k+1 identical members") {
    const Graph g = star_graph(4);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    GnnModel model(g.feature_dim, {8, 8}, 2, 11);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 0.0;
    Rng rng(2);
    const PerturbationSet s = perturbation_set(sg, model, 10, cfg, g.sensitive_index, rng);
    for (const auto& member : s.perturbed) CHECK(member.features.data == sg.features.data);
}

TEST_CASE("same-prediction sampling keeps the argmax across members") {
    const Graph g = star_graph(6);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    GnnModel model(g.feature_dim, {8, 8}, 2, 13);
    PerturbationConfig cfg;
    cfg.feature_noise_prob = 0.5;
    cfg.noise_sigma = 2.0;
    cfg.require_same_prediction = true;
    Rng rng(4);
    const PerturbationSet s = perturbation_set(sg, model, 10, cfg, g.sensitive_index, rng);
    const int pred = forward(model, sg).predicted_class();
    for (const auto& member : s.perturbed)
        CHECK(forward(model, member).predicted_class() == pred);
}

TEST_CASE("counterfactual flips the sensitive bit and is an involution") {
    const Graph g = star_graph(5);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    const int s = *g.sensitive_index;
    const ComputationSubgraph cf = counterfactual_node(sg, g.sensitive_index);
    const int lt = sg.local_index(0);
    CHECK(cf.features(lt, s) == 1.0 - sg.features(lt, s));
    // p-norm distance between the twins is exactly 1
    const Vec a = sg.target_features(), b = cf.target_features();
    CHECK(norm2(sub(a, b)) == doctest::Approx(1.0));
    CHECK(norm_p(sub(a, b), 1.0) == doctest::Approx(1.0));
    const ComputationSubgraph back = counterfactual_node(cf, g.sensitive_index);
    CHECK(back.features.data == sg.features.data);
}

TEST_CASE("counterfactual requires a sensitive index") {
    const Graph g = star_graph(3);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    CHECK_THROWS_AS(counterfactual_node(sg, std::nullopt), GraphError);
}
