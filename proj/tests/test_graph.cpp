#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "probe/graph.hpp"

using namespace probe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("probe_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
};

}  // namespace

TEST_CASE("load_graph on a 4-node csv trio") {
    TempDir tmp;
    const auto feat = tmp.file("f.csv", "a,b\n1.0,0\n2.0,1\n3.0,0\n4.0,1\n");
    const auto edges = tmp.file("e.csv", "src,dst\n0,1\n1,2\n2,3\n");
    const auto labels = tmp.file("l.csv", "0\n1\n0\n1\n");
    const Graph g = load_graph(feat, edges, labels, 1, SplitSpec{0.5, 3});
    CHECK(g.node_count == 4);
    CHECK(g.feature_dim == 2);
    CHECK(g.class_count == 2);
    CHECK(g.edges.size() == 3);
    CHECK(g.features(2, 0) == doctest::Approx(3.0));
    int train = 0, test = 0;
    for (int i = 0; i < 4; ++i) {
        train += g.train_mask[i];
        test += g.test_mask[i];
        CHECK_FALSE((g.train_mask[i] && g.test_mask[i]));
    }
    CHECK(train + test == 4);
}

TEST_CASE("load_graph rejects a dangling edge") {
    TempDir tmp;
    const auto feat = tmp.file("f.csv", "a,b\n1,0\n2,1\n3,0\n4,1\n");
    const auto edges = tmp.file("e.csv", "src,dst\n0,5\n");
    const auto labels = tmp.file("l.csv", "0\n1\n0\n1\n");
    CHECK_THROWS_AS(load_graph(feat, edges, labels, std::nullopt, SplitSpec{}), DanglingEdgeError);
}

TEST_CASE("load_graph rejects a non-binary sensitive column") {
    TempDir tmp;
    const auto feat = tmp.file("f.csv", "a,b\n1,0.5\n2,1\n3,0\n4,1\n");
    const auto edges = tmp.file("e.csv", "src,dst\n0,1\n");
    const auto labels = tmp.file("l.csv", "0\n1\n0\n1\n");
    CHECK_THROWS_AS(load_graph(feat, edges, labels, 1, SplitSpec{}), NonBinarySensitiveError);
}

TEST_CASE("load_graph rejects a row with the wrong column count") {
    TempDir tmp;
    const auto feat = tmp.file("f.csv", "a,b\n1,0\n2\n");
    const auto edges = tmp.file("e.csv", "src,dst\n0,1\n");
    const auto labels = tmp.file("l.csv", "0\n1\n");
    CHECK_THROWS_AS(load_graph(feat, edges, labels, std::nullopt, SplitSpec{}),
                    DimensionMismatchError);
}

TEST_CASE("synthetic generation is deterministic per seed") {
    SyntheticConfig cfg;
    cfg.n_per_class = 50;
    cfg.feature_dim = 10;
    cfg.class_count = 2;
    cfg.intra_edge_prob = 0.1;
    cfg.inter_edge_prob = 0.01;
    cfg.class_mean_shift = 1.0;
    cfg.sensitive_bias = 0.3;
    cfg.seed = 7;
    const Graph a = generate_synthetic(cfg);
    const Graph b = generate_synthetic(cfg);
    CHECK(a.features.data == b.features.data);
    CHECK(a.edges == b.edges);
    CHECK(a.labels == b.labels);
    CHECK(a.train_mask == b.train_mask);
    a.validate();
}

TEST_CASE("inter_edge_prob zero forbids cross-class edges") {
    SyntheticConfig cfg;
    cfg.n_per_class = 50;
    cfg.inter_edge_prob = 0.0;
    cfg.intra_edge_prob = 0.08;
    cfg.seed = 2;
    const Graph g = generate_synthetic(cfg);
    for (const Edge& e : g.edges) CHECK(g.labels[e.a] == g.labels[e.b]);
}

TEST_CASE("synthetic rejects intra < inter") {
    SyntheticConfig cfg;
    cfg.intra_edge_prob = 0.01;
    cfg.inter_edge_prob = 0.5;
    CHECK_THROWS_AS(generate_synthetic(cfg), GraphError);
}

TEST_CASE("sensitive column of the synthetic graph is binary and biased") {
    SyntheticConfig cfg;
    cfg.n_per_class = 200;
    cfg.sensitive_bias = 0.3;
    cfg.seed = 5;
    const Graph g = generate_synthetic(cfg);
    REQUIRE(g.sensitive_index.has_value());
    const int s = *g.sensitive_index;
    double m0 = 0.0, m1 = 0.0;
    for (int i = 0; i < g.node_count; ++i) {
        const double v = g.features(i, s);
        CHECK((v == 0.0 || v == 1.0));
        (g.labels[i] == 0 ? m0 : m1) += v;
    }
    m0 /= cfg.n_per_class;
    m1 /= cfg.n_per_class;
    CHECK(m0 > m1 + 0.3);  // 0.8 vs 0.2 in expectation
}

TEST_CASE("computation subgraph of an isolated node is the node alone") {
    Graph g;
    g.node_count = 3;
    g.feature_dim = 1;
    g.class_count = 2;
    g.features = Matrix(3, 1);
    g.labels = {0, 1, 0};
    g.edges = {Edge(1, 2)};
    g.train_mask = {true, true, false};
    g.test_mask = {false, false, true};
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    CHECK(sg.nodes == std::vector<int>{0});
    CHECK(sg.edges.empty());
}

TEST_CASE("computation subgraph of a path graph matches BFS by hand") {
    Graph g;
    g.node_count = 4;
    g.feature_dim = 1;
    g.class_count = 2;
    g.features = Matrix(4, 1);
    g.labels = {0, 1, 0, 1};
    g.edges = {Edge(0, 1), Edge(1, 2), Edge(2, 3)};
    g.train_mask.assign(4, true);
    g.test_mask.assign(4, false);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 2);
    CHECK(sg.nodes == std::vector<int>{0, 1, 2});
    CHECK(sg.edges == std::vector<Edge>{Edge(0, 1), Edge(1, 2)});
}

TEST_CASE("computation subgraph of a star center keeps all leaves") {
    Graph g;
    g.node_count = 6;
    g.feature_dim = 1;
    g.class_count = 2;
    g.features = Matrix(6, 1);
    g.labels.assign(6, 0);
    g.labels[1] = 1;
    for (int leaf = 1; leaf <= 5; ++leaf) g.edges.emplace_back(0, leaf);
    g.train_mask.assign(6, true);
    g.test_mask.assign(6, false);
    const ComputationSubgraph sg = computation_subgraph(g, 0, 1);
    CHECK(sg.nodes.size() == 6);
    CHECK(sg.edges.size() == 5);
    CHECK(sg.target_neighbors() == std::vector<int>{1, 2, 3, 4, 5});
}
