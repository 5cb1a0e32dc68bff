#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "probe/gnn.hpp"
#include "probe/lipschitz.hpp"
#include "probe/perturb.hpp"

using namespace probe;

namespace {

// 3-node path 0-1-2, target 1
Graph path3() {
    Graph g;
    g.node_count = 3;
    g.feature_dim = 2;
    g.class_count = 2;
    g.features = Matrix(3, 2);
    g.features(0, 0) = 1.0;
    g.features(0, 1) = -0.5;
    g.features(1, 0) = 0.3;
    g.features(1, 1) = 0.8;
    g.features(2, 0) = -1.2;
    g.features(2, 1) = 0.4;
    g.labels = {0, 1, 0};
    g.edges = {Edge(0, 1), Edge(1, 2)};
    g.train_mask = {true, true, true};
    g.test_mask.assign(3, false);
    return g;
}

Graph five_node_fixture() {
    Graph g;
    g.node_count = 5;
    g.feature_dim = 3;
    g.class_count = 2;
    g.features = Matrix(5, 3);
    Rng rng(31);
    for (double& x : g.features.data) x = rng.normal();
    g.labels = {0, 1, 0, 1, 0};
    g.edges = {Edge(0, 1), Edge(1, 2), Edge(2, 3), Edge(3, 4), Edge(0, 4)};
    g.train_mask.assign(5, true);
    g.test_mask.assign(5, false);
    return g;
}

}  // namespace

TEST_CASE("zero weights give the uniform softmax") {
    Graph g = path3();
    GnnModel model(2, {4}, 2, 1);
    model.layer(0).w_self = Matrix(4, 2);
    model.layer(0).w_neighbor = Matrix(4, 2);
    model.classifier_weight() = Matrix(2, 4);
    model.classifier_bias() = {0.0, 0.0};
    const ComputationSubgraph sg = computation_subgraph(g, 1, 1);
    const ForwardTrace tr = forward(model, sg);
    CHECK(tr.probabilities[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tr.probabilities[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("isolated node sees a zero neighbor sum at every layer") {
    Graph g = path3();
    g.edges.clear();
    GnnModel model(2, {4, 4}, 2, 3);
    const ComputationSubgraph sg = computation_subgraph(g, 1, 2);
    const ForwardTrace tr = forward(model, sg);
    for (const Matrix& nbr : tr.neighbor_sums)
        for (double v : nbr.data) CHECK(v == 0.0);
}

TEST_CASE("forward on the 3-node path matches a straight-line evaluation") {
    // independent evaluation of h1 = sp(Wa x + Wn sum), h2 = sp(...), logits
    const Graph g = path3();
    GnnModel model(2, {3, 3}, 2, 7);
    const ComputationSubgraph sg = computation_subgraph(g, 1, 2);
    const ForwardTrace tr = forward(model, sg);

    auto sp_vec = [](Vec v) {
        for (double& x : v) x = softplus(x);
        return v;
    };
    // layer 1 for all three nodes by hand
    const Vec x0 = {g.features(0, 0), g.features(0, 1)};
    const Vec x1 = {g.features(1, 0), g.features(1, 1)};
    const Vec x2 = {g.features(2, 0), g.features(2, 1)};
    const auto& l0 = model.layer(0);
    const Vec h0_1 = sp_vec(add(matvec(l0.w_self, x0), matvec(l0.w_neighbor, x1)));
    const Vec h1_1 = sp_vec(add(matvec(l0.w_self, x1), matvec(l0.w_neighbor, add(x0, x2))));
    const Vec h2_1 = sp_vec(add(matvec(l0.w_self, x2), matvec(l0.w_neighbor, x1)));
    // layer 2 for the target
    const auto& l1 = model.layer(1);
    const Vec h1_2 = sp_vec(add(matvec(l1.w_self, h1_1), matvec(l1.w_neighbor, add(h0_1, h2_1))));
    Vec logits = matvec(model.classifier_weight(), h1_2);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];
    const Vec probs = softmax(logits);
    for (int c = 0; c < 2; ++c) {
        CHECK(tr.logits[c] == doctest::Approx(logits[c]).epsilon(1e-12));
        CHECK(tr.probabilities[c] == doctest::Approx(probs[c]).epsilon(1e-12));
    }
}

TEST_CASE("softmax trace sums to one within 1e-12") {
    const Graph g = five_node_fixture();
    GnnModel model(3, {8, 8}, 2, 5);
    const ComputationSubgraph sg = computation_subgraph(g, 2, 2);
    const ForwardTrace tr = forward(model, sg);
    double s = 0.0;
    for (double p : tr.probabilities) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
    for (std::size_t i = 0; i < tr.hidden.size(); ++i)
        for (std::size_t j = 0; j < tr.hidden[i].data.size(); ++j)
            CHECK(tr.hidden[i].data[j] ==
                  doctest::Approx(softplus(tr.pre_activations[i].data[j])).epsilon(1e-12));
}

TEST_CASE("training weight gradients match central finite differences") {
    const Graph g = five_node_fixture();
    GnnModel model(3, {4, 4}, 2, 9);
    const WeightGradients grads = loss_gradients(model, g);

    auto loss_with = [&](GnnModel m) { return mean_train_ce(m, g); };
    const double h = 1e-5;

    // spot-check every parameter block
    auto check_matrix = [&](auto getter, const Matrix& grad) {
        for (int idx = 0; idx < static_cast<int>(grad.data.size()); ++idx) {
            GnnModel mp = model, mm = model;
            getter(mp).data[idx] += h;
            getter(mm).data[idx] -= h;
            const double fd = (loss_with(mp) - loss_with(mm)) / (2.0 * h);
            const double an = grad.data[idx];
            const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
            CHECK(std::abs(fd - an) / scale <= 1e-5);
        }
    };
    check_matrix([](GnnModel& m) -> Matrix& { return m.layer(0).w_self; }, grads.layers[0].w_self);
    check_matrix([](GnnModel& m) -> Matrix& { return m.layer(0).w_neighbor; },
                 grads.layers[0].w_neighbor);
    check_matrix([](GnnModel& m) -> Matrix& { return m.layer(1).w_self; }, grads.layers[1].w_self);
    check_matrix([](GnnModel& m) -> Matrix& { return m.layer(1).w_neighbor; },
                 grads.layers[1].w_neighbor);
    check_matrix([](GnnModel& m) -> Matrix& { return m.classifier_weight(); }, grads.w_fc);
    for (int idx = 0; idx < 2; ++idx) {
        GnnModel mp = model, mm = model;
        mp.classifier_bias()[idx] += h;
        mm.classifier_bias()[idx] -= h;
        const double fd = (loss_with(mp) - loss_with(mm)) / (2.0 * h);
        const double scale = std::max({std::abs(fd), std::abs(grads.b[idx]), 1e-8});
        CHECK(std::abs(fd - grads.b[idx]) / scale <= 1e-5);
    }
}

TEST_CASE("input gradient matches finite differences of the frozen-neighbor CE") {
    const Graph g = five_node_fixture();
    GnnModel model(3, {4, 4}, 2, 13);
    const ComputationSubgraph sg = computation_subgraph(g, 2, 2);
    const ForwardTrace tr = forward(model, sg);
    const int label = 1;
    const Vec analytic = input_gradient(model, sg, label);
    const Vec fd = oracle::central_differences(
        [&](const Vec& x) { return self_path_ce(model, tr, x, label); }, sg.target_features());
    CHECK(oracle::max_rel_error(analytic, fd) <= 1e-5);
}

TEST_CASE("perfectly confident prediction has a zero CE gradient") {
    const Graph g = path3();
    GnnModel model(2, {4}, 2, 3);
    const ComputationSubgraph sg = computation_subgraph(g, 1, 1);
    const ForwardTrace tr = forward(model, sg);
    Vec onehot(2, 0.0);
    onehot[0] = 1.0;
    const Vec grad = self_path_gradient(model, tr, sg.target_features(), 0, onehot);
    for (double v : grad) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("zero first-layer self weight kills the input gradient") {
    const Graph g = path3();
    GnnModel model(2, {4, 4}, 2, 3);
    model.layer(0).w_self = Matrix(4, 2);
    const ComputationSubgraph sg = computation_subgraph(g, 1, 2);
    const Vec grad = input_gradient(model, sg, 0);
    for (double v : grad) CHECK(v == 0.0);
}

TEST_CASE("epochs=0 training returns the init") {
    const Graph g = five_node_fixture();
    GnnModel init(3, {4}, 2, 17);
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult out = train(init, g, cfg);
    CHECK(out.model.layer(0).w_self.data == init.layer(0).w_self.data);
    CHECK(out.model.classifier_bias() == init.classifier_bias());
}

TEST_CASE("training is deterministic and reduces the loss") {
    const Graph g = five_node_fixture();
    GnnModel init(3, {4}, 2, 17);
    TrainConfig cfg;
    cfg.epochs = 60;
    const TrainResult a = train(init, g, cfg);
    const TrainResult b = train(init, g, cfg);
    CHECK(a.model.classifier_weight().data == b.model.classifier_weight().data);
    CHECK(a.model.layer(0).w_self.data == b.model.layer(0).w_self.data);
    CHECK(a.loss_trace.back() < a.loss_trace.front());
}

TEST_CASE("training requires every class in the train mask") {
    Graph g = five_node_fixture();
    g.train_mask = {true, false, true, false, true};  // class 1 missing
    g.test_mask = {false, true, false, true, false};
    GnnModel init(3, {4}, 2, 1);
    CHECK_THROWS_AS(train(init, g, TrainConfig{}), GnnError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    GnnModel model(3, {5, 4}, 3, 23);
    const std::string text = model.to_json();
    const GnnModel back = GnnModel::from_json(text);
    CHECK(back.layer(0).w_self.data == model.layer(0).w_self.data);
    CHECK(back.layer(1).w_neighbor.data == model.layer(1).w_neighbor.data);
    CHECK(back.classifier_weight().data == model.classifier_weight().data);
    CHECK(back.classifier_bias() == model.classifier_bias());
    CHECK(back.to_json() == text);
}

TEST_CASE("concatenated embedding at layer 0 is the raw feature pair") {
    const Graph g = path3();
    GnnModel model(2, {4, 4}, 2, 3);
    const ComputationSubgraph sg = computation_subgraph(g, 1, 2);
    const ForwardTrace tr = forward(model, sg);
    const Vec q = concatenated_embedding(model, sg, tr, 0, 0);
    CHECK(q.size() == 4);
    CHECK(q[0] == g.features(1, 0));
    CHECK(q[1] == g.features(1, 1));
    CHECK(q[2] == g.features(0, 0));
    CHECK(q[3] == g.features(0, 1));
    const Vec q1 = concatenated_embedding(model, sg, tr, 0, 1);
    CHECK(q1.size() == 8);  // 2 * hidden dim of layer 1
    CHECK_THROWS_AS(concatenated_embedding(model, sg, tr, 2, 2), GnnError);
}

TEST_CASE("lipschitz profile: identity weights give gamma11 = 1") {
    GnnModel model(3, {3}, 3, 1);
    model.layer(0).w_self = Matrix::identity(3);
    model.layer(0).w_neighbor = Matrix::identity(3);
    model.classifier_weight() = Matrix::identity(3);
    model.classifier_bias().assign(3, 0.0);
    const LipschitzProfile prof = lipschitz_profile(model);
    CHECK(prof.gamma11 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(prof.gamma12 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("doubling the classifier weight doubles gamma11 and gamma12") {
    GnnModel model(3, {4, 4}, 2, 19);
    const LipschitzProfile before = lipschitz_profile(model);
    for (double& x : model.classifier_weight().data) x *= 2.0;
    const LipschitzProfile after = lipschitz_profile(model);
    CHECK(after.gamma11 == doctest::Approx(2.0 * before.gamma11).epsilon(1e-9));
    CHECK(after.gamma12 == doctest::Approx(2.0 * before.gamma12).epsilon(1e-9));
}

TEST_CASE("gamma11 equals the hand product of SVD-oracle norms") {
    GnnModel model(3, {4, 4}, 2, 29);
    const LipschitzProfile prof = lipschitz_profile(model);
    const double expected = oracle::svd_largest(model.classifier_weight()) *
                            oracle::svd_largest(model.layer(0).w_self) *
                            oracle::svd_largest(model.layer(1).w_self);
    CHECK(prof.gamma11 == doctest::Approx(expected).epsilon(1e-8));
}

TEST_CASE("forward Lipschitz sanity: ||f(x') - f(x)|| <= gamma11 ||x' - x||") {
    const Graph g = five_node_fixture();
    GnnModel model(3, {6, 6}, 2, 37);
    const LipschitzProfile prof = lipschitz_profile(model);
    const ComputationSubgraph sg = computation_subgraph(g, 2, 2);
    const int lt = sg.local_index(2);
    Rng rng(101);
    for (int t = 0; t < 200; ++t) {
        ComputationSubgraph a = sg, b = sg;
        for (int c = 0; c < 3; ++c) {
            a.features(lt, c) = rng.normal();
            b.features(lt, c) = rng.normal();
        }
        const Vec pa = forward(model, a).probabilities;
        const Vec pb = forward(model, b).probabilities;
        const double dx = norm2(sub(Vec(a.features.row(lt).begin(), a.features.row(lt).end()),
                                    Vec(b.features.row(lt).begin(), b.features.row(lt).end())));
        CHECK(norm2(sub(pa, pb)) <= prof.gamma11 * dx + 1e-9);
    }
}
