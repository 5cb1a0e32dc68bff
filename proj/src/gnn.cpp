#include "probe/gnn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "probe/rng.hpp"

namespace probe {

namespace {

void init_uniform(Matrix& m, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : m.data) x = rng.uniform(-bound, bound);
}

// doubles as decimal strings, bit-exact round trip
std::string double_to_string(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

double string_to_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw GnnError("bad numeric string in checkpoint: " + s);
    return v;
}

nlohmann::ordered_json matrix_to_json(const Matrix& m) {
    nlohmann::ordered_json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    std::vector<std::string> vals;
    vals.reserve(m.data.size());
    for (double v : m.data) vals.push_back(double_to_string(v));
    j["data"] = vals;
    return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto vals = j.at("data").get<std::vector<std::string>>();
    if (vals.size() != m.data.size()) throw GnnError("checkpoint matrix size mismatch");
    for (std::size_t i = 0; i < vals.size(); ++i) m.data[i] = string_to_double(vals[i]);
    return m;
}

}  // namespace

GnnModel::GnnModel(int input_dim, const std::vector<int>& hidden_dims, int class_count,
                   std::uint64_t seed)
    : init_seed(seed), input_dim_(input_dim), class_count_(class_count) {
    Rng rng(Rng::mix(seed, 0x6E17ULL));
    int prev = input_dim;
    for (int h : hidden_dims) {
        GnnLayer layer;
        layer.w_self = Matrix(h, prev);
        layer.w_neighbor = Matrix(h, prev);
        init_uniform(layer.w_self, prev, rng);
        init_uniform(layer.w_neighbor, prev, rng);
        layers_.push_back(std::move(layer));
        prev = h;
    }
    w_fc_ = Matrix(class_count, prev);
    init_uniform(w_fc_, prev, rng);
    b_.assign(class_count, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
    for (double& x : b_) x = rng.uniform(-bound, bound);
}

void GnnModel::check_shapes() const {
    int prev = input_dim_;
    for (const auto& l : layers_) {
        if (l.w_self.cols != prev || l.w_neighbor.cols != prev ||
            l.w_self.rows != l.w_neighbor.rows)
            throw GnnError("layer shape chain broken");
        prev = l.w_self.rows;
    }
    if (w_fc_.cols != prev || w_fc_.rows != class_count_ ||
        static_cast<int>(b_.size()) != class_count_)
        throw GnnError("classifier shape mismatch");
    for (const auto& l : layers_)
        for (double v : l.w_self.data)
            if (!std::isfinite(v)) throw GnnError("non-finite weight");
}

ForwardTrace forward(const GnnModel& model, const ComputationSubgraph& sg) {
    if (sg.hop_count < model.layer_count())
        throw GnnError("subgraph hop count smaller than model depth");
    if (sg.features.cols != model.input_dim()) throw GnnError("feature dim mismatch");
    const int n = static_cast<int>(sg.nodes.size());
    const auto adj = sg.local_adjacency();

    ForwardTrace tr;
    tr.target_local = sg.local_index(sg.target);
    Matrix h = sg.features;  // h^0
    for (int l = 0; l < model.layer_count(); ++l) {
        const GnnLayer& layer = model.layer(l);
        Matrix nbr(n, h.cols);
        for (int i = 0; i < n; ++i)
            for (int j : adj[i])
                for (int c = 0; c < h.cols; ++c) nbr(i, c) += h(j, c);
        Matrix a(n, layer.w_self.rows);
        for (int i = 0; i < n; ++i) {
            for (int r = 0; r < layer.w_self.rows; ++r) {
                double s = 0.0;
                for (int c = 0; c < h.cols; ++c)
                    s += layer.w_self(r, c) * h(i, c) + layer.w_neighbor(r, c) * nbr(i, c);
                a(i, r) = s;
            }
        }
        Matrix hn(n, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i) hn.data[i] = softplus(a.data[i]);
        tr.neighbor_sums.push_back(std::move(nbr));
        tr.pre_activations.push_back(std::move(a));
        tr.hidden.push_back(hn);
        h = std::move(hn);
    }
    const int t = tr.target_local;
    Vec ht(h.cols);
    for (int c = 0; c < h.cols; ++c) ht[c] = h(t, c);
    tr.logits = matvec(model.classifier_weight(), ht);
    for (std::size_t i = 0; i < tr.logits.size(); ++i) tr.logits[i] += model.classifier_bias()[i];
    tr.probabilities = softmax(tr.logits);
    return tr;
}

int ForwardTrace::predicted_class() const {
    int best = 0;
    for (std::size_t i = 1; i < probabilities.size(); ++i)
        if (probabilities[i] > probabilities[best]) best = static_cast<int>(i);
    return best;
}

Vec forward_probabilities(const GnnModel& model, const ComputationSubgraph& sg, int global_node) {
    ComputationSubgraph tmp = sg;
    tmp.target = global_node;
    const ForwardTrace tr = forward(model, tmp);
    return tr.probabilities;
}

namespace {

struct FullForward {
    std::vector<Matrix> nbr_sums;  // inputs aggregated per layer
    std::vector<Matrix> pre;
    std::vector<Matrix> hidden;
    Matrix logits;
    Matrix probs;
};

FullForward full_forward(const GnnModel& model, const Graph& g,
                         const std::vector<std::vector<int>>& adj) {
    FullForward f;
    const int n = g.node_count;
    Matrix h = g.features;
    for (int l = 0; l < model.layer_count(); ++l) {
        const GnnLayer& layer = model.layer(l);
        Matrix nbr(n, h.cols);
        for (int i = 0; i < n; ++i)
            for (int j : adj[i])
                for (int c = 0; c < h.cols; ++c) nbr(i, c) += h(j, c);
        Matrix a(n, layer.w_self.rows);
        for (int i = 0; i < n; ++i)
            for (int r = 0; r < layer.w_self.rows; ++r) {
                double s = 0.0;
                for (int c = 0; c < h.cols; ++c)
                    s += layer.w_self(r, c) * h(i, c) + layer.w_neighbor(r, c) * nbr(i, c);
                a(i, r) = s;
            }
        Matrix hn(n, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i) hn.data[i] = softplus(a.data[i]);
        f.nbr_sums.push_back(std::move(nbr));
        f.pre.push_back(std::move(a));
        f.hidden.push_back(hn);
        h = std::move(hn);
    }
    const Matrix& wfc = model.classifier_weight();
    f.logits = Matrix(n, wfc.rows);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < wfc.rows; ++r) {
            double s = model.classifier_bias()[r];
            for (int c = 0; c < wfc.cols; ++c) s += wfc(r, c) * h(i, c);
            f.logits(i, r) = s;
        }
    f.probs = Matrix(n, wfc.rows);
    for (int i = 0; i < n; ++i) {
        Vec row(f.logits.row(i).begin(), f.logits.row(i).end());
        const Vec p = softmax(row);
        for (int r = 0; r < wfc.rows; ++r) f.probs(i, r) = p[r];
    }
    return f;
}

WeightGradients backward(const GnnModel& model, const Graph& g,
                         const std::vector<std::vector<int>>& adj, const FullForward& f) {
    const int n = g.node_count;
    const int L = model.layer_count();
    int n_train = 0;
    for (bool b : g.train_mask) n_train += b ? 1 : 0;
    if (n_train == 0) throw GnnError("empty train mask");

    WeightGradients grads;
    grads.layers.resize(L);
    for (int l = 0; l < L; ++l) {
        grads.layers[l].w_self = Matrix(model.layer(l).w_self.rows, model.layer(l).w_self.cols);
        grads.layers[l].w_neighbor = Matrix(model.layer(l).w_neighbor.rows, model.layer(l).w_neighbor.cols);
    }
    const Matrix& wfc = model.classifier_weight();
    grads.w_fc = Matrix(wfc.rows, wfc.cols);
    grads.b.assign(wfc.rows, 0.0);

    // dL/dlogits = (p - y)/n_train on train rows
    Matrix dz(n, wfc.rows);
    for (int i = 0; i < n; ++i) {
        if (!g.train_mask[i]) continue;
        for (int r = 0; r < wfc.rows; ++r)
            dz(i, r) = (f.probs(i, r) - (g.labels[i] == r ? 1.0 : 0.0)) / n_train;
    }
    const Matrix& hL = f.hidden[L - 1];
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < wfc.rows; ++r) {
            const double d = dz(i, r);
            if (d == 0.0) continue;
            grads.b[r] += d;
            for (int c = 0; c < wfc.cols; ++c) grads.w_fc(r, c) += d * hL(i, c);
        }
    // dL/dh^L
    Matrix dh(n, wfc.cols);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < wfc.cols; ++c) {
            double s = 0.0;
            for (int r = 0; r < wfc.rows; ++r) s += dz(i, r) * wfc(r, c);
            dh(i, c) = s;
        }
    for (int l = L - 1; l >= 0; --l) {
        const GnnLayer& layer = model.layer(l);
        const Matrix& a = f.pre[l];
        Matrix da(n, a.cols);
        for (std::size_t i = 0; i < a.data.size(); ++i)
            da.data[i] = dh.data[i] * sigmoid(a.data[i]);
        const Matrix& hin = (l == 0) ? g.features : f.hidden[l - 1];
        const Matrix& nbr = f.nbr_sums[l];
        for (int i = 0; i < n; ++i)
            for (int r = 0; r < a.cols; ++r) {
                const double d = da(i, r);
                if (d == 0.0) continue;
                for (int c = 0; c < hin.cols; ++c) {
                    grads.layers[l].w_self(r, c) += d * hin(i, c);
                    grads.layers[l].w_neighbor(r, c) += d * nbr(i, c);
                }
            }
        if (l > 0) {
            // dL/dh^{l-1} = da W_a + A (da W_n)   (A symmetric)
            Matrix self_part(n, hin.cols);
            Matrix nbr_part(n, hin.cols);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < hin.cols; ++c) {
                    double s1 = 0.0, s2 = 0.0;
                    for (int r = 0; r < a.cols; ++r) {
                        s1 += da(i, r) * layer.w_self(r, c);
                        s2 += da(i, r) * layer.w_neighbor(r, c);
                    }
                    self_part(i, c) = s1;
                    nbr_part(i, c) = s2;
                }
            Matrix dprev(n, hin.cols);
            for (int i = 0; i < n; ++i) {
                for (int c = 0; c < hin.cols; ++c) dprev(i, c) = self_part(i, c);
                for (int j : adj[i])
                    for (int c = 0; c < hin.cols; ++c) dprev(i, c) += nbr_part(j, c);
            }
            dh = std::move(dprev);
        }
    }
    return grads;
}

}  // namespace

WeightGradients loss_gradients(const GnnModel& model, const Graph& graph) {
    const auto adj = graph.adjacency();
    const FullForward f = full_forward(model, graph, adj);
    return backward(model, graph, adj, f);
}

double mean_train_ce(const GnnModel& model, const Graph& graph) {
    const auto adj = graph.adjacency();
    const FullForward f = full_forward(model, graph, adj);
    double loss = 0.0;
    int n_train = 0;
    for (int i = 0; i < graph.node_count; ++i) {
        if (!graph.train_mask[i]) continue;
        ++n_train;
        loss -= std::log(std::max(f.probs(i, graph.labels[i]), 1e-300));
    }
    return n_train > 0 ? loss / n_train : 0.0;
}

TrainResult train(const GnnModel& init, const Graph& graph, const TrainConfig& cfg) {
    if (cfg.learning_rate <= 0.0 || cfg.epochs < 0) throw GnnError("bad train config");
    bool has_class_in_train[64] = {};
    for (int i = 0; i < graph.node_count; ++i)
        if (graph.train_mask[i] && graph.labels[i] < 64) has_class_in_train[graph.labels[i]] = true;
    for (int c = 0; c < std::min(graph.class_count, 64); ++c)
        if (!has_class_in_train[c]) throw GnnError("train mask misses class " + std::to_string(c));

    TrainResult out{init, {}};
    GnnModel& model = out.model;
    const auto adj = graph.adjacency();
    const int L = model.layer_count();

    // flat parameter views: per layer w_self, w_neighbor, then w_fc, b
    std::vector<std::vector<double>*> params;
    for (int l = 0; l < L; ++l) {
        params.push_back(&model.layer(l).w_self.data);
        params.push_back(&model.layer(l).w_neighbor.data);
    }
    params.push_back(&model.classifier_weight().data);
    params.push_back(&model.classifier_bias());

    std::vector<Vec> m_state, v_state;
    for (auto* p : params) {
        m_state.emplace_back(p->size(), 0.0);
        v_state.emplace_back(p->size(), 0.0);
    }

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const FullForward f = full_forward(model, graph, adj);
        double loss = 0.0;
        int n_train = 0;
        for (int i = 0; i < graph.node_count; ++i) {
            if (!graph.train_mask[i]) continue;
            ++n_train;
            loss -= std::log(std::max(f.probs(i, graph.labels[i]), 1e-300));
        }
        loss /= n_train;
        if (!std::isfinite(loss)) throw DivergenceError("training loss diverged", epoch);
        out.loss_trace.push_back(loss);

        WeightGradients grads = backward(model, graph, adj, f);
        std::vector<std::vector<double>*> gviews;
        for (int l = 0; l < L; ++l) {
            gviews.push_back(&grads.layers[l].w_self.data);
            gviews.push_back(&grads.layers[l].w_neighbor.data);
        }
        gviews.push_back(&grads.w_fc.data);
        gviews.push_back(&grads.b);

        const double bc1 = 1.0 - std::pow(cfg.adam_beta1, epoch + 1);
        const double bc2 = 1.0 - std::pow(cfg.adam_beta2, epoch + 1);
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            auto& p = *params[pi];
            auto& gv = *gviews[pi];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double grad = gv[i] + cfg.weight_decay * p[i];
                m_state[pi][i] = cfg.adam_beta1 * m_state[pi][i] + (1.0 - cfg.adam_beta1) * grad;
                v_state[pi][i] = cfg.adam_beta2 * v_state[pi][i] + (1.0 - cfg.adam_beta2) * grad * grad;
                const double mh = m_state[pi][i] / bc1;
                const double vh = v_state[pi][i] / bc2;
                p[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
            }
        }
    }
    model.check_shapes();
    return out;
}

Vec self_path_gradient(const GnnModel& model, const ForwardTrace& base, const Vec& x, int label,
                       const std::optional<Vec>& probability_override) {
    const int L = model.layer_count();
    const int t = base.target_local;

    // self chain forward with frozen neighbor aggregates
    std::vector<Vec> pre(L), hid(L);
    Vec h = x;
    for (int l = 0; l < L; ++l) {
        const GnnLayer& layer = model.layer(l);
        Vec a = matvec(layer.w_self, h);
        const Matrix& nbr = base.neighbor_sums[l];
        for (int r = 0; r < layer.w_neighbor.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < layer.w_neighbor.cols; ++c) s += layer.w_neighbor(r, c) * nbr(t, c);
            a[r] += s;
        }
        pre[l] = a;
        hid[l].resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) hid[l][i] = softplus(a[i]);
        h = hid[l];
    }
    Vec logits = matvec(model.classifier_weight(), h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];
    Vec probs = probability_override ? *probability_override : softmax(logits);

    // d CE / d logits = p - onehot(label)
    Vec err = probs;
    err[label] -= 1.0;
    Vec v = matvec_transposed(model.classifier_weight(), err);
    for (int l = L - 1; l >= 0; --l) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= sigmoid(pre[l][i]);
        v = matvec_transposed(model.layer(l).w_self, v);
    }
    return v;
}

double self_path_ce(const GnnModel& model, const ForwardTrace& base, const Vec& x, int label) {
    const int L = model.layer_count();
    const int t = base.target_local;
    Vec h = x;
    for (int l = 0; l < L; ++l) {
        const GnnLayer& layer = model.layer(l);
        Vec a = matvec(layer.w_self, h);
        const Matrix& nbr = base.neighbor_sums[l];
        for (int r = 0; r < layer.w_neighbor.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < layer.w_neighbor.cols; ++c) s += layer.w_neighbor(r, c) * nbr(t, c);
            a[r] += s;
        }
        h.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) h[i] = softplus(a[i]);
    }
    Vec logits = matvec(model.classifier_weight(), h);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += model.classifier_bias()[i];
    const Vec p = softmax(logits);
    return -std::log(std::max(p[label], 1e-300));
}

namespace {

// shared self-chain forward; returns pre-activations and the final hidden
std::vector<Vec> self_chain(const GnnModel& model, const ForwardTrace& base, const Vec& x,
                            Vec& final_hidden) {
    const int L = model.layer_count();
    const int t = base.target_local;
    std::vector<Vec> pre(L);
    Vec h = x;
    for (int l = 0; l < L; ++l) {
        const GnnLayer& layer = model.layer(l);
        Vec a = matvec(layer.w_self, h);
        const Matrix& nbr = base.neighbor_sums[l];
        for (int r = 0; r < layer.w_neighbor.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < layer.w_neighbor.cols; ++c) s += layer.w_neighbor(r, c) * nbr(t, c);
            a[r] += s;
        }
        pre[l] = a;
        h.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) h[i] = softplus(a[i]);
    }
    final_hidden = h;
    return pre;
}

}  // namespace

Vec self_path_logit_gradient(const GnnModel& model, const ForwardTrace& base, const Vec& x,
                             int class_index) {
    Vec h;
    const auto pre = self_chain(model, base, x, h);
    Vec err(model.class_count(), 0.0);
    err[class_index] = 1.0;
    Vec v = matvec_transposed(model.classifier_weight(), err);
    for (int l = model.layer_count() - 1; l >= 0; --l) {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= sigmoid(pre[l][i]);
        v = matvec_transposed(model.layer(l).w_self, v);
    }
    return v;
}

double self_path_logit(const GnnModel& model, const ForwardTrace& base, const Vec& x,
                       int class_index) {
    Vec h;
    self_chain(model, base, x, h);
    double s = model.classifier_bias()[class_index];
    for (int c = 0; c < model.classifier_weight().cols; ++c)
        s += model.classifier_weight()(class_index, c) * h[c];
    return s;
}

Vec input_gradient(const GnnModel& model, const ComputationSubgraph& sg, int label,
                   const std::optional<Vec>& probability_override) {
    if (label < 0 || label >= model.class_count()) throw GnnError("label out of range");
    const ForwardTrace tr = forward(model, sg);
    return self_path_gradient(model, tr, sg.target_features(), label, probability_override);
}

Vec concatenated_embedding(const GnnModel& model, const ComputationSubgraph& sg,
                           const ForwardTrace& trace, int v_global, int layer) {
    if (layer < 0 || layer >= model.layer_count())
        throw GnnError("embedding layer out of range");
    const auto nbrs = sg.target_neighbors();
    if (std::find(nbrs.begin(), nbrs.end(), v_global) == nbrs.end())
        throw GnnError("node is not a neighbor of the target");
    const int lu = sg.local_index(sg.target);
    const int lv = sg.local_index(v_global);
    const Matrix& h = (layer == 0) ? sg.features : trace.hidden[layer - 1];
    Vec q;
    q.reserve(2 * h.cols);
    for (int c = 0; c < h.cols; ++c) q.push_back(h(lu, c));
    for (int c = 0; c < h.cols; ++c) q.push_back(h(lv, c));
    return q;
}

std::string GnnModel::to_json() const {
    nlohmann::ordered_json j;
    j["dims"]["input"] = input_dim_;
    std::vector<int> hidden;
    for (const auto& l : layers_) hidden.push_back(l.w_self.rows);
    j["dims"]["hidden"] = hidden;
    j["dims"]["classes"] = class_count_;
    j["seed"] = init_seed;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& l : layers_) {
        nlohmann::ordered_json lj;
        lj["W_a"] = matrix_to_json(l.w_self);
        lj["W_n"] = matrix_to_json(l.w_neighbor);
        layers.push_back(lj);
    }
    j["layers"] = layers;
    j["W_fc"] = matrix_to_json(w_fc_);
    std::vector<std::string> bias;
    for (double v : b_) bias.push_back(double_to_string(v));
    j["b"] = bias;
    return j.dump(2);
}

GnnModel GnnModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GnnModel m;
    m.input_dim_ = j.at("dims").at("input").get<int>();
    m.class_count_ = j.at("dims").at("classes").get<int>();
    m.init_seed = j.at("seed").get<std::uint64_t>();
    for (const auto& lj : j.at("layers")) {
        GnnLayer l;
        l.w_self = matrix_from_json(lj.at("W_a"));
        l.w_neighbor = matrix_from_json(lj.at("W_n"));
        m.layers_.push_back(std::move(l));
    }
    m.w_fc_ = matrix_from_json(j.at("W_fc"));
    for (const auto& s : j.at("b").get<std::vector<std::string>>())
        m.b_.push_back(string_to_double(s));
    m.check_shapes();
    return m;
}

void GnnModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw GnnError("cannot write checkpoint: " + path);
    out << to_json() << "\n";
}

GnnModel GnnModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GnnError("cannot read checkpoint: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

}  // namespace probe
