#include "probe/graph.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "probe/rng.hpp"

namespace probe {

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(node_count);
    for (const Edge& e : edges) {
        adj[e.a].push_back(e.b);
        adj[e.b].push_back(e.a);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

void Graph::validate() const {
    if (node_count <= 0 || feature_dim <= 0 || class_count <= 0)
        throw GraphError("graph dimensions must be positive");
    if (features.rows != node_count || features.cols != feature_dim)
        throw DimensionMismatchError("feature matrix shape does not match node_count x feature_dim");
    if (static_cast<int>(labels.size()) != node_count)
        throw DimensionMismatchError("label vector length does not match node_count");
    for (int y : labels)
        if (y < 0 || y >= class_count) throw GraphError("label out of range");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const Edge& e = edges[i];
        if (e.a == e.b) throw GraphError("self-loop edge");
        if (e.a < 0 || e.b >= node_count)
            throw DanglingEdgeError("edge endpoint out of range: (" + std::to_string(e.a) + "," +
                                    std::to_string(e.b) + ")");
        if (i > 0 && !(edges[i - 1] < e)) throw GraphError("edges not sorted/unique");
    }
    if (sensitive_index) {
        const int s = *sensitive_index;
        if (s < 0 || s >= feature_dim) throw GraphError("sensitive_index out of range");
        for (int r = 0; r < node_count; ++r) {
            const double v = features(r, s);
            if (v != 0.0 && v != 1.0)
                throw NonBinarySensitiveError("sensitive column is not binary at row " + std::to_string(r));
        }
    }
    if (static_cast<int>(train_mask.size()) != node_count ||
        static_cast<int>(test_mask.size()) != node_count)
        throw DimensionMismatchError("mask length does not match node_count");
    for (int i = 0; i < node_count; ++i)
        if (train_mask[i] && test_mask[i]) throw GraphError("train and test masks overlap");
}

int ComputationSubgraph::local_index(int global_id) const {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), global_id);
    if (it == nodes.end() || *it != global_id) return -1;
    return static_cast<int>(it - nodes.begin());
}

std::vector<std::vector<int>> ComputationSubgraph::local_adjacency() const {
    std::vector<std::vector<int>> adj(nodes.size());
    for (const Edge& e : edges) {
        const int la = local_index(e.a);
        const int lb = local_index(e.b);
        adj[la].push_back(lb);
        adj[lb].push_back(la);
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
    return adj;
}

std::vector<int> ComputationSubgraph::target_neighbors() const {
    std::vector<int> out;
    for (const Edge& e : edges) {
        if (e.a == target) out.push_back(e.b);
        else if (e.b == target) out.push_back(e.a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Vec ComputationSubgraph::target_features() const {
    const int lt = local_index(target);
    const auto r = features.row(lt);
    return Vec(r.begin(), r.end());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{}) return false;
    while (p < e && (*p == ' ' || *p == '\t')) ++p;
    return p == e;
}

bool parse_int(const std::string& s, long& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{}) return false;
    while (p < e && (*p == ' ' || *p == '\t')) ++p;
    return p == e;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void assign_split(Graph& g, double train_ratio, std::uint64_t seed) {
    const int n = g.node_count;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::mix(seed, 0x5EED5EEDULL));
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[i], order[j]);
    }
    const int n_train = static_cast<int>(train_ratio * n);
    g.train_mask.assign(n, false);
    g.test_mask.assign(n, false);
    for (int i = 0; i < n; ++i) {
        if (i < n_train) g.train_mask[order[i]] = true;
        else g.test_mask[order[i]] = true;
    }
}

}  // namespace

Graph load_graph(const std::string& features_path, const std::string& edges_path,
                 const std::string& labels_path, std::optional<int> sensitive_column,
                 const SplitSpec& split) {
    const auto feat_lines = read_lines(features_path);
    if (feat_lines.size() < 2) throw GraphError("features file needs a header and at least one row");
    const int m = static_cast<int>(split_csv_line(feat_lines[0]).size());
    const int n = static_cast<int>(feat_lines.size()) - 1;
    Graph g;
    g.node_count = n;
    g.feature_dim = m;
    g.features = Matrix(n, m);
    for (int r = 0; r < n; ++r) {
        const auto cells = split_csv_line(feat_lines[r + 1]);
        if (static_cast<int>(cells.size()) != m)
            throw DimensionMismatchError("features row " + std::to_string(r) + " has " +
                                         std::to_string(cells.size()) + " columns, expected " +
                                         std::to_string(m));
        for (int c = 0; c < m; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c], v))
                throw GraphError("bad feature value at row " + std::to_string(r));
            g.features(r, c) = v;
        }
    }

    const auto edge_lines = read_lines(edges_path);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < edge_lines.size(); ++i) {
        const auto cells = split_csv_line(edge_lines[i]);
        if (cells.size() != 2)
            throw DimensionMismatchError("edges row " + std::to_string(i) + " needs two columns");
        long a = 0, b = 0;
        if (!parse_int(cells[0], a) || !parse_int(cells[1], b)) {
            if (i == 0) continue;  // header row
            throw GraphError("bad edge value at row " + std::to_string(i));
        }
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw DanglingEdgeError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                    ") references a node outside [0," + std::to_string(n) + ")");
        if (a == b) continue;
        edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);

    const auto label_lines = read_lines(labels_path);
    std::size_t first = 0;
    long tmp = 0;
    if (!label_lines.empty() && !parse_int(label_lines[0], tmp)) first = 1;  // header
    if (static_cast<int>(label_lines.size() - first) != n)
        throw DimensionMismatchError("labels row count does not match features");
    int cmax = 0;
    for (int r = 0; r < n; ++r) {
        long y = 0;
        if (!parse_int(label_lines[first + r], y))
            throw GraphError("bad label at row " + std::to_string(r));
        if (y < 0) throw GraphError("negative label");
        g.labels.push_back(static_cast<int>(y));
        cmax = std::max(cmax, static_cast<int>(y));
    }
    g.class_count = cmax + 1;
    g.sensitive_index = sensitive_column;
    assign_split(g, split.train_ratio, split.seed);
    g.validate();
    return g;
}

Graph generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_per_class <= 0 || cfg.feature_dim <= 0 || cfg.class_count <= 0)
        throw GraphError("synthetic dimensions must be positive");
    if (cfg.intra_edge_prob < 0 || cfg.intra_edge_prob > 1 || cfg.inter_edge_prob < 0 ||
        cfg.inter_edge_prob > 1)
        throw GraphError("edge probabilities must lie in [0,1]");
    if (cfg.intra_edge_prob < cfg.inter_edge_prob)
        throw GraphError("intra_edge_prob must be >= inter_edge_prob");

    const int n = cfg.n_per_class * cfg.class_count;
    const int m = cfg.feature_dim;
    Graph g;
    g.node_count = n;
    g.feature_dim = m;
    g.class_count = cfg.class_count;
    g.features = Matrix(n, m);
    g.labels.resize(n);
    for (int i = 0; i < n; ++i) g.labels[i] = i / cfg.n_per_class;

    Rng rng(Rng::mix(cfg.seed, 0x533D2ULL));
    // Gaussian features with a class-dependent mean pattern on all but the
    // sensitive column (the last one).
    for (int i = 0; i < n; ++i) {
        const int c = g.labels[i];
        for (int j = 0; j < m; ++j) {
            double mean = 0.0;
            if (j != m - 1 && (j % cfg.class_count) == c) mean = cfg.class_mean_shift;
            g.features(i, j) = rng.normal(mean, 1.0);
        }
    }
    if (m >= 1) {
        g.sensitive_index = m - 1;
        for (int i = 0; i < n; ++i) {
            const int c = g.labels[i];
            const double bias = (c == 0) ? cfg.sensitive_bias : -cfg.sensitive_bias;
            const double p = std::clamp(0.5 + bias, 0.0, 1.0);
            g.features(i, m - 1) = rng.uniform() < p ? 1.0 : 0.0;
        }
    }

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = g.labels[i] == g.labels[j] ? cfg.intra_edge_prob : cfg.inter_edge_prob;
            if (rng.uniform() < p) g.edges.emplace_back(i, j);
        }
    }
    std::sort(g.edges.begin(), g.edges.end());

    // stratified split so every class appears in the train mask
    g.train_mask.assign(n, false);
    g.test_mask.assign(n, false);
    for (int c = 0; c < cfg.class_count; ++c) {
        std::vector<int> members;
        for (int i = 0; i < n; ++i)
            if (g.labels[i] == c) members.push_back(i);
        for (int i = static_cast<int>(members.size()) - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(members[i], members[j]);
        }
        const int n_train = static_cast<int>(cfg.train_ratio * members.size());
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (static_cast<int>(i) < n_train) g.train_mask[members[i]] = true;
            else g.test_mask[members[i]] = true;
        }
    }
    g.validate();
    return g;
}

ComputationSubgraph computation_subgraph(const Graph& g, int u, int hops) {
    if (u < 0 || u >= g.node_count) throw GraphError("target node out of range");
    const auto adj = g.adjacency();
    std::vector<int> dist(g.node_count, -1);
    std::deque<int> queue{u};
    dist[u] = 0;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (dist[v] >= hops) continue;
        for (int w : adj[v]) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    ComputationSubgraph sg;
    sg.target = u;
    sg.hop_count = hops;
    for (int i = 0; i < g.node_count; ++i)
        if (dist[i] >= 0) sg.nodes.push_back(i);
    for (const Edge& e : g.edges)
        if (dist[e.a] >= 0 && dist[e.b] >= 0) sg.edges.push_back(e);
    sg.features = Matrix(static_cast<int>(sg.nodes.size()), g.feature_dim);
    for (std::size_t i = 0; i < sg.nodes.size(); ++i)
        for (int c = 0; c < g.feature_dim; ++c) sg.features(static_cast<int>(i), c) = g.features(sg.nodes[i], c);
    return sg;
}

}  // namespace probe
