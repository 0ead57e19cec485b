#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "megu/matrix.hpp"

namespace megu {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // stored with first < second

/// A dataset: undirected graph, node features, labels and the train/test split.
struct GraphBundle {
    std::size_t n = 0;
    std::size_t f = 0;
    std::size_t num_classes = 0;
    std::vector<Edge> edges;  // each unordered pair once, no self-loops
    Matrix X;                 // n x f
    std::vector<int> y;       // length n, values in [0, num_classes)
    std::vector<bool> train_mask;
    std::vector<bool> test_mask;

    std::size_t num_edges() const { return edges.size(); }

    std::vector<NodeId> train_nodes() const {
        std::vector<NodeId> out;
        for (NodeId v = 0; v < n; ++v)
            if (train_mask[v]) out.push_back(v);
        return out;
    }
};

inline Edge make_edge(NodeId a, NodeId b) {
    return a < b ? Edge{a, b} : Edge{b, a};
}

/// Validates bundle invariants; throws std::invalid_argument on the first violation.
inline void validate_bundle(const GraphBundle& g) {
    if (g.X.rows != g.n || g.X.cols != g.f) throw std::invalid_argument("feature matrix shape mismatch");
    if (g.y.size() != g.n) throw std::invalid_argument("label vector length mismatch");
    if (g.train_mask.size() != g.n || g.test_mask.size() != g.n)
        throw std::invalid_argument("mask length mismatch");
    if (!g.X.all_finite()) throw std::invalid_argument("non-finite feature value");
    for (std::size_t v = 0; v < g.n; ++v) {
        if (g.y[v] < 0 || static_cast<std::size_t>(g.y[v]) >= g.num_classes)
            throw std::invalid_argument("label out of range at node " + std::to_string(v));
        if (g.train_mask[v] && g.test_mask[v])
            throw std::invalid_argument("mask overlap at node " + std::to_string(v));
    }
    std::set<Edge> seen;
    for (const auto& [a, b] : g.edges) {
        if (a == b) throw std::invalid_argument("self-loop in edge list");
        if (a >= g.n || b >= g.n) throw std::invalid_argument("edge endpoint out of range");
        if (!seen.insert(make_edge(a, b)).second) throw std::invalid_argument("duplicate edge");
    }
}

/// CSR store of the self-looped, symmetrically normalized adjacency
/// A_hat = D~^{-1/2} (A + I) D~^{-1/2}, together with the self-looped degrees.
struct NormalizedAdjacency {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // length n+1
    std::vector<NodeId> col_idx;       // columns strictly increasing per row
    std::vector<double> values;        // value(i,j) = 1/sqrt(d[i]*d[j])
    std::vector<double> degree;        // self-looped degree d~, length n
};

inline NormalizedAdjacency normalize_adjacency(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::vector<NodeId>> nbr(n);
    for (const auto& [a, b] : edges) {
        nbr[a].push_back(b);
        nbr[b].push_back(a);
    }
    NormalizedAdjacency adj;
    adj.n = n;
    adj.degree.resize(n);
    adj.row_ptr.resize(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        nbr[i].push_back(static_cast<NodeId>(i));  // self-loop
        std::sort(nbr[i].begin(), nbr[i].end());
        adj.degree[i] = static_cast<double>(nbr[i].size());
        adj.row_ptr[i + 1] = adj.row_ptr[i] + nbr[i].size();
    }
    adj.col_idx.reserve(adj.row_ptr[n]);
    adj.values.reserve(adj.row_ptr[n]);
    for (std::size_t i = 0; i < n; ++i)
        for (NodeId j : nbr[i]) {
            adj.col_idx.push_back(j);
            adj.values.push_back(1.0 / std::sqrt(adj.degree[i] * adj.degree[j]));
        }
    return adj;
}

inline NormalizedAdjacency normalize_adjacency(const GraphBundle& g) {
    return normalize_adjacency(g.n, g.edges);
}

/// A_hat * M. Row-major, fixed per-row summation order in CSR column order,
/// so results are bit-reproducible regardless of caller-side parallelism.
inline Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m) {
    if (m.rows != adj.n) throw std::invalid_argument("spmm: row count mismatch");
    Matrix out(adj.n, m.cols);
    for (std::size_t i = 0; i < adj.n; ++i) {
        double* orow = out.data.data() + i * out.cols;
        for (std::size_t e = adj.row_ptr[i]; e < adj.row_ptr[i + 1]; ++e) {
            const double w = adj.values[e];
            const double* mrow = m.data.data() + adj.col_idx[e] * m.cols;
            for (std::size_t c = 0; c < m.cols; ++c) orow[c] += w * mrow[c];
        }
    }
    return out;
}

/// Nodes reachable from any seed within <= l edges, seeds excluded.
inline std::vector<NodeId> k_hop_neighborhood(const GraphBundle& g,
                                              const std::vector<NodeId>& seeds,
                                              std::size_t l) {
    std::vector<std::vector<NodeId>> nbr(g.n);
    for (const auto& [a, b] : g.edges) {
        nbr[a].push_back(b);
        nbr[b].push_back(a);
    }
    std::vector<int> dist(g.n, -1);
    std::queue<NodeId> q;
    for (NodeId s : seeds) {
        if (s >= g.n) throw std::invalid_argument("k_hop_neighborhood: seed out of range");
        if (dist[s] < 0) {
            dist[s] = 0;
            q.push(s);
        }
    }
    std::vector<NodeId> out;
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop();
        if (static_cast<std::size_t>(dist[u]) == l) continue;
        for (NodeId v : nbr[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                out.push_back(v);
                q.push(v);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- bundle directory I/O ------------------------------------------------
// meta.json {"n","f","num_classes"}; edges.tsv "i\tj" with i<j;
// features.csv n x f; labels.csv one int per line; masks.json {"train","test"}.

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("missing file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline GraphBundle load_bundle(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    GraphBundle g;
    auto meta = nlohmann::json::parse(detail::read_file(dir / "meta.json"));
    g.n = meta.at("n").get<std::size_t>();
    g.f = meta.at("f").get<std::size_t>();
    g.num_classes = meta.at("num_classes").get<std::size_t>();

    {
        std::istringstream in(detail::read_file(dir / "edges.tsv"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            long a, b;
            char tab;
            if (!(ls >> a) || !ls.get(tab) || !(ls >> b))
                throw std::runtime_error("malformed edge row: " + line);
            if (a == b) throw std::runtime_error("self-loop in edge list");
            g.edges.emplace_back(static_cast<NodeId>(std::min(a, b)),
                                 static_cast<NodeId>(std::max(a, b)));
        }
    }

    g.X = Matrix(g.n, g.f);
    {
        std::istringstream in(detail::read_file(dir / "features.csv"));
        std::string line;
        std::size_t r = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (r >= g.n) throw std::runtime_error("features.csv: too many rows");
            std::size_t c = 0, pos = 0;
            while (pos <= line.size()) {
                std::size_t next = line.find(',', pos);
                if (next == std::string::npos) next = line.size();
                if (c >= g.f) throw std::runtime_error("features.csv: too many columns");
                g.X(r, c) = std::stod(line.substr(pos, next - pos));
                ++c;
                pos = next + 1;
            }
            if (c != g.f) throw std::runtime_error("features.csv: column count mismatch");
            ++r;
        }
        if (r != g.n) throw std::runtime_error("features.csv: row count mismatch");
    }

    {
        std::istringstream in(detail::read_file(dir / "labels.csv"));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) g.y.push_back(std::stoi(line));
        if (g.y.size() != g.n) throw std::runtime_error("labels.csv: row count mismatch");
    }

    {
        auto masks = nlohmann::json::parse(detail::read_file(dir / "masks.json"));
        g.train_mask.assign(g.n, false);
        g.test_mask.assign(g.n, false);
        for (auto v : masks.at("train").get<std::vector<std::size_t>>()) {
            if (v >= g.n) throw std::runtime_error("masks.json: train id out of range");
            g.train_mask[v] = true;
        }
        for (auto v : masks.at("test").get<std::vector<std::size_t>>()) {
            if (v >= g.n) throw std::runtime_error("masks.json: test id out of range");
            if (g.train_mask[v]) throw std::runtime_error("mask overlap");
            g.test_mask[v] = true;
        }
    }

    validate_bundle(g);
    return g;
}

inline void save_bundle(const GraphBundle& g, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    validate_bundle(g);
    fs::create_directories(dir);

    {
        nlohmann::ordered_json meta{{"n", g.n}, {"f", g.f}, {"num_classes", g.num_classes}};
        std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "edges.tsv");
        for (const auto& [a, b] : g.edges) out << a << '\t' << b << '\n';
    }
    {
        std::ofstream out(dir / "features.csv");
        for (std::size_t r = 0; r < g.n; ++r) {
            for (std::size_t c = 0; c < g.f; ++c) {
                if (c) out << ',';
                out << detail::format_double(g.X(r, c));
            }
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "labels.csv");
        for (int v : g.y) out << v << '\n';
    }
    {
        std::vector<std::size_t> train, test;
        for (std::size_t v = 0; v < g.n; ++v) {
            if (g.train_mask[v]) train.push_back(v);
            if (g.test_mask[v]) test.push_back(v);
        }
        nlohmann::ordered_json masks{{"train", train}, {"test", test}};
        std::ofstream(dir / "masks.json") << masks.dump(2) << "\n";
    }
}

}  // namespace megu
