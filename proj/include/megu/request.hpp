#pragma once

#include <random>
#include <set>

#include <json.hpp>

#include "megu/graph.hpp"

namespace megu {

enum class RequestLevel { Feature, Node, Edge };

inline std::string to_string(RequestLevel l) {
    switch (l) {
        case RequestLevel::Feature: return "feature";
        case RequestLevel::Node: return "node";
        case RequestLevel::Edge: return "edge";
    }
    throw std::logic_error("bad level");
}

inline RequestLevel request_level_from_string(const std::string& s) {
    if (s == "feature") return RequestLevel::Feature;
    if (s == "node") return RequestLevel::Node;
    if (s == "edge") return RequestLevel::Edge;
    throw std::invalid_argument("unknown request level: " + s);
}

/// An unlearning request: the entities to forget. delta_nodes is the entity
/// set at every level; delta_edges is populated only for edge requests and
/// delta_nodes then equals the endpoint set.
struct UnlearnRequest {
    RequestLevel level = RequestLevel::Node;
    std::vector<NodeId> delta_nodes;
    std::vector<Edge> delta_edges;
    double ratio = 0.1;
    std::uint64_t seed = 0;
    double feature_mask_ratio = 1.0;  // fraction of feature dims zeroed at Feature level
};

/// The graph after the request is applied. Nodes are never reindexed; node
/// unlearning isolates them instead.
struct ResidualGraph {
    NormalizedAdjacency adj_star;
    Matrix x_star;
    std::vector<Edge> edges_star;
    std::vector<bool> retained;  // false exactly on delta_nodes
};

inline UnlearnRequest sample_request(const GraphBundle& g, RequestLevel level, double ratio,
                                     std::uint64_t seed) {
    if (ratio <= 0.0 || ratio > 1.0) throw std::invalid_argument("ratio must be in (0,1]");
    UnlearnRequest r;
    r.level = level;
    r.ratio = ratio;
    r.seed = seed;
    std::mt19937_64 rng(seed);
    if (level == RequestLevel::Edge) {
        const std::size_t count = static_cast<std::size_t>(ratio * static_cast<double>(g.num_edges()));
        if (count == 0) throw std::invalid_argument("empty request");
        std::vector<std::size_t> idx(g.num_edges());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(count);
        std::sort(idx.begin(), idx.end());
        std::set<NodeId> endpoints;
        for (auto i : idx) {
            r.delta_edges.push_back(g.edges[i]);
            endpoints.insert(g.edges[i].first);
            endpoints.insert(g.edges[i].second);
        }
        r.delta_nodes.assign(endpoints.begin(), endpoints.end());
    } else {
        auto train = g.train_nodes();
        if (train.empty()) throw std::invalid_argument("empty train set");
        const std::size_t count = static_cast<std::size_t>(ratio * static_cast<double>(train.size()));
        if (count == 0) throw std::invalid_argument("empty request");
        std::shuffle(train.begin(), train.end(), rng);
        train.resize(count);
        std::sort(train.begin(), train.end());
        r.delta_nodes = std::move(train);
    }
    return r;
}

inline ResidualGraph apply_request(const GraphBundle& g, const UnlearnRequest& r) {
    ResidualGraph res;
    res.retained.assign(g.n, true);
    for (NodeId v : r.delta_nodes) {
        if (v >= g.n) throw std::invalid_argument("request node out of range");
        res.retained[v] = false;
    }
    res.x_star = g.X;
    std::vector<bool> is_delta(g.n, false);
    for (NodeId v : r.delta_nodes) is_delta[v] = true;

    switch (r.level) {
        case RequestLevel::Feature: {
            res.edges_star = g.edges;
            const auto masked = static_cast<std::size_t>(r.feature_mask_ratio * static_cast<double>(g.f));
            for (NodeId v : r.delta_nodes)
                for (std::size_t c = 0; c < masked; ++c) res.x_star(v, c) = 0.0;
            break;
        }
        case RequestLevel::Node: {
            for (const auto& e : g.edges)
                if (!is_delta[e.first] && !is_delta[e.second]) res.edges_star.push_back(e);
            for (NodeId v : r.delta_nodes)
                for (std::size_t c = 0; c < g.f; ++c) res.x_star(v, c) = 0.0;
            break;
        }
        case RequestLevel::Edge: {
            std::set<Edge> removed(r.delta_edges.begin(), r.delta_edges.end());
            for (const auto& e : g.edges)
                if (!removed.erase(make_edge(e.first, e.second))) res.edges_star.push_back(e);
            if (!removed.empty()) throw std::invalid_argument("request edge not present in graph");
            break;
        }
    }
    res.adj_star = normalize_adjacency(g.n, res.edges_star);
    return res;
}

/// Adds floor(ratio * m) edges between uniformly sampled pairs with differing
/// labels, skipping duplicates. Returns the noisy graph and the edge-level
/// request that identifies exactly the injected edges.
inline std::pair<GraphBundle, UnlearnRequest> inject_noisy_edges(const GraphBundle& g, double ratio,
                                                                 std::uint64_t seed) {
    if (ratio < 0.0) throw std::invalid_argument("ratio must be nonnegative");
    if (g.num_classes < 2) throw std::invalid_argument("need at least two classes");
    GraphBundle noisy = g;
    UnlearnRequest r;
    r.level = RequestLevel::Edge;
    r.ratio = ratio;
    r.seed = seed;
    const std::size_t count = static_cast<std::size_t>(ratio * static_cast<double>(g.num_edges()));
    std::set<Edge> existing(g.edges.begin(), g.edges.end());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(g.n - 1));
    std::set<NodeId> endpoints;
    const std::size_t max_tries = 1000 * (count + 1);
    std::size_t tries = 0;
    while (r.delta_edges.size() < count) {
        if (++tries > max_tries) throw std::runtime_error("inject_noisy_edges: cannot place edges");
        NodeId a = pick(rng), b = pick(rng);
        if (a == b || g.y[a] == g.y[b]) continue;
        Edge e = make_edge(a, b);
        if (!existing.insert(e).second) continue;
        noisy.edges.push_back(e);
        r.delta_edges.push_back(e);
        endpoints.insert(e.first);
        endpoints.insert(e.second);
    }
    r.delta_nodes.assign(endpoints.begin(), endpoints.end());
    return {std::move(noisy), std::move(r)};
}

inline nlohmann::ordered_json request_to_json(const UnlearnRequest& r) {
    nlohmann::ordered_json j;
    j["level"] = to_string(r.level);
    j["ratio"] = r.ratio;
    j["seed"] = r.seed;
    j["delta_nodes"] = r.delta_nodes;
    auto edges = nlohmann::json::array();
    for (const auto& [a, b] : r.delta_edges) edges.push_back({a, b});
    j["delta_edges"] = edges;
    j["feature_mask_ratio"] = r.feature_mask_ratio;
    return j;
}

inline UnlearnRequest request_from_json(const nlohmann::json& j) {
    UnlearnRequest r;
    r.level = request_level_from_string(j.at("level").get<std::string>());
    r.ratio = j.at("ratio").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.delta_nodes = j.at("delta_nodes").get<std::vector<NodeId>>();
    for (const auto& e : j.at("delta_edges"))
        r.delta_edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    if (j.contains("feature_mask_ratio")) r.feature_mask_ratio = j["feature_mask_ratio"].get<double>();
    return r;
}

}  // namespace megu
