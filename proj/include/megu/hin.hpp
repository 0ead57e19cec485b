#pragma once

#include <json.hpp>

#include "megu/graph.hpp"

namespace megu {

/// The adaptively selected high-influence neighborhood.
struct HinSelection {
    std::vector<NodeId> nodes;      // sorted
    std::vector<double> distances;  // length n; 1.0 on the unlearning entities themselves
    double final_epsilon = 0.0;
    std::size_t passes = 0;
};

/// Forward and inverse l-step feature smoothing on the ORIGINAL topology.
/// X' equals X except rows of delta_nodes, which become 1 - X_j.
inline std::pair<Matrix, Matrix> forward_inverse_propagation(const NormalizedAdjacency& adj,
                                                             const Matrix& x,
                                                             const std::vector<NodeId>& delta_nodes,
                                                             std::size_t l) {
    if (l < 1) throw std::invalid_argument("propagation depth must be >= 1");
    Matrix x_inv = x;
    for (NodeId v : delta_nodes) {
        if (v >= x.rows) throw std::invalid_argument("delta node out of range");
        for (std::size_t c = 0; c < x.cols; ++c) x_inv(v, c) = 1.0 - x(v, c);
    }
    Matrix fwd = x, inv = std::move(x_inv);
    for (std::size_t i = 0; i < l; ++i) {
        fwd = spmm(adj, fwd);
        inv = spmm(adj, inv);
    }
    return {std::move(fwd), std::move(inv)};
}

/// Cosine similarity per node between the two smoothed feature rows.
/// Bitwise-equal rows (nodes out of propagation reach) and zero-norm rows
/// score exactly 1, i.e. unaffected.
inline std::vector<double> influence_distance(const Matrix& fwd, const Matrix& inv,
                                              const std::vector<NodeId>& delta_nodes) {
    check_shape(fwd, inv, "influence_distance");
    std::vector<double> dist(fwd.rows, 1.0);
    std::vector<bool> is_delta(fwd.rows, false);
    for (NodeId v : delta_nodes) is_delta[v] = true;
    for (std::size_t k = 0; k < fwd.rows; ++k) {
        if (is_delta[k]) continue;
        auto a = fwd.row(k);
        auto b = inv.row(k);
        bool identical = true;
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) {
            identical = identical && (a[c] == b[c]);
            dot += a[c] * b[c];
            na += a[c] * a[c];
            nb += b[c] * b[c];
        }
        if (identical || na == 0.0 || nb == 0.0) continue;  // keep 1.0
        dist[k] = dot / (std::sqrt(na) * std::sqrt(nb));
    }
    return dist;
}

/// Adaptive threshold loop: grow HIN with nodes whose similarity is <= eps
/// and that lie within l hops of an unlearning entity; raise eps by 0.1 while
/// the maximum selected similarity keeps changing. If no node is ever
/// selected, eps is capped at 1.0 and the empty set is returned.
inline HinSelection select_hin(const std::vector<double>& dist, const GraphBundle& g,
                               const std::vector<NodeId>& delta_nodes, std::size_t l) {
    HinSelection sel;
    sel.distances = dist;
    if (delta_nodes.empty()) return sel;

    auto candidates = k_hop_neighborhood(g, delta_nodes, l);
    std::vector<bool> is_delta(g.n, false);
    for (NodeId v : delta_nodes) is_delta[v] = true;

    std::vector<bool> in_hin(g.n, false);
    double omega = 0.0;
    double eps = 0.1;
    bool again = true;
    while (again) {
        ++sel.passes;
        for (NodeId v : candidates)
            if (!is_delta[v] && !in_hin[v] && dist[v] <= eps) {
                in_hin[v] = true;
                sel.nodes.push_back(v);
            }
        again = false;
        if (sel.nodes.empty()) {
            // the maximum over an empty set is undefined: keep raising eps,
            // but give up once it exceeds 1 (cosine similarity's maximum)
            eps += 0.1;
            if (eps <= 1.0) again = true;
        } else {
            double d_max = -2.0;
            for (NodeId v : sel.nodes) d_max = std::max(d_max, dist[v]);
            if (d_max != omega) {
                omega = d_max;
                eps += 0.1;
                again = true;
            }
        }
    }
    sel.final_epsilon = eps;
    std::sort(sel.nodes.begin(), sel.nodes.end());
    return sel;
}

inline nlohmann::ordered_json hin_to_json(const HinSelection& sel) {
    return {{"nodes", sel.nodes}, {"final_epsilon", sel.final_epsilon}, {"passes", sel.passes}};
}

}  // namespace megu
