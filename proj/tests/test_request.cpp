#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "megu/request.hpp"
#include "test_util.hpp"

using namespace megu;
namespace tu = megu::testutil;

TEST_CASE("sample_request: counts, determinism, empty-request error") {
    auto g = tu::random_bundle(40, 3, 2, 0.2, 1);
    const auto n_train = g.train_nodes().size();

    auto r = sample_request(g, RequestLevel::Node, 0.25, 7);
    CHECK(r.delta_nodes.size() == n_train / 4);
    for (NodeId v : r.delta_nodes) CHECK(g.train_mask[v]);

    auto r2 = sample_request(g, RequestLevel::Node, 0.25, 7);
    CHECK(r.delta_nodes == r2.delta_nodes);

    CHECK_THROWS_WITH_AS(sample_request(g, RequestLevel::Node, 1e-9, 0), "empty request",
                         std::invalid_argument);
    CHECK_THROWS_AS(sample_request(g, RequestLevel::Node, 1.5, 0), std::invalid_argument);
}

TEST_CASE("sample_request node count matches the 10%-of-train protocol") {
    // train set of 2166 nodes at ratio 0.1 must yield exactly 216 entities
    GraphBundle g;
    g.n = 2708;
    g.f = 1;
    g.num_classes = 2;
    g.X = Matrix(g.n, 1);
    g.y.assign(g.n, 0);
    for (std::size_t v = 0; v < g.n; ++v) g.y[v] = static_cast<int>(v % 2);
    g.train_mask.assign(g.n, false);
    g.test_mask.assign(g.n, false);
    for (std::size_t v = 0; v < 2166; ++v) g.train_mask[v] = true;
    auto r = sample_request(g, RequestLevel::Node, 0.1, 0);
    CHECK(r.delta_nodes.size() == 216);
}

TEST_CASE("sample_request edge level: endpoints become the entity set") {
    auto g = tu::random_bundle(30, 2, 2, 0.25, 2);
    auto r = sample_request(g, RequestLevel::Edge, 0.2, 3);
    CHECK(r.delta_edges.size() == g.num_edges() / 5);
    std::set<NodeId> endpoints;
    for (const auto& [a, b] : r.delta_edges) {
        endpoints.insert(a);
        endpoints.insert(b);
    }
    CHECK(r.delta_nodes == std::vector<NodeId>(endpoints.begin(), endpoints.end()));
}

TEST_CASE("apply_request: feature level zeroes rows, keeps topology") {
    auto g = tu::random_bundle(12, 4, 2, 0.3, 4);
    auto r = sample_request(g, RequestLevel::Feature, 0.3, 5);
    auto res = apply_request(g, r);
    CHECK(res.edges_star == g.edges);
    for (NodeId v : r.delta_nodes)
        for (std::size_t c = 0; c < g.f; ++c) CHECK(res.x_star(v, c) == 0.0);
    // partial masking via the mask-ratio knob
    r.feature_mask_ratio = 0.5;
    auto half = apply_request(g, r);
    for (NodeId v : r.delta_nodes) {
        CHECK(half.x_star(v, 0) == 0.0);
        CHECK(half.x_star(v, 1) == 0.0);
        CHECK(half.x_star(v, 2) == g.X(v, 2));
    }
}

TEST_CASE("apply_request: node level isolates entities, degree becomes 1") {
    auto g = tu::random_bundle(15, 3, 2, 0.4, 6);
    auto r = sample_request(g, RequestLevel::Node, 0.3, 7);
    auto res = apply_request(g, r);
    for (const auto& [a, b] : res.edges_star) {
        CHECK(res.retained[a]);
        CHECK(res.retained[b]);
    }
    for (NodeId v : r.delta_nodes) {
        CHECK(res.adj_star.degree[v] == 1.0);  // self-loop only
        for (std::size_t c = 0; c < g.f; ++c) CHECK(res.x_star(v, c) == 0.0);
    }
    // masks, labels, n, f untouched
    CHECK(res.x_star.rows == g.n);
}

TEST_CASE("apply_request: node level on isolated node leaves adjacency unchanged") {
    GraphBundle g = tu::random_bundle(5, 2, 2, 0.0, 0);
    g.edges = {{0, 1}};
    UnlearnRequest r;
    r.level = RequestLevel::Node;
    r.delta_nodes = {3};
    auto res = apply_request(g, r);
    CHECK(res.edges_star == g.edges);
}

TEST_CASE("apply_request: edge level removes exactly the requested edges") {
    GraphBundle g = tu::random_bundle(3, 2, 2, 0.0, 0);
    g.edges = {{0, 1}, {0, 2}, {1, 2}};  // triangle
    UnlearnRequest r;
    r.level = RequestLevel::Edge;
    r.delta_edges = {{0, 1}};
    r.delta_nodes = {0, 1};
    auto res = apply_request(g, r);
    CHECK(res.edges_star.size() == 2);
    CHECK(res.adj_star.degree[0] == 2.0);
    CHECK(res.adj_star.degree[1] == 2.0);
    CHECK(res.adj_star.degree[2] == 3.0);
    CHECK(max_abs_diff(res.x_star, g.X) == 0.0);

    r.delta_edges = {{0, 4}};
    CHECK_THROWS_AS(apply_request(g, r), std::invalid_argument);
}

TEST_CASE("inject_noisy_edges: counts, label constraint, exact inversion") {
    auto g = tu::random_bundle(30, 2, 3, 0.25, 9);
    const std::size_t m = g.num_edges();

    auto [same, empty] = inject_noisy_edges(g, 0.0, 1);
    CHECK(same.edges == g.edges);
    CHECK(empty.delta_edges.empty());

    auto [noisy, r] = inject_noisy_edges(g, 0.3, 1);
    CHECK(r.delta_edges.size() == static_cast<std::size_t>(0.3 * static_cast<double>(m)));
    CHECK(noisy.num_edges() == m + r.delta_edges.size());
    for (const auto& [a, b] : r.delta_edges) CHECK(noisy.y[a] != noisy.y[b]);

    // applying the returned request reproduces the original edge set
    auto res = apply_request(noisy, r);
    auto restored = res.edges_star;
    auto original = g.edges;
    std::sort(restored.begin(), restored.end());
    std::sort(original.begin(), original.end());
    CHECK(restored == original);
}

TEST_CASE("request JSON round-trip") {
    auto g = tu::random_bundle(20, 2, 2, 0.3, 10);
    auto r = sample_request(g, RequestLevel::Edge, 0.2, 11);
    auto r2 = request_from_json(nlohmann::json::parse(request_to_json(r).dump()));
    CHECK(r2.level == r.level);
    CHECK(r2.delta_nodes == r.delta_nodes);
    CHECK(r2.delta_edges == r.delta_edges);
    CHECK(r2.seed == r.seed);
    CHECK(r2.ratio == r.ratio);
}
