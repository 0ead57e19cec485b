#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "megu/eval.hpp"
#include "test_util.hpp"

using namespace megu;
namespace tu = megu::testutil;

TEST_CASE("micro_f1: pooled confusion oracle and accuracy identity") {
    std::vector<int> pred{0, 1, 2, 1, 0, 2};
    std::vector<int> truth{0, 1, 1, 1, 2, 2};
    std::vector<bool> mask(6, true);
    // tp=4, fp=fn=2 -> 2*4/(8+2+2)
    CHECK(micro_f1(pred, truth, mask) == doctest::Approx(8.0 / 12.0).epsilon(1e-15));

    // single-label micro F1 equals accuracy on random instances
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 5 + rng() % 50;
        std::vector<int> p(n), t(n);
        std::vector<bool> m(n);
        std::size_t correct = 0, kept = 0;
        for (std::size_t v = 0; v < n; ++v) {
            p[v] = static_cast<int>(rng() % 4);
            t[v] = static_cast<int>(rng() % 4);
            m[v] = rng() % 2 == 0;
            if (m[v]) {
                ++kept;
                if (p[v] == t[v]) ++correct;
            }
        }
        if (kept == 0) continue;
        CHECK(micro_f1(p, t, m) ==
              doctest::Approx(static_cast<double>(correct) / static_cast<double>(kept))
                  .epsilon(1e-15));
    }

    CHECK_THROWS_WITH_AS(micro_f1(pred, truth, std::vector<bool>(6, false)), "micro_f1: empty mask",
                         std::invalid_argument);
    CHECK_THROWS_AS(micro_f1(pred, truth, std::vector<bool>(5, true)), std::invalid_argument);
}

TEST_CASE("argmax_rows picks the first maximum on ties") {
    Matrix m(2, 3);
    m(0, 1) = 5.0;
    m(1, 0) = 2.0;
    m(1, 2) = 2.0;
    auto a = argmax_rows(m);
    CHECK(a[0] == 1);
    CHECK(a[1] == 0);
}

TEST_CASE("PhaseTimer: times sum to total and phases are queryable") {
    PhaseTimer timer;
    timer.time("a", [] {});
    timer.time("b", [] {});
    auto j = timer.to_json();
    CHECK(j["total"].get<double>() ==
          doctest::Approx(j["a"].get<double>() + j["b"].get<double>()).epsilon(1e-12));
    CHECK(timer.get("a") >= 0.0);
    CHECK_THROWS_AS(timer.get("missing"), std::logic_error);
}

TEST_CASE("retrain_oracle: empty edge request reproduces plain pretraining") {
    auto g = tu::random_bundle(25, 3, 2, 0.25, 3);
    auto adj = normalize_adjacency(g);
    UnlearnRequest r;
    r.level = RequestLevel::Edge;  // keeps the full supervision mask
    OptimizerConfig cfg{0.1, 40, 0.0};
    auto oracle = retrain_oracle(g, r, BackboneKind::SGC, 2, 0, cfg, 3);
    auto plain = pretrain(g, adj, BackboneKind::SGC, 2, 0, cfg, 3);
    for (std::size_t k = 0; k < plain.params.weights.size(); ++k)
        CHECK(oracle.params.weights[k].data == plain.params.weights[k].data);
}

TEST_CASE("retrain_oracle drops node-level entities from supervision") {
    auto g = tu::random_bundle(20, 3, 2, 0.3, 4);
    auto r = sample_request(g, RequestLevel::Node, 0.3, 5);
    // training with the entities' rows zeroed and removed from supervision
    auto oracle = retrain_oracle(g, r, BackboneKind::SGC, 2, 0, {0.1, 30, 0.0}, 4);
    auto residual = apply_request(g, r);
    std::vector<std::uint32_t> rows;
    for (std::uint32_t v = 0; v < g.n; ++v)
        if (g.train_mask[v] &&
            std::find(r.delta_nodes.begin(), r.delta_nodes.end(), v) == r.delta_nodes.end())
            rows.push_back(v);
    auto manual = pretrain_on_rows(g, residual.adj_star, residual.x_star, rows, BackboneKind::SGC,
                                   2, 0, {0.1, 30, 0.0}, 4);
    for (std::size_t k = 0; k < manual.params.weights.size(); ++k)
        CHECK(oracle.params.weights[k].data == manual.params.weights[k].data);
}

TEST_CASE("run_experiment: deterministic report modulo wall-clock times") {
    Manifest m;
    SbmConfig sbm;
    sbm.block_sizes = {20, 20, 20};
    sbm.p_in = 0.3;
    sbm.p_out = 0.02;
    sbm.signal = 1.5;
    sbm.noise_scale = 0.5;
    sbm.seed = 11;
    m.sbm = sbm;
    m.backbone = BackboneKind::GCN2;
    m.depth = 2;
    m.hidden = 8;
    m.pretrain = {0.1, 60, 0.0};
    m.level = RequestLevel::Node;
    m.ratio = 0.1;
    m.seed = 11;
    m.megu.epochs = 30;
    m.with_retrain_oracle = true;

    auto a = run_experiment(m);
    auto b = run_experiment(m);
    CHECK(report_without_times(a).dump() == report_without_times(b).dump());

    CHECK(a.contains("times"));
    CHECK(a["times"].contains("pretrain"));
    CHECK(a["times"].contains("retrain"));
    CHECK(a["scores"].contains("retrain_f1_test"));
    CHECK(a["scores"]["micro_f1_test"].get<double>() >= 0.0);
    CHECK(a["scores"]["micro_f1_test"].get<double>() <= 1.0);
    CHECK(a["traces"]["megu_loss"].size() == 30);
}

TEST_CASE("run_experiment marks zero-epoch runs as no-ops") {
    Manifest m;
    SbmConfig sbm;
    sbm.block_sizes = {15, 15};
    sbm.p_in = 0.4;
    sbm.p_out = 0.05;
    sbm.signal = 2.0;
    sbm.noise_scale = 0.4;
    sbm.seed = 12;
    m.sbm = sbm;
    m.backbone = BackboneKind::SGC;
    m.pretrain = {0.1, 40, 0.0};
    m.level = RequestLevel::Feature;
    m.ratio = 0.2;
    m.seed = 12;
    m.megu.epochs = 0;

    auto report = run_experiment(m);
    CHECK(report["note"] == "no-op unlearning");
    CHECK(report["traces"]["megu_loss"].empty());
}

TEST_CASE("edge_attack_experiment returns one row per ratio with sane fields") {
    SbmConfig cfg;
    cfg.block_sizes = {25, 25};
    cfg.p_in = 0.4;
    cfg.p_out = 0.02;
    cfg.signal = 2.0;
    cfg.noise_scale = 0.4;
    cfg.seed = 13;
    auto g = generate_sbm(cfg);
    MeguConfig mc;
    mc.epochs = 20;
    auto rows = edge_attack_experiment(g, {0.1, 0.3}, BackboneKind::SGC, 2, 0, {0.1, 60, 0.0}, mc,
                                       13);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].noise_ratio == 0.1);
    CHECK(rows[1].noise_ratio == 0.3);
    for (const auto& row : rows) {
        CHECK(row.vanilla_f1 >= 0.0);
        CHECK(row.vanilla_f1 <= 1.0);
        CHECK(row.megu_f1 >= 0.0);
        CHECK(row.megu_f1 <= 1.0);
        CHECK(std::isfinite(row.forgetting_ce_before));
        CHECK(std::isfinite(row.forgetting_ce_after));
    }
}

TEST_CASE("worker_count reads MEGU_THREADS and parallel_for_each covers every item") {
    setenv("MEGU_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    std::vector<int> items{1, 2, 3, 4, 5, 6, 7};
    std::vector<std::atomic<int>> hits(items.size());
    parallel_for_each(items, [&](std::size_t i, int item) {
        hits[i].fetch_add(item);
    });
    for (std::size_t i = 0; i < items.size(); ++i) CHECK(hits[i].load() == items[i]);

    setenv("MEGU_THREADS", "garbage", 1);
    CHECK(worker_count() == 1);
    unsetenv("MEGU_THREADS");
    CHECK(worker_count() == 1);
}
