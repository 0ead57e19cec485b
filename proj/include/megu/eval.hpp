#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "megu/manifest.hpp"

namespace megu {

inline std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto r = m.row(i);
        std::size_t best = 0;
        for (std::size_t c = 1; c < r.size(); ++c)
            if (r[c] > r[best]) best = c;
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// Micro-averaged F1 over the masked nodes. With one predicted class per node
/// this equals accuracy (every error is one false positive and one false
/// negative), but it is computed from the pooled confusion counts anyway.
inline double micro_f1(const std::vector<int>& pred, const std::vector<int>& truth,
                       const std::vector<bool>& mask) {
    if (pred.size() != truth.size() || pred.size() != mask.size())
        throw std::invalid_argument("micro_f1: length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    bool any = false;
    for (std::size_t v = 0; v < pred.size(); ++v) {
        if (!mask[v]) continue;
        any = true;
        if (pred[v] == truth[v]) {
            ++tp;
        } else {
            ++fp;
            ++fn;
        }
    }
    if (!any) throw std::invalid_argument("micro_f1: empty mask");
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline std::vector<bool> mask_from_nodes(std::size_t n, const std::vector<NodeId>& nodes) {
    std::vector<bool> mask(n, false);
    for (NodeId v : nodes) mask[v] = true;
    return mask;
}

// ---- timing -----------------------------------------------------------------

class PhaseTimer {
  public:
    double time(const std::string& phase, const std::function<void()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        phases_.emplace_back(phase, s);
        return s;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        double total = 0.0;
        for (const auto& [name, s] : phases_) {
            j[name] = s;
            total += s;
        }
        j["total"] = total;
        return j;
    }

    double get(const std::string& phase) const {
        for (const auto& [name, s] : phases_)
            if (name == phase) return s;
        throw std::logic_error("unknown phase: " + phase);
    }

  private:
    std::vector<std::pair<std::string, double>> phases_;
};

// ---- retrain oracle -----------------------------------------------------------

struct RetrainResult {
    BackboneParams params;
    double micro_f1_test = 0.0;
    double wall_time = 0.0;
    std::vector<double> loss_trace;
};

/// Trains a fresh model on the residual graph. Feature/node requests drop
/// the unlearning entities from supervision; edge requests keep the mask.
inline RetrainResult retrain_oracle(const GraphBundle& g, const UnlearnRequest& request,
                                    BackboneKind kind, std::size_t depth, std::size_t hidden,
                                    const OptimizerConfig& cfg, std::uint64_t seed) {
    ResidualGraph residual = apply_request(g, request);
    std::vector<bool> is_delta(g.n, false);
    if (request.level != RequestLevel::Edge)
        for (NodeId v : request.delta_nodes) is_delta[v] = true;
    std::vector<std::uint32_t> rows;
    for (std::uint32_t v = 0; v < g.n; ++v)
        if (g.train_mask[v] && !is_delta[v]) rows.push_back(v);

    RetrainResult res;
    const auto t0 = std::chrono::steady_clock::now();
    auto trained = pretrain_on_rows(g, residual.adj_star, residual.x_star, rows, kind, depth,
                                    hidden, cfg, seed);
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.params = std::move(trained.params);
    res.loss_trace = std::move(trained.loss_trace);
    auto pred = argmax_rows(encode(residual.adj_star, residual.x_star, res.params));
    res.micro_f1_test = micro_f1(pred, g.y, g.test_mask);
    return res;
}

// ---- edge attack --------------------------------------------------------------

struct AttackRow {
    double noise_ratio = 0.0;
    double vanilla_f1 = 0.0;
    double megu_f1 = 0.0;
    double forgetting_ce_before = 0.0;
    double forgetting_ce_after = 0.0;
};

/// Per ratio: inject cross-class noisy edges, train a vanilla model on the
/// noisy graph, then unlearn the injected edges with MEGU starting from that
/// vanilla model. Reports both test F1 scores.
inline std::vector<AttackRow> edge_attack_experiment(const GraphBundle& g,
                                                     const std::vector<double>& ratios,
                                                     BackboneKind kind, std::size_t depth,
                                                     std::size_t hidden, const OptimizerConfig& pre,
                                                     const MeguConfig& cfg, std::uint64_t seed) {
    std::vector<AttackRow> rows;
    for (double ratio : ratios) {
        auto [noisy, request] = inject_noisy_edges(g, ratio, seed);
        auto noisy_adj = normalize_adjacency(noisy);
        auto vanilla = pretrain(noisy, noisy_adj, kind, depth, hidden, pre, seed);
        AttackRow row;
        row.noise_ratio = ratio;
        row.vanilla_f1 = micro_f1(argmax_rows(encode(noisy_adj, noisy.X, vanilla.params)), noisy.y,
                                  noisy.test_mask);
        ResidualGraph residual = apply_request(noisy, request);
        auto result = megu_train(noisy, residual, request, vanilla.params, cfg);
        row.megu_f1 = micro_f1(argmax_rows(result.predictions), noisy.y, noisy.test_mask);
        row.forgetting_ce_before = result.state.forgetting_ce_before;
        row.forgetting_ce_after = result.state.forgetting_ce_after;
        rows.push_back(row);
    }
    return rows;
}

// ---- full experiment ------------------------------------------------------------

/// Worker-pool bound for sweep commands; defaults to one worker.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("MEGU_THREADS")) {
        const long v = std::atol(env);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

template <typename Item, typename Fn>
void parallel_for_each(const std::vector<Item>& items, Fn fn) {
    const std::size_t workers = std::min(worker_count(), items.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) fn(i, items[i]);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1))
                fn(i, items[i]);
        });
    for (auto& t : pool) t.join();
}

/// Runs pretrain -> request -> megu_train -> metrics (plus the optional
/// retrain oracle) and assembles the report. Dataset loading is not timed.
inline nlohmann::ordered_json run_experiment(const Manifest& m, const GraphBundle& g) {
    PhaseTimer timer;
    auto adj = normalize_adjacency(g);

    PretrainResult original;
    timer.time("pretrain", [&] {
        original = pretrain(g, adj, m.backbone, m.depth, m.hidden, m.pretrain, m.seed);
    });

    UnlearnRequest request;
    ResidualGraph residual;
    timer.time("request", [&] {
        request = sample_request(g, m.level, m.ratio, m.seed);
        request.feature_mask_ratio = m.mask_ratio;
        residual = apply_request(g, request);
    });

    MeguResult result;
    timer.time("unlearn", [&] { result = megu_train(g, residual, request, original.params, m.megu); });

    nlohmann::ordered_json scores;
    timer.time("metrics", [&] {
        auto pred = argmax_rows(result.predictions);
        scores["micro_f1_test"] = micro_f1(pred, g.y, g.test_mask);
        auto delta_mask = mask_from_nodes(g.n, request.delta_nodes);
        scores["micro_f1_unlearn_entities"] =
            request.delta_nodes.empty() ? 0.0 : micro_f1(pred, g.y, delta_mask);
        scores["forgetting_ce_before"] = result.state.forgetting_ce_before;
        scores["forgetting_ce_after"] = result.state.forgetting_ce_after;
        scores["original_f1_test"] = micro_f1(argmax_rows(encode(adj, g.X, original.params)), g.y,
                                              g.test_mask);
    });

    if (m.with_retrain_oracle) {
        RetrainResult oracle;
        timer.time("retrain", [&] {
            oracle = retrain_oracle(g, request, m.backbone, m.depth, m.hidden, m.pretrain, m.seed);
        });
        scores["retrain_f1_test"] = oracle.micro_f1_test;
    }

    nlohmann::ordered_json report;
    report["config"] = manifest_to_json(m);
    report["seed"] = m.seed;
    report["request"] = request_to_json(request);
    report["hin"] = hin_to_json(result.state.hin);
    report["scores"] = scores;
    report["times"] = timer.to_json();
    report["traces"] = {{"pretrain_loss", original.loss_trace},
                        {"megu_loss", result.state.loss_trace}};
    if (m.megu.epochs == 0) report["note"] = "no-op unlearning";
    return report;
}

inline nlohmann::ordered_json run_experiment(const Manifest& m) {
    return run_experiment(m, load_manifest_dataset(m));
}

/// Strips the wall-clock fields; what remains must be reproducible byte for
/// byte from the same manifest and seed.
inline nlohmann::ordered_json report_without_times(nlohmann::ordered_json report) {
    report.erase("times");
    return report;
}

}  // namespace megu
