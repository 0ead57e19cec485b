#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "megu/graph.hpp"
#include "megu/nn.hpp"

namespace megu {

enum class BackboneKind { SGC, GCN2 };

inline std::string to_string(BackboneKind k) { return k == BackboneKind::SGC ? "sgc" : "gcn"; }

inline BackboneKind backbone_kind_from_string(const std::string& s) {
    if (s == "sgc") return BackboneKind::SGC;
    if (s == "gcn" || s == "gcn2") return BackboneKind::GCN2;
    throw std::invalid_argument("unknown backbone kind: " + s);
}

/// Encoder weights. SGC holds one f x C matrix; GCN2 holds f x h and h x C.
struct BackboneParams {
    BackboneKind kind = BackboneKind::SGC;
    std::size_t depth = 2;  // SGC exponent / GCN layer count (fixed at 2 for GCN2)
    std::vector<Matrix> weights;

    static BackboneParams init(BackboneKind kind, std::size_t f, std::size_t num_classes,
                               std::size_t depth, std::size_t hidden, std::uint64_t seed) {
        if (depth < 1) throw std::invalid_argument("backbone depth must be >= 1");
        BackboneParams p;
        p.kind = kind;
        p.depth = depth;
        std::mt19937_64 rng(seed);
        if (kind == BackboneKind::SGC) {
            p.weights.push_back(glorot_init(f, num_classes, rng));
        } else {
            p.weights.push_back(glorot_init(f, hidden, rng));
            p.weights.push_back(glorot_init(hidden, num_classes, rng));
        }
        return p;
    }
};

/// Intermediate activations kept for the paired backward pass.
struct ForwardCache {
    Matrix smoothed;   // SGC: A^l X.  GCN2: A X.
    Matrix pre_relu;   // GCN2 only: (A X) W1
    Matrix propagated; // GCN2 only: A ReLU(pre_relu)
};

inline Matrix encode(const NormalizedAdjacency& adj, const Matrix& x, const BackboneParams& p,
                     ForwardCache* cache = nullptr) {
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    if (p.kind == BackboneKind::SGC) {
        c.smoothed = x;
        for (std::size_t i = 0; i < p.depth; ++i) c.smoothed = spmm(adj, c.smoothed);
        return matmul(c.smoothed, p.weights[0]);
    }
    c.smoothed = spmm(adj, x);
    c.pre_relu = matmul(c.smoothed, p.weights[0]);
    Matrix relu = c.pre_relu;
    for (double& v : relu.data) v = std::max(v, 0.0);
    c.propagated = spmm(adj, relu);
    return matmul(c.propagated, p.weights[1]);
}

/// Gradients of the weights given dL/dlogits; requires the cache from the
/// matching encode() call.
inline std::vector<Matrix> encode_backward(const NormalizedAdjacency& adj,
                                           const BackboneParams& p, const ForwardCache& cache,
                                           const Matrix& grad_logits) {
    if (p.kind == BackboneKind::SGC) {
        return {matmul_at_b(cache.smoothed, grad_logits)};
    }
    if (cache.propagated.rows == 0) throw std::logic_error("encode_backward: missing forward cache");
    Matrix grad_w2 = matmul_at_b(cache.propagated, grad_logits);
    Matrix grad_relu = spmm(adj, matmul_a_bt(grad_logits, p.weights[1]));  // A is symmetric
    for (std::size_t i = 0; i < grad_relu.data.size(); ++i)
        if (cache.pre_relu.data[i] <= 0.0) grad_relu.data[i] = 0.0;
    Matrix grad_w1 = matmul_at_b(cache.smoothed, grad_relu);
    return {std::move(grad_w1), std::move(grad_w2)};
}

inline Matrix one_hot_labels(const GraphBundle& g) {
    Matrix t(g.n, g.num_classes);
    for (std::size_t v = 0; v < g.n; ++v) t(v, static_cast<std::size_t>(g.y[v])) = 1.0;
    return t;
}

struct PretrainResult {
    BackboneParams params;
    std::vector<double> loss_trace;
};

/// Full-batch SGD on cross-entropy over the supervised rows.
inline PretrainResult pretrain_on_rows(const GraphBundle& g, const NormalizedAdjacency& adj,
                                       const Matrix& x, const std::vector<std::uint32_t>& sup_rows,
                                       BackboneKind kind, std::size_t depth, std::size_t hidden,
                                       const OptimizerConfig& cfg, std::uint64_t seed) {
    validate_optimizer_config(cfg);
    if (sup_rows.empty()) throw std::invalid_argument("pretrain: empty train set");
    PretrainResult res;
    res.params = BackboneParams::init(kind, g.f, g.num_classes, depth, hidden, seed);
    const Matrix targets = one_hot_labels(g);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        ForwardCache cache;
        Matrix logits = encode(adj, x, res.params, &cache);
        Matrix probs = softmax_rows(logits);
        double loss = cross_entropy(probs, targets, sup_rows);
        if (!std::isfinite(loss))
            throw std::runtime_error("pretrain diverged at epoch " + std::to_string(epoch));
        res.loss_trace.push_back(loss);
        Matrix grad_probs(probs.rows, probs.cols);
        cross_entropy_backward(probs, targets, sup_rows, 1.0, grad_probs);
        Matrix grad_logits = softmax_backward(probs, grad_probs);
        auto grads = encode_backward(adj, res.params, cache, grad_logits);
        sgd_step(res.params.weights, grads, cfg);
    }
    return res;
}

inline PretrainResult pretrain(const GraphBundle& g, const NormalizedAdjacency& adj,
                               BackboneKind kind, std::size_t depth, std::size_t hidden,
                               const OptimizerConfig& cfg, std::uint64_t seed) {
    std::vector<std::uint32_t> rows;
    for (std::uint32_t v = 0; v < g.n; ++v)
        if (g.train_mask[v]) rows.push_back(v);
    return pretrain_on_rows(g, adj, g.X, rows, kind, depth, hidden, cfg, seed);
}

// ---- checkpoint I/O --------------------------------------------------------

inline nlohmann::ordered_json params_to_json(const BackboneParams& p, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(p.kind);
    j["depth"] = p.depth;
    j["seed"] = seed;
    j["shapes"] = nlohmann::json::array();
    j["weights"] = nlohmann::json::array();
    for (const auto& w : p.weights) {
        j["shapes"].push_back({w.rows, w.cols});
        j["weights"].push_back(w.data);
    }
    return j;
}

inline BackboneParams params_from_json(const nlohmann::json& j) {
    BackboneParams p;
    p.kind = backbone_kind_from_string(j.at("kind").get<std::string>());
    p.depth = j.at("depth").get<std::size_t>();
    const auto& shapes = j.at("shapes");
    const auto& weights = j.at("weights");
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        Matrix w(shapes[k][0].get<std::size_t>(), shapes[k][1].get<std::size_t>());
        w.data = weights[k].get<std::vector<double>>();
        if (w.data.size() != w.rows * w.cols) throw std::runtime_error("checkpoint: weight size mismatch");
        p.weights.push_back(std::move(w));
    }
    return p;
}

inline void save_checkpoint(const BackboneParams& p, std::uint64_t seed,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out << params_to_json(p, seed).dump(2) << "\n";
}

inline BackboneParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing checkpoint: " + path.string());
    return params_from_json(nlohmann::json::parse(in));
}

}  // namespace megu
