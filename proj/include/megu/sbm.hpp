#pragma once

#include <numeric>
#include <random>

#include "megu/graph.hpp"

namespace megu {

/// Stochastic block model with class-informative Gaussian features.
/// One block per class; feature dimension equals the block count.
struct SbmConfig {
    std::vector<std::size_t> block_sizes;
    double p_in = 0.1;
    double p_out = 0.01;
    double signal = 1.0;       // class-mean magnitude
    double noise_scale = 0.5;  // stddev of the additive noise
    std::uint64_t seed = 0;
};

inline void validate_sbm_config(const SbmConfig& cfg) {
    if (cfg.block_sizes.empty()) throw std::invalid_argument("sbm: no blocks");
    for (auto s : cfg.block_sizes)
        if (s == 0) throw std::invalid_argument("sbm: empty block");
    if (cfg.p_in < 0.0 || cfg.p_in > 1.0 || cfg.p_out < 0.0 || cfg.p_out > 1.0)
        throw std::invalid_argument("sbm: edge probability outside [0,1]");
    if (cfg.signal < 0.0 || cfg.noise_scale < 0.0)
        throw std::invalid_argument("sbm: negative feature parameter");
}

/// Deterministic for a fixed seed. Train/test split is a seeded 80/20 shuffle.
inline GraphBundle generate_sbm(const SbmConfig& cfg) {
    validate_sbm_config(cfg);
    GraphBundle g;
    g.num_classes = cfg.block_sizes.size();
    g.f = g.num_classes;
    g.n = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), std::size_t{0});

    g.y.resize(g.n);
    {
        std::size_t v = 0;
        for (std::size_t b = 0; b < cfg.block_sizes.size(); ++b)
            for (std::size_t k = 0; k < cfg.block_sizes[b]; ++k) g.y[v++] = static_cast<int>(b);
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (NodeId i = 0; i < g.n; ++i)
        for (NodeId j = i + 1; j < g.n; ++j) {
            const double p = (g.y[i] == g.y[j]) ? cfg.p_in : cfg.p_out;
            if (p >= 1.0 || (p > 0.0 && unit(rng) < p)) g.edges.emplace_back(i, j);
        }

    std::normal_distribution<double> noise(0.0, 1.0);
    g.X = Matrix(g.n, g.f);
    for (std::size_t v = 0; v < g.n; ++v)
        for (std::size_t c = 0; c < g.f; ++c) {
            const double mean = (static_cast<int>(c) == g.y[v]) ? cfg.signal : 0.0;
            g.X(v, c) = mean + cfg.noise_scale * noise(rng);
        }

    std::vector<NodeId> order(g.n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_train = (g.n * 8) / 10;
    g.train_mask.assign(g.n, false);
    g.test_mask.assign(g.n, false);
    for (std::size_t i = 0; i < g.n; ++i)
        (i < n_train ? g.train_mask : g.test_mask)[order[i]] = true;

    validate_bundle(g);
    return g;
}

}  // namespace megu
