#pragma once

#include "megu/backbone.hpp"
#include "megu/hin.hpp"
#include "megu/request.hpp"

namespace megu {

struct MeguConfig {
    double unlearning_rate = 0.05;  // SGD learning rate of the joint loop
    double kappa = 0.01;            // weight of the unlearning loss
    double alpha1 = 0.8;            // teleport coefficient, error-correction pass
    double alpha2 = 0.5;            // teleport coefficient, output pass
    std::size_t prop_steps = 0;     // 0 = use the backbone depth
    std::size_t epochs = 100;
};

inline void validate_megu_config(const MeguConfig& cfg) {
    if (cfg.unlearning_rate <= 0.0) throw std::invalid_argument("unlearning rate must be positive");
    if (cfg.kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
    if (cfg.alpha1 <= 0.0 || cfg.alpha1 > 1.0 || cfg.alpha2 <= 0.0 || cfg.alpha2 > 1.0)
        throw std::invalid_argument("alpha coefficients must be in (0,1]");
}

/// Everything the joint loop trains or freezes: the adjusted backbone W*,
/// the linear class-space unlearning operator W_u, the frozen teacher, and
/// the HIN fixed before training.
struct MeguState {
    BackboneParams w_star;
    Matrix w_u;      // num_classes x num_classes, identity at init
    Matrix teacher;  // frozen probabilities
    HinSelection hin;
    std::vector<double> loss_trace;
    double forgetting_ce_before = 0.0;
    double forgetting_ce_after = 0.0;
};

/// Teacher probabilities from the frozen original model. The training loop
/// evaluates it on the ORIGINAL graph: a teacher computed on the residual
/// graph would coincide bitwise with the epoch-0 student (same weights, same
/// inputs), making initialization a stationary point of the joint loss.
inline Matrix compute_teacher(const NormalizedAdjacency& adj, const Matrix& x,
                              const BackboneParams& original) {
    return softmax_rows(encode(adj, x, original));
}

struct ModuleOutputs {
    Matrix logits;       // predictive module
    Matrix probs;
    Matrix logits_star;  // after the unlearning operator
    Matrix probs_star;
    ForwardCache cache;
};

/// Row i of logits_star is W_u applied to row i of the backbone logits.
inline ModuleOutputs module_outputs(const NormalizedAdjacency& adj_star, const Matrix& x_star,
                                    const BackboneParams& w_star, const Matrix& w_u) {
    ModuleOutputs out;
    out.logits = encode(adj_star, x_star, w_star, &out.cache);
    if (w_u.rows != out.logits.cols || w_u.cols != out.logits.cols)
        throw std::invalid_argument("module_outputs: W_u shape mismatch");
    out.probs = softmax_rows(out.logits);
    out.logits_star = matmul_a_bt(out.logits, w_u);
    out.probs_star = softmax_rows(out.logits_star);
    return out;
}

/// Approximate personalized PageRank:
/// T^(k) = alpha * T^(0) + (1 - alpha) * A_hat T^(k-1), iterated `steps` times.
inline Matrix ppr_propagate(const NormalizedAdjacency& adj, const Matrix& t0, double alpha,
                            std::size_t steps) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("ppr_propagate: alpha outside (0,1]");
    Matrix t = t0;
    for (std::size_t k = 0; k < steps; ++k) {
        Matrix next = spmm(adj, t);
        for (std::size_t i = 0; i < next.data.size(); ++i)
            next.data[i] = alpha * t0.data[i] + (1.0 - alpha) * next.data[i];
        t = std::move(next);
    }
    return t;
}

/// Topology-aware unlearning propagation producing the final predictions.
/// Train-mask rows pass through bit-equal; unlabeled rows get the PPR-smoothed
/// correction and are then clamped at 0 and renormalized to the simplex.
inline Matrix unlearning_propagation(const Matrix& probs_star, const Matrix& probs,
                                     const std::vector<bool>& train_mask,
                                     const NormalizedAdjacency& adj_star, double alpha1,
                                     double alpha2, std::size_t steps) {
    check_shape(probs_star, probs, "unlearning_propagation");
    const std::size_t n = probs.rows, c = probs.cols;
    Matrix err(n, c);
    for (std::size_t v = 0; v < n; ++v)
        if (!train_mask[v])
            for (std::size_t j = 0; j < c; ++j) err(v, j) = probs(v, j) - probs_star(v, j);
    Matrix corr = ppr_propagate(adj_star, err, alpha1, steps);
    Matrix smoothed = ppr_propagate(adj_star, add(probs_star, corr), alpha2, steps);

    Matrix out(n, c);
    for (std::size_t v = 0; v < n; ++v) {
        if (train_mask[v]) {
            for (std::size_t j = 0; j < c; ++j) out(v, j) = probs_star(v, j);
            continue;
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            out(v, j) = std::max(smoothed(v, j), 0.0);
            sum += out(v, j);
        }
        if (sum > 0.0)
            for (std::size_t j = 0; j < c; ++j) out(v, j) /= sum;
        else
            for (std::size_t j = 0; j < c; ++j) out(v, j) = 1.0 / static_cast<double>(c);
    }
    return out;
}

/// L_p: teacher cross-entropy plus KL(Y_star || Y), both restricted to HIN.
inline double predictive_loss(const Matrix& probs, const Matrix& probs_star, const Matrix& teacher,
                              const std::vector<std::uint32_t>& hin_rows) {
    return cross_entropy(probs, teacher, hin_rows) + kl_divergence(probs_star, probs, hin_rows);
}

/// L_u: reverse teacher cross-entropy plus KL(Y || Y_star) over the entities.
inline double unlearning_loss(const Matrix& probs, const Matrix& probs_star, const Matrix& teacher,
                              const std::vector<std::uint32_t>& delta_rows) {
    return -cross_entropy(probs_star, teacher, delta_rows) +
           kl_divergence(probs, probs_star, delta_rows);
}

struct MeguResult {
    MeguState state;
    Matrix predictions;  // Y* from unlearning propagation
};

namespace detail {

struct JointGrads {
    std::vector<Matrix> w_star;
    Matrix w_u;
};

/// Analytic gradient of L = L_p + kappa * L_u w.r.t. W* and W_u, with
/// gradients flowing through both arguments of every KL term.
inline JointGrads joint_backward(const NormalizedAdjacency& adj_star, const BackboneParams& w_star,
                                 const Matrix& w_u, const ModuleOutputs& out, const Matrix& teacher,
                                 const std::vector<std::uint32_t>& hin_rows,
                                 const std::vector<std::uint32_t>& delta_rows, double kappa) {
    Matrix grad_probs(out.probs.rows, out.probs.cols);
    Matrix grad_probs_star(out.probs.rows, out.probs.cols);
    cross_entropy_backward(out.probs, teacher, hin_rows, 1.0, grad_probs);
    kl_divergence_backward(out.probs_star, out.probs, hin_rows, 1.0, grad_probs_star, grad_probs);
    cross_entropy_backward(out.probs_star, teacher, delta_rows, -kappa, grad_probs_star);
    kl_divergence_backward(out.probs, out.probs_star, delta_rows, kappa, grad_probs, grad_probs_star);

    Matrix grad_logits = softmax_backward(out.probs, grad_probs);
    Matrix grad_logits_star = softmax_backward(out.probs_star, grad_probs_star);

    JointGrads g;
    g.w_u = matmul_at_b(grad_logits_star, out.logits);
    add_in_place(grad_logits, matmul(grad_logits_star, w_u));
    g.w_star = encode_backward(adj_star, w_star, out.cache, grad_logits);
    return g;
}

}  // namespace detail

/// The mutual-evolution loop. The teacher and HIN are fixed up front; each
/// epoch jointly updates W* and W_u by one SGD step on L_p + kappa * L_u.
inline MeguResult megu_train(const GraphBundle& g, const ResidualGraph& residual,
                             const UnlearnRequest& request, const BackboneParams& original,
                             const MeguConfig& cfg) {
    validate_megu_config(cfg);
    const std::size_t steps = cfg.prop_steps ? cfg.prop_steps : original.depth;

    MeguResult res;
    MeguState& st = res.state;
    st.w_star = original;
    st.w_u = Matrix::identity(g.num_classes);

    // Teacher and HIN selection both use the original topology and features.
    {
        auto adj = normalize_adjacency(g);
        st.teacher = compute_teacher(adj, g.X, original);
        auto [fwd, inv] = forward_inverse_propagation(adj, g.X, request.delta_nodes, original.depth);
        auto dist = influence_distance(fwd, inv, request.delta_nodes);
        st.hin = select_hin(dist, g, request.delta_nodes, original.depth);
    }

    std::vector<std::uint32_t> hin_rows(st.hin.nodes.begin(), st.hin.nodes.end());
    std::vector<std::uint32_t> delta_rows(request.delta_nodes.begin(), request.delta_nodes.end());

    OptimizerConfig sgd{cfg.unlearning_rate, 1, 0.0};
    ModuleOutputs out = module_outputs(residual.adj_star, residual.x_star, st.w_star, st.w_u);
    st.forgetting_ce_before = cross_entropy(out.probs_star, st.teacher, delta_rows);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = predictive_loss(out.probs, out.probs_star, st.teacher, hin_rows) +
                            cfg.kappa * unlearning_loss(out.probs, out.probs_star, st.teacher, delta_rows);
        if (!std::isfinite(loss))
            throw std::runtime_error("megu_train diverged at epoch " + std::to_string(epoch));
        st.loss_trace.push_back(loss);

        auto grads = detail::joint_backward(residual.adj_star, st.w_star, st.w_u, out, st.teacher,
                                            hin_rows, delta_rows, cfg.kappa);
        std::vector<Matrix> params = st.w_star.weights;
        params.push_back(st.w_u);
        std::vector<Matrix> grad_list = std::move(grads.w_star);
        grad_list.push_back(std::move(grads.w_u));
        sgd_step(params, grad_list, sgd);
        st.w_u = std::move(params.back());
        params.pop_back();
        st.w_star.weights = std::move(params);

        out = module_outputs(residual.adj_star, residual.x_star, st.w_star, st.w_u);
    }
    st.forgetting_ce_after = cross_entropy(out.probs_star, st.teacher, delta_rows);

    res.predictions = unlearning_propagation(out.probs_star, out.probs, g.train_mask,
                                             residual.adj_star, cfg.alpha1, cfg.alpha2, steps);
    return res;
}

// ---- adjusted-model checkpoint ----------------------------------------------

inline void save_adjusted_checkpoint(const MeguState& st, const UnlearnRequest& request,
                                     std::uint64_t seed, const std::filesystem::path& path) {
    nlohmann::ordered_json j = params_to_json(st.w_star, seed);
    j["w_u"] = {{"shape", {st.w_u.rows, st.w_u.cols}}, {"data", st.w_u.data}};
    j["request"] = request_to_json(request);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out << j.dump(2) << "\n";
}

inline std::tuple<BackboneParams, Matrix, UnlearnRequest> load_adjusted_checkpoint(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing checkpoint: " + path.string());
    auto j = nlohmann::json::parse(in);
    BackboneParams p = params_from_json(j);
    Matrix w_u(j.at("w_u").at("shape")[0].get<std::size_t>(),
               j.at("w_u").at("shape")[1].get<std::size_t>());
    w_u.data = j.at("w_u").at("data").get<std::vector<double>>();
    UnlearnRequest r = request_from_json(j.at("request"));
    return {std::move(p), std::move(w_u), std::move(r)};
}

}  // namespace megu
