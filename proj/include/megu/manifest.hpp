#pragma once

#include <optional>

#include <json.hpp>

#include "megu/megu.hpp"
#include "megu/sbm.hpp"

namespace megu {

/// All scientific parameters of a run live in the manifest; command-line
/// flags only locate files and override seeds.
struct Manifest {
    // dataset: exactly one of the two
    std::optional<std::string> bundle_path;
    std::optional<SbmConfig> sbm;

    BackboneKind backbone = BackboneKind::GCN2;
    std::size_t depth = 2;
    std::size_t hidden = 16;
    OptimizerConfig pretrain;

    RequestLevel level = RequestLevel::Node;
    double ratio = 0.1;
    double mask_ratio = 1.0;
    std::uint64_t seed = 0;

    MeguConfig megu;

    bool with_retrain_oracle = false;
    std::vector<double> attack_ratios;
    std::vector<double> kappa_sweep;

    std::string output_dir = ".";
};

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    const auto& ds = j.at("dataset");
    if (ds.contains("bundle") == ds.contains("sbm"))
        throw std::invalid_argument("manifest: dataset needs exactly one of bundle/sbm");
    if (ds.contains("bundle")) {
        m.bundle_path = ds["bundle"].get<std::string>();
    } else {
        const auto& s = ds["sbm"];
        SbmConfig cfg;
        cfg.block_sizes = s.at("blocks").get<std::vector<std::size_t>>();
        cfg.p_in = s.at("p_in").get<double>();
        cfg.p_out = s.at("p_out").get<double>();
        if (s.contains("signal")) cfg.signal = s["signal"].get<double>();
        if (s.contains("noise_scale")) cfg.noise_scale = s["noise_scale"].get<double>();
        if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
        m.sbm = cfg;
    }
    if (j.contains("backbone")) {
        const auto& b = j["backbone"];
        if (b.contains("kind")) m.backbone = backbone_kind_from_string(b["kind"].get<std::string>());
        if (b.contains("depth")) m.depth = b["depth"].get<std::size_t>();
        if (b.contains("hidden")) m.hidden = b["hidden"].get<std::size_t>();
        if (b.contains("pretrain")) {
            const auto& p = b["pretrain"];
            if (p.contains("lr")) m.pretrain.lr = p["lr"].get<double>();
            if (p.contains("epochs")) m.pretrain.epochs = p["epochs"].get<std::size_t>();
            if (p.contains("weight_decay")) m.pretrain.weight_decay = p["weight_decay"].get<double>();
        }
    }
    if (j.contains("request")) {
        const auto& r = j["request"];
        if (r.contains("level")) m.level = request_level_from_string(r["level"].get<std::string>());
        if (r.contains("ratio")) m.ratio = r["ratio"].get<double>();
        if (r.contains("mask_ratio")) m.mask_ratio = r["mask_ratio"].get<double>();
        if (r.contains("seed")) m.seed = r["seed"].get<std::uint64_t>();
    }
    if (j.contains("megu")) {
        const auto& u = j["megu"];
        if (u.contains("unlearning_rate")) m.megu.unlearning_rate = u["unlearning_rate"].get<double>();
        if (u.contains("kappa")) m.megu.kappa = u["kappa"].get<double>();
        if (u.contains("alpha1")) m.megu.alpha1 = u["alpha1"].get<double>();
        if (u.contains("alpha2")) m.megu.alpha2 = u["alpha2"].get<double>();
        if (u.contains("prop_steps")) m.megu.prop_steps = u["prop_steps"].get<std::size_t>();
        if (u.contains("epochs")) m.megu.epochs = u["epochs"].get<std::size_t>();
    }
    if (j.contains("experiment")) {
        const auto& e = j["experiment"];
        if (e.contains("with_retrain_oracle")) m.with_retrain_oracle = e["with_retrain_oracle"].get<bool>();
        if (e.contains("attack_ratios")) m.attack_ratios = e["attack_ratios"].get<std::vector<double>>();
        if (e.contains("kappa_sweep")) m.kappa_sweep = e["kappa_sweep"].get<std::vector<double>>();
    }
    if (j.contains("output")) m.output_dir = j["output"].get<std::string>();
    return m;
}

inline nlohmann::ordered_json manifest_to_json(const Manifest& m) {
    nlohmann::ordered_json j;
    if (m.bundle_path) {
        j["dataset"]["bundle"] = *m.bundle_path;
    } else {
        j["dataset"]["sbm"] = {{"blocks", m.sbm->block_sizes}, {"p_in", m.sbm->p_in},
                               {"p_out", m.sbm->p_out},        {"signal", m.sbm->signal},
                               {"noise_scale", m.sbm->noise_scale}, {"seed", m.sbm->seed}};
    }
    j["backbone"] = {{"kind", to_string(m.backbone)},
                     {"depth", m.depth},
                     {"hidden", m.hidden},
                     {"pretrain", {{"lr", m.pretrain.lr},
                                   {"epochs", m.pretrain.epochs},
                                   {"weight_decay", m.pretrain.weight_decay}}}};
    j["request"] = {{"level", to_string(m.level)},
                    {"ratio", m.ratio},
                    {"mask_ratio", m.mask_ratio},
                    {"seed", m.seed}};
    j["megu"] = {{"unlearning_rate", m.megu.unlearning_rate}, {"kappa", m.megu.kappa},
                 {"alpha1", m.megu.alpha1},                   {"alpha2", m.megu.alpha2},
                 {"prop_steps", m.megu.prop_steps},           {"epochs", m.megu.epochs}};
    j["experiment"] = {{"with_retrain_oracle", m.with_retrain_oracle},
                       {"attack_ratios", m.attack_ratios},
                       {"kappa_sweep", m.kappa_sweep}};
    j["output"] = m.output_dir;
    return j;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing manifest: " + path.string());
    return manifest_from_json(nlohmann::json::parse(in));
}

inline GraphBundle load_manifest_dataset(const Manifest& m) {
    return m.bundle_path ? load_bundle(*m.bundle_path) : generate_sbm(*m.sbm);
}

}  // namespace megu
