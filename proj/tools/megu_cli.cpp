// Command-line front end: gen, pretrain, unlearn, retrain, attack, eval.
// Scientific parameters come from JSON manifests; flags locate files and
// override seeds. Exit codes: 0 ok, 2 usage/validation, 3 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "megu/eval.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::size_t> parse_blocks(const std::string& spec) {
    // "4x150" or "150,150,150,150"
    std::vector<std::size_t> blocks;
    if (auto x = spec.find('x'); x != std::string::npos) {
        const std::size_t count = std::stoul(spec.substr(0, x));
        const std::size_t size = std::stoul(spec.substr(x + 1));
        blocks.assign(count, size);
    } else {
        std::size_t pos = 0;
        while (pos <= spec.size()) {
            std::size_t next = spec.find(',', pos);
            if (next == std::string::npos) next = spec.size();
            blocks.push_back(std::stoul(spec.substr(pos, next - pos)));
            pos = next + 1;
        }
    }
    return blocks;
}

void write_json(const ordered_json& j, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

int cmd_gen(const std::string& blocks, double p_in, double p_out, double signal, double noise,
            std::uint64_t seed, const std::string& out_dir) {
    megu::SbmConfig cfg;
    cfg.block_sizes = parse_blocks(blocks);
    cfg.p_in = p_in;
    cfg.p_out = p_out;
    cfg.signal = signal;
    cfg.noise_scale = noise;
    cfg.seed = seed;
    megu::save_bundle(megu::generate_sbm(cfg), out_dir);
    std::cout << "wrote bundle to " << out_dir << "\n";
    return 0;
}

int cmd_pretrain(const std::string& bundle, const std::string& backbone, std::size_t depth,
                 std::size_t hidden, std::size_t epochs, double lr, double wd, std::uint64_t seed,
                 const std::string& out) {
    auto g = megu::load_bundle(bundle);
    auto adj = megu::normalize_adjacency(g);
    megu::OptimizerConfig cfg{lr, epochs, wd};
    auto res = megu::pretrain(g, adj, megu::backbone_kind_from_string(backbone), depth, hidden,
                              cfg, seed);
    megu::save_checkpoint(res.params, seed, out);
    auto pred = megu::argmax_rows(megu::encode(adj, g.X, res.params));
    std::cout << "pretrained " << backbone << ": train F1 "
              << megu::micro_f1(pred, g.y, g.train_mask) << ", test F1 "
              << megu::micro_f1(pred, g.y, g.test_mask) << "\n";
    std::cout << "wrote checkpoint to " << out << "\n";
    return 0;
}

int cmd_unlearn(const std::string& manifest_path, std::int64_t seed_override,
                const std::string& out_dir) {
    megu::Manifest m = megu::load_manifest(manifest_path);
    if (seed_override >= 0) m.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_dir.empty()) m.output_dir = out_dir;
    auto g = megu::load_manifest_dataset(m);

    if (m.kappa_sweep.empty()) {
        auto report = megu::run_experiment(m, g);
        write_json(report, fs::path(m.output_dir) / "report.json");
        std::cout << report["scores"].dump(2) << "\n";
        return 0;
    }
    std::vector<ordered_json> reports(m.kappa_sweep.size());
    megu::parallel_for_each(m.kappa_sweep, [&](std::size_t i, double kappa) {
        megu::Manifest mi = m;
        mi.megu.kappa = kappa;
        reports[i] = megu::run_experiment(mi, g);
    });
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream name;
        name << "report_kappa_" << m.kappa_sweep[i] << ".json";
        write_json(reports[i], fs::path(m.output_dir) / name.str());
        std::cout << "kappa " << m.kappa_sweep[i] << ": test F1 "
                  << reports[i]["scores"]["micro_f1_test"].get<double>() << "\n";
    }
    return 0;
}

int cmd_retrain(const std::string& manifest_path, std::int64_t seed_override,
                const std::string& out_dir) {
    megu::Manifest m = megu::load_manifest(manifest_path);
    if (seed_override >= 0) m.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_dir.empty()) m.output_dir = out_dir;
    auto g = megu::load_manifest_dataset(m);
    auto request = megu::sample_request(g, m.level, m.ratio, m.seed);
    request.feature_mask_ratio = m.mask_ratio;
    auto res = megu::retrain_oracle(g, request, m.backbone, m.depth, m.hidden, m.pretrain, m.seed);
    ordered_json report;
    report["config"] = megu::manifest_to_json(m);
    report["seed"] = m.seed;
    report["request"] = megu::request_to_json(request);
    report["scores"] = {{"retrain_f1_test", res.micro_f1_test}};
    report["times"] = {{"retrain", res.wall_time}, {"total", res.wall_time}};
    report["traces"] = {{"retrain_loss", res.loss_trace}};
    write_json(report, fs::path(m.output_dir) / "retrain_report.json");
    std::cout << "retrain test F1 " << res.micro_f1_test << " (" << res.wall_time << " s)\n";
    return 0;
}

int cmd_attack(const std::string& manifest_path, std::int64_t seed_override,
               const std::string& out_dir) {
    megu::Manifest m = megu::load_manifest(manifest_path);
    if (seed_override >= 0) m.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_dir.empty()) m.output_dir = out_dir;
    if (m.attack_ratios.empty()) throw std::invalid_argument("manifest has no attack_ratios");
    auto g = megu::load_manifest_dataset(m);

    std::vector<megu::AttackRow> rows(m.attack_ratios.size());
    megu::parallel_for_each(m.attack_ratios, [&](std::size_t i, double ratio) {
        rows[i] = megu::edge_attack_experiment(g, {ratio}, m.backbone, m.depth, m.hidden,
                                               m.pretrain, m.megu, m.seed)[0];
    });

    ordered_json report;
    report["config"] = megu::manifest_to_json(m);
    report["seed"] = m.seed;
    auto arr = ordered_json::array();
    for (const auto& r : rows)
        arr.push_back({{"noise_ratio", r.noise_ratio},
                       {"vanilla_f1", r.vanilla_f1},
                       {"megu_f1", r.megu_f1},
                       {"forgetting_ce_before", r.forgetting_ce_before},
                       {"forgetting_ce_after", r.forgetting_ce_after}});
    report["rows"] = arr;
    write_json(report, fs::path(m.output_dir) / "attack_report.json");

    fs::create_directories(m.output_dir);
    std::ofstream csv(fs::path(m.output_dir) / "attack.csv");
    csv << "noise_ratio,vanilla_f1,megu_f1,forgetting_ce_before,forgetting_ce_after\n";
    for (const auto& r : rows)
        csv << r.noise_ratio << ',' << r.vanilla_f1 << ',' << r.megu_f1 << ','
            << r.forgetting_ce_before << ',' << r.forgetting_ce_after << '\n';
    for (const auto& r : rows)
        std::cout << "ratio " << r.noise_ratio << ": vanilla F1 " << r.vanilla_f1 << ", MEGU F1 "
                  << r.megu_f1 << "\n";
    return 0;
}

int cmd_eval(const std::string& bundle, const std::string& checkpoint) {
    auto g = megu::load_bundle(bundle);
    auto adj = megu::normalize_adjacency(g);
    auto params = megu::load_checkpoint(checkpoint);
    auto pred = megu::argmax_rows(megu::encode(adj, g.X, params));
    ordered_json out{{"micro_f1_train", megu::micro_f1(pred, g.y, g.train_mask)},
                     {"micro_f1_test", megu::micro_f1(pred, g.y, g.test_mask)}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEGU graph unlearning toolkit"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic SBM bundle");
    std::string gen_blocks = "2x100", gen_out;
    double gen_pin = 0.1, gen_pout = 0.01, gen_signal = 1.0, gen_noise = 0.5;
    std::uint64_t gen_seed = 0;
    gen->add_option("--blocks", gen_blocks, "block spec, e.g. 4x150 or 150,150");
    gen->add_option("--p-in", gen_pin)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--p-out", gen_pout)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--signal", gen_signal)->check(CLI::NonNegativeNumber);
    gen->add_option("--noise", gen_noise)->check(CLI::NonNegativeNumber);
    gen->add_option("--seed", gen_seed);
    gen->add_option("out", gen_out, "output bundle directory")->required();

    auto* pre = app.add_subcommand("pretrain", "Train an original model on a bundle");
    std::string pre_bundle, pre_backbone = "gcn", pre_out = "checkpoint.json";
    std::size_t pre_depth = 2, pre_hidden = 16, pre_epochs = 200;
    double pre_lr = 0.05, pre_wd = 0.0;
    std::uint64_t pre_seed = 0;
    pre->add_option("--bundle", pre_bundle)->required();
    pre->add_option("--backbone", pre_backbone)->check(CLI::IsMember({"sgc", "gcn"}));
    pre->add_option("--depth", pre_depth);
    pre->add_option("--hidden", pre_hidden);
    pre->add_option("--epochs", pre_epochs);
    pre->add_option("--lr", pre_lr);
    pre->add_option("--weight-decay", pre_wd);
    pre->add_option("--seed", pre_seed);
    pre->add_option("--out", pre_out);

    std::string manifest_path, out_dir;
    std::int64_t seed_override = -1;
    auto add_manifest_opts = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path)->required();
        cmd->add_option("--seed", seed_override, "override the manifest seed");
        cmd->add_option("--out", out_dir, "override the manifest output directory");
    };
    auto* unl = app.add_subcommand("unlearn", "Run a MEGU unlearning experiment");
    add_manifest_opts(unl);
    auto* ret = app.add_subcommand("retrain", "Run the retrain-from-scratch oracle");
    add_manifest_opts(ret);
    auto* atk = app.add_subcommand("attack", "Run the edge-attack robustness experiment");
    add_manifest_opts(atk);

    auto* ev = app.add_subcommand("eval", "Score a checkpoint against a bundle");
    std::string ev_bundle, ev_ckpt;
    ev->add_option("--bundle", ev_bundle)->required();
    ev->add_option("--checkpoint", ev_ckpt)->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_gen(gen_blocks, gen_pin, gen_pout, gen_signal, gen_noise, gen_seed, gen_out);
        if (pre->parsed())
            return cmd_pretrain(pre_bundle, pre_backbone, pre_depth, pre_hidden, pre_epochs, pre_lr,
                                pre_wd, pre_seed, pre_out);
        if (unl->parsed()) return cmd_unlearn(manifest_path, seed_override, out_dir);
        if (ret->parsed()) return cmd_retrain(manifest_path, seed_override, out_dir);
        if (atk->parsed()) return cmd_attack(manifest_path, seed_override, out_dir);
        if (ev->parsed()) return cmd_eval(ev_bundle, ev_ckpt);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
