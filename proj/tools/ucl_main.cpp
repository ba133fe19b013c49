#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

#include "ucl/commands.hpp"

// ucl gen-data|pretrain|probe|eval|ablate|roc --config <path> [--out <dir>]
//     [--seed <u64>] [--force]
// exit codes: 0 success, 1 validation error, 2 I/O error

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::string data_root;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ucl::RunConfig load_config(const CommonArgs& args) {
    if (args.config_path.empty()) throw ucl::ValidationError("missing --config <path>");
    ucl::RunConfig config = ucl::RunConfig::load(args.config_path);
    if (args.seed_set) config.seed = args.seed;
    return config;
}

std::filesystem::path data_root_of(const CommonArgs& args, const ucl::RunConfig& config) {
    return args.data_root.empty() ? std::filesystem::path(config.data.root)
                                  : std::filesystem::path(args.data_root);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run configuration (JSON)");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--data", args.data_root, "dataset root (defaults to config data.root)");
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"unsupervised contrastive pretraining and linear-probe evaluation"};
    app.require_subcommand(1);

    CommonArgs args;
    bool force = false;
    std::string encoder_ckpt, classifier_ckpt, grid = "augmentation", csv_in, svg_out;
    std::vector<std::string> test_domains;
    std::vector<std::size_t> rows;

    CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic domain datasets");
    add_common(gen, args);
    gen->add_flag("--force", force, "replace existing dataset directories");

    CLI::App* pre = app.add_subcommand("pretrain", "contrastive pretraining of encoder and head");
    add_common(pre, args);

    CLI::App* probe = app.add_subcommand("probe", "train the classifier on frozen features");
    add_common(probe, args);
    probe->add_option("--encoder", encoder_ckpt, "encoder checkpoint path");

    CLI::App* eval = app.add_subcommand("eval", "AUC/ROC per test domain");
    add_common(eval, args);
    eval->add_option("--encoder", encoder_ckpt, "encoder checkpoint path");
    eval->add_option("--classifier", classifier_ckpt, "classifier checkpoint path");
    eval->add_option("--test-domains", test_domains, "domains to evaluate (default: config)");

    CLI::App* ablate = app.add_subcommand("ablate", "comparative grids");
    add_common(ablate, args);
    ablate->add_option("--grid", grid, "augmentation|feature-source|denominator");
    ablate->add_option("--rows", rows, "1-based row filter (default: all rows)");

    CLI::App* roc = app.add_subcommand("roc", "render an ROC CSV as SVG");
    roc->add_option("--csv", csv_in, "input roc csv")->required();
    roc->add_option("--svg", svg_out, "output svg path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ucl::RunConfig config = load_config(args);
            const auto out = args.out_dir.empty() ? std::filesystem::path(config.data.root)
                                                  : std::filesystem::path(args.out_dir);
            ucl::cmd_gen_data(config, out, force);
            std::cout << "datasets written under " << out.string() << "\n";
        } else if (pre->parsed()) {
            ucl::RunConfig config = load_config(args);
            const auto out = args.out_dir.empty() ? std::filesystem::path("runs/pretrain")
                                                  : std::filesystem::path(args.out_dir);
            ucl::cmd_pretrain(config, data_root_of(args, config), out);
            std::cout << "encoder checkpoint at " << (out / "encoder.ckpt").string() << "\n";
        } else if (probe->parsed()) {
            ucl::RunConfig config = load_config(args);
            const auto out = args.out_dir.empty() ? std::filesystem::path("runs/probe")
                                                  : std::filesystem::path(args.out_dir);
            if (encoder_ckpt.empty())
                throw ucl::ValidationError("probe: missing --encoder <checkpoint>");
            ucl::cmd_probe(config, encoder_ckpt, data_root_of(args, config), out);
            std::cout << "classifier checkpoint at " << (out / "classifier.ckpt").string()
                      << "\n";
        } else if (eval->parsed()) {
            ucl::RunConfig config = load_config(args);
            const auto out = args.out_dir.empty() ? std::filesystem::path("runs/eval")
                                                  : std::filesystem::path(args.out_dir);
            if (encoder_ckpt.empty() || classifier_ckpt.empty())
                throw ucl::ValidationError("eval: missing --encoder or --classifier");
            auto reports = ucl::cmd_eval(config, encoder_ckpt, classifier_ckpt, test_domains,
                                         data_root_of(args, config), out);
            for (const auto& r : reports)
                std::cout << r.train_domain << " -> " << r.test_domain << "  auc=" << r.auc
                          << "  acc=" << r.accuracy << "\n";
        } else if (ablate->parsed()) {
            ucl::RunConfig config = load_config(args);
            const auto out = args.out_dir.empty() ? std::filesystem::path("runs/ablate")
                                                  : std::filesystem::path(args.out_dir);
            ucl::AblateTable table =
                ucl::cmd_ablate(config, grid, rows, data_root_of(args, config), out);
            std::cout << "grid '" << grid << "': " << table.rows.size() << " rows over "
                      << table.domains.size() << " domains -> "
                      << (out / ("ablate_" + grid + ".txt")).string() << "\n";
        } else if (roc->parsed()) {
            const auto out = svg_out.empty()
                                 ? std::filesystem::path(csv_in).replace_extension(".svg")
                                 : std::filesystem::path(svg_out);
            ucl::cmd_roc(csv_in, out);
            std::cout << "svg at " << out.string() << "\n";
        }
    } catch (const ucl::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ucl::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
