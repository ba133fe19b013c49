#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ucl/checkpoint.hpp"
#include "ucl/config.hpp"
#include "ucl/metrics.hpp"

// The CLI subcommands as library functions so tests can drive them directly.
// Every command persists the resolved config next to its outputs and embeds
// the config hash in its artifacts.

namespace ucl {

/// Writes one dataset directory per configured domain under out_root.
/// Existing directories are refused unless force is set.
void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out_root, bool force);

/// Contrastive pretraining on the train split of the configured train domain;
/// writes encoder.ckpt, pretrain_report.json, pretrain_loss.csv, config.json.
void cmd_pretrain(const RunConfig& config, const std::filesystem::path& data_root,
                  const std::filesystem::path& out_dir);

/// Probe training on frozen features; writes classifier.ckpt and reports.
void cmd_probe(const RunConfig& config, const std::filesystem::path& encoder_ckpt,
               const std::filesystem::path& data_root, const std::filesystem::path& out_dir);

/// Per-domain EvalReport JSON and ROC CSV for the test split of each domain.
std::vector<EvalReport> cmd_eval(const RunConfig& config,
                                 const std::filesystem::path& encoder_ckpt,
                                 const std::filesystem::path& classifier_ckpt,
                                 const std::vector<std::string>& test_domains,
                                 const std::filesystem::path& data_root,
                                 const std::filesystem::path& out_dir);

struct AblateRow {
    std::string label;
    std::vector<double> auc_per_domain;
};

struct AblateTable {
    std::vector<std::string> domains;
    std::vector<AblateRow> rows;
};

/// Grids: "augmentation" (crop / crop+flip / full rows), "feature-source"
/// (encoder vs projection head), "denominator" (exclude_self vs literal).
/// `rows` filters the grid by 1-based row number; empty keeps every row.
AblateTable cmd_ablate(const RunConfig& config, const std::string& grid,
                       const std::vector<std::size_t>& rows,
                       const std::filesystem::path& data_root,
                       const std::filesystem::path& out_dir);

/// Renders an ROC CSV to SVG.
void cmd_roc(const std::filesystem::path& csv_path, const std::filesystem::path& svg_path);

} // namespace ucl
