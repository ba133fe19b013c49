#include "ucl/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ucl/svg.hpp"
#include "ucl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ucl {

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string());
}

void persist_config(const RunConfig& config, const fs::path& out_dir) {
    ensure_dir(out_dir);
    config.save(out_dir / "config.json");
}

std::vector<ImageSample> load_domain_split(const RunConfig& config, const fs::path& data_root,
                                           const std::string& domain, bool test_side) {
    const fs::path dir = data_root / domain;
    std::vector<ImageSample> samples = load_dataset(dir);
    if (samples.empty())
        throw ValidationError("dataset: no samples under " + dir.string() +
                              " (run gen-data first)");
    auto [train, test] = split(samples, config.data.split);
    return test_side ? std::move(test) : std::move(train);
}

struct LoadedEncoder {
    EncoderParams encoder;
    ProjectionParams projection;
    Checkpoint ckpt;
};

LoadedEncoder load_encoder(const fs::path& path) {
    LoadedEncoder le;
    le.ckpt = load_checkpoint(path);
    checkpoint_to_encoder(le.ckpt, le.encoder, le.projection);
    return le;
}

} // namespace

void cmd_gen_data(const RunConfig& config, const fs::path& out_root, bool force) {
    ensure_dir(out_root);
    json report;
    report["config_hash"] = config.hash();
    json domains = json::array();
    for (const auto& spec : config.data.domains) {
        const fs::path dir = out_root / spec.name;
        if (fs::exists(dir)) {
            if (!force)
                throw IoError("gen-data: " + dir.string() +
                              " already exists (pass --force to regenerate)");
            fs::remove_all(dir);
        }
        std::vector<ImageSample> samples = generate_synthetic_domain(spec);
        save_dataset(dir, samples);
        json d;
        d["name"] = spec.name;
        d["samples"] = samples.size();
        d["checksum"] = hex64(domain_checksum(samples));
        domains.push_back(d);
    }
    report["domains"] = domains;
    std::ofstream f(out_root / "gen_report.json");
    if (!f) throw IoError("gen-data: cannot write report");
    f << report.dump(2) << "\n";
    RunConfig copy = config;
    copy.save(out_root / "config.json");
}

void cmd_pretrain(const RunConfig& config, const fs::path& data_root, const fs::path& out_dir) {
    persist_config(config, out_dir);
    std::vector<ImageSample> train =
        load_domain_split(config, data_root, config.data.train_domain, false);
    UnlabeledDataset unlabeled = strip_labels(train, config.encoder.input_size);
    PretrainResult result =
        pretrain(unlabeled, config.augmentation, config.encoder, config.projection,
                 config.pretrain.sgd, config.pretrain.temperature, config.pretrain.denominator,
                 config.seed);
    result.report.config_hash = config.hash();
    save_checkpoint(out_dir / "encoder.ckpt",
                    encoder_to_checkpoint(result.encoder, result.projection, config.seed,
                                          config.hash(), config.data.train_domain));
    std::ofstream f(out_dir / "pretrain_report.json");
    f << result.report.to_json() << "\n";
    result.report.write_loss_csv(out_dir / "pretrain_loss.csv");
}

void cmd_probe(const RunConfig& config, const fs::path& encoder_ckpt, const fs::path& data_root,
               const fs::path& out_dir) {
    persist_config(config, out_dir);
    LoadedEncoder le = load_encoder(encoder_ckpt);
    std::vector<ImageSample> train =
        load_domain_split(config, data_root, config.data.train_domain, false);
    FeatureTable table =
        extract_features(le.encoder, le.projection, train, config.probe.feature_source);
    ClassifierConfig cc;
    cc.input_dim = table.features.shape()[1];
    cc.widths = config.probe.classifier_widths;
    ProbeResult result = train_probe(table, cc, config.probe.sgd, config.seed);
    result.report.config_hash = config.hash();
    save_checkpoint(out_dir / "classifier.ckpt",
                    classifier_to_checkpoint(result.classifier, config.seed, config.hash(),
                                             config.data.train_domain,
                                             feature_source_name(config.probe.feature_source)));
    std::ofstream f(out_dir / "probe_report.json");
    f << result.report.to_json() << "\n";
    result.report.write_loss_csv(out_dir / "probe_loss.csv");
}

std::vector<EvalReport> cmd_eval(const RunConfig& config, const fs::path& encoder_ckpt,
                                 const fs::path& classifier_ckpt,
                                 const std::vector<std::string>& test_domains,
                                 const fs::path& data_root, const fs::path& out_dir) {
    persist_config(config, out_dir);
    LoadedEncoder le = load_encoder(encoder_ckpt);
    Checkpoint cckpt = load_checkpoint(classifier_ckpt);
    ClassifierParams classifier = checkpoint_to_classifier(cckpt);
    const FeatureSource source =
        feature_source_from_name(cckpt.extra.value("feature_source", std::string("encoder")));
    const std::string train_domain = cckpt.extra.value("train_domain", std::string("unknown"));
    const std::string ckpt_hash = checkpoint_file_hash(classifier_ckpt);

    const std::vector<std::string>& domains =
        test_domains.empty() ? config.eval.test_domains : test_domains;
    std::vector<EvalReport> reports;
    for (const std::string& domain : domains) {
        std::vector<ImageSample> test = load_domain_split(config, data_root, domain, true);
        FeatureTable table = extract_features(le.encoder, le.projection, test, source);
        std::vector<double> scores = probe_scores(table, classifier);

        EvalReport report;
        report.train_domain = train_domain;
        report.test_domain = domain;
        report.auc = auc(scores, table.labels);
        report.accuracy = accuracy(scores, table.labels, 0.5);
        report.fake_count = static_cast<std::size_t>(
            std::count(table.labels.begin(), table.labels.end(), 1));
        report.real_count = table.labels.size() - report.fake_count;
        report.checkpoint_hash = ckpt_hash;
        report.config_hash = config.hash();
        reports.push_back(report);

        RocCurve curve = roc_curve(scores, table.labels);
        write_roc_csv(out_dir / ("roc_" + domain + ".csv"), curve);
        std::ofstream f(out_dir / ("eval_" + domain + ".json"));
        f << report.to_json() << "\n";
    }
    json summary = json::array();
    for (const auto& r : reports) summary.push_back(json::parse(r.to_json()));
    std::ofstream f(out_dir / "eval_summary.json");
    f << summary.dump(2) << "\n";
    return reports;
}

namespace {

struct AblateVariant {
    std::string label;
    RunConfig config;
};

void write_ablate_outputs(const fs::path& out_dir, const std::string& grid,
                          const AblateTable& table, const std::string& config_hash) {
    // csv
    std::ofstream csv(out_dir / ("ablate_" + grid + ".csv"));
    if (!csv) throw IoError("ablate: cannot write csv");
    csv << "variant";
    for (const auto& d : table.domains) csv << "," << d;
    csv << "\n";
    csv.precision(6);
    for (const auto& row : table.rows) {
        csv << row.label;
        for (double v : row.auc_per_domain) csv << "," << v;
        csv << "\n";
    }
    // aligned text
    std::ofstream txt(out_dir / ("ablate_" + grid + ".txt"));
    if (!txt) throw IoError("ablate: cannot write table");
    std::size_t label_width = 8;
    for (const auto& row : table.rows) label_width = std::max(label_width, row.label.size());
    txt << "# config_hash=" << config_hash << "\n";
    txt << std::left << std::setw(static_cast<int>(label_width) + 2) << "variant";
    for (const auto& d : table.domains) txt << std::right << std::setw(10) << d;
    txt << "\n";
    txt << std::fixed << std::setprecision(4);
    for (const auto& row : table.rows) {
        txt << std::left << std::setw(static_cast<int>(label_width) + 2) << row.label;
        for (double v : row.auc_per_domain) txt << std::right << std::setw(10) << v;
        txt << "\n";
    }
}

} // namespace

AblateTable cmd_ablate(const RunConfig& config, const std::string& grid,
                       const std::vector<std::size_t>& rows, const fs::path& data_root,
                       const fs::path& out_dir) {
    persist_config(config, out_dir);
    std::vector<AblateVariant> variants;
    if (grid == "augmentation") {
        const std::size_t out = config.augmentation.output_size;
        AblateVariant crop{"crop", config};
        crop.config.augmentation = AugmentationPolicy::crop_only(out);
        AblateVariant crop_flip{"crop+flip", config};
        crop_flip.config.augmentation = AugmentationPolicy::crop_flip(out);
        AblateVariant full{"crop+flip+jitter+gray", config};
        full.config.augmentation = AugmentationPolicy::full(out);
        variants = {crop, crop_flip, full};
    } else if (grid == "feature-source") {
        AblateVariant enc{"encoder", config};
        enc.config.probe.feature_source = FeatureSource::Encoder;
        AblateVariant head{"projection_head", config};
        head.config.probe.feature_source = FeatureSource::ProjectionHead;
        variants = {enc, head};
    } else if (grid == "denominator") {
        AblateVariant ex{"exclude_self", config};
        ex.config.pretrain.denominator = DenominatorMode::ExcludeSelf;
        AblateVariant lit{"literal", config};
        lit.config.pretrain.denominator = DenominatorMode::Literal;
        variants = {ex, lit};
    } else {
        throw ValidationError("ablate: unknown grid '" + grid +
                              "' (expected augmentation|feature-source|denominator)");
    }
    if (!rows.empty()) {
        std::vector<AblateVariant> filtered;
        for (std::size_t r : rows) {
            if (r < 1 || r > variants.size())
                throw ValidationError("ablate: row " + std::to_string(r) + " outside 1.." +
                                      std::to_string(variants.size()));
            filtered.push_back(variants[r - 1]);
        }
        variants = std::move(filtered);
    }

    AblateTable table;
    table.domains = config.eval.test_domains;
    // the feature-source grid shares one pretrained encoder across rows
    const bool share_encoder = grid == "feature-source";
    fs::path shared_encoder;
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
        const auto& variant = variants[vi];
        const fs::path vdir = out_dir / ("variant_" + std::to_string(vi) + "_" + [&] {
                                  std::string s = variant.label;
                                  std::replace(s.begin(), s.end(), '+', '_');
                                  return s;
                              }());
        ensure_dir(vdir);
        fs::path encoder_ckpt = vdir / "encoder.ckpt";
        if (share_encoder && !shared_encoder.empty()) {
            encoder_ckpt = shared_encoder;
        } else {
            cmd_pretrain(variant.config, data_root, vdir);
            if (share_encoder) shared_encoder = encoder_ckpt;
        }
        cmd_probe(variant.config, encoder_ckpt, data_root, vdir);
        std::vector<EvalReport> reports = cmd_eval(variant.config, encoder_ckpt,
                                                   vdir / "classifier.ckpt", table.domains,
                                                   data_root, vdir);
        AblateRow row;
        row.label = variant.label;
        for (const auto& r : reports) row.auc_per_domain.push_back(r.auc);
        table.rows.push_back(row);
    }
    write_ablate_outputs(out_dir, grid, table, config.hash());
    return table;
}

void cmd_roc(const fs::path& csv_path, const fs::path& svg_path) {
    RocCurve curve = read_roc_csv(csv_path);
    write_roc_svg(svg_path, curve, csv_path.stem().string(), "");
}

} // namespace ucl
