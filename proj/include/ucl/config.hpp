#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucl/augment.hpp"
#include "ucl/contrastive.hpp"
#include "ucl/dataset.hpp"
#include "ucl/model.hpp"
#include "ucl/train.hpp"

// One JSON document drives every command. Parsing is strict: unknown keys are
// rejected with the offending path, and the persisted copy carries every
// default materialized.

namespace ucl {

struct DataConfig {
    std::string root = "data";
    std::string train_domain = "synthA";
    SplitSpec split;
    std::vector<DomainSpec> domains;
};

struct PretrainSection {
    SgdConfig sgd;
    double temperature = 0.5;
    DenominatorMode denominator = DenominatorMode::ExcludeSelf;
};

struct ProbeSection {
    SgdConfig sgd;
    FeatureSource feature_source = FeatureSource::Encoder;
    std::vector<std::size_t> classifier_widths = {128, 256, 128, 16};
};

struct EvalSection {
    std::vector<std::string> test_domains;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    AugmentationPolicy augmentation;
    EncoderConfig encoder;
    ProjectionConfig projection;
    PretrainSection pretrain;
    ProbeSection probe;
    EvalSection eval;

    /// "desk" (default, CPU scale) or "paper" (verbatim large-scale settings).
    static RunConfig preset(const std::string& name);

    /// Parses on top of the preset named by the optional "preset" key.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);

    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;

    /// FNV-1a of the canonical dump; embedded in every output artifact.
    std::string hash() const;

    void validate() const;

    const DomainSpec& domain(const std::string& name) const;
    std::filesystem::path domain_dir(const std::string& name) const {
        return std::filesystem::path(data.root) / name;
    }
};

} // namespace ucl
