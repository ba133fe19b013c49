#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "ucl/model.hpp"
#include "ucl/tensor.hpp"

// Binary checkpoint container: magic "UCL1", u32 LE format version, u64 LE
// header length, JSON header (names, shapes, byte offsets, config hash,
// seed), then contiguous row-major f32 little-endian payload per tensor.
// Round trips are bit-exact.

namespace ucl {

struct Checkpoint {
    std::string kind; // "encoder" or "classifier"
    std::string config_hash;
    std::uint64_t seed = 0;
    nlohmann::json extra = nlohmann::json::object(); // model configs, provenance
    std::map<std::string, Tensor> tensors;           // name -> value, sorted
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// FNV-1a of the whole file, hex; identifies a checkpoint in reports.
std::string checkpoint_file_hash(const std::filesystem::path& path);

// model struct <-> checkpoint conversions (running stats ride along as
// tensors; the flag tensor records whether they were ever updated)

Checkpoint encoder_to_checkpoint(const EncoderParams& encoder, const ProjectionParams& projection,
                                 std::uint64_t seed, const std::string& config_hash,
                                 const std::string& train_domain);
void checkpoint_to_encoder(const Checkpoint& ckpt, EncoderParams& encoder,
                           ProjectionParams& projection);

Checkpoint classifier_to_checkpoint(const ClassifierParams& classifier, std::uint64_t seed,
                                    const std::string& config_hash,
                                    const std::string& train_domain,
                                    const std::string& feature_source);
ClassifierParams checkpoint_to_classifier(const Checkpoint& ckpt);

} // namespace ucl
