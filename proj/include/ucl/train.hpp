#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ucl/augment.hpp"
#include "ucl/contrastive.hpp"
#include "ucl/dataset.hpp"
#include "ucl/model.hpp"

namespace ucl {

struct SgdConfig {
    double lr = 5e-4;
    std::size_t step_size = 6;
    double descending_rate = 0.5; // fraction removed per step
    std::size_t batch_size = 40;
    std::size_t epochs = 20;
    double momentum = 0.0;
    double weight_decay = 0.0;

    /// Config-level invariants; the train loops themselves also accept
    /// degenerate values (lr = 0) for no-op tests.
    void validate(const std::string& section, bool pretraining) const;
};

/// lr = initial * (1 - descending_rate)^floor(epoch / step_size)
double step_lr(double initial_lr, std::size_t step_size, double descending_rate,
               std::size_t epoch);

struct TrainReport {
    std::vector<double> loss_per_epoch;
    std::vector<double> lr_per_epoch;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string config_hash;

    std::string to_json() const;
    void write_loss_csv(const std::filesystem::path& path) const; // epoch,loss,lr
};

/// Images only: the pretraining path cannot read labels by construction.
struct UnlabeledDataset {
    std::vector<Image> images;
};

/// Face-crop (when a bbox is present) or center-crop, then resize to
/// input_size. This is the shared deterministic preprocessing in front of both
/// training stages and evaluation.
Image prepare_image(const ImageSample& sample, std::size_t input_size);

UnlabeledDataset strip_labels(const std::vector<ImageSample>& samples, std::size_t input_size);

Tensor to_batch_tensor(const std::vector<Image>& images);

struct PretrainResult {
    EncoderParams encoder;
    ProjectionParams projection;
    TrainReport report;
};

/// Contrastive pretraining: per batch of N images, builds 2N views, runs
/// encoder + projection head and minimizes the contrastive loss by SGD.
/// Incomplete trailing batches are dropped.
PretrainResult pretrain(const UnlabeledDataset& data, const AugmentationPolicy& policy,
                        const EncoderConfig& encoder_config,
                        const ProjectionConfig& projection_config, const SgdConfig& sgd,
                        double temperature, DenominatorMode denominator, std::uint64_t seed);

enum class FeatureSource { Encoder, ProjectionHead };

inline FeatureSource feature_source_from_name(const std::string& name) {
    if (name == "encoder") return FeatureSource::Encoder;
    if (name == "projection_head") return FeatureSource::ProjectionHead;
    throw ValidationError("feature_source: unknown '" + name +
                          "' (expected encoder|projection_head)");
}

inline const char* feature_source_name(FeatureSource s) {
    return s == FeatureSource::Encoder ? "encoder" : "projection_head";
}

struct FeatureTable {
    Tensor features; // [M, dim]
    std::vector<int> labels; // 1 = fake
};

/// Deterministic eval-mode features over prepared, un-augmented images.
FeatureTable extract_features(EncoderParams& encoder, const ProjectionParams& projection,
                              const std::vector<ImageSample>& samples,
                              FeatureSource source = FeatureSource::Encoder);

struct ProbeResult {
    ClassifierParams classifier;
    TrainReport report;
};

/// Supervised classifier on frozen features: 2-class cross-entropy by SGD.
ProbeResult train_probe(const FeatureTable& table, const ClassifierConfig& config,
                        const SgdConfig& sgd, std::uint64_t seed);

/// Fake-class probabilities for a feature table under a trained classifier.
std::vector<double> probe_scores(const FeatureTable& table, const ClassifierParams& classifier);

/// One pass over the images in train mode to populate batch-norm running
/// statistics without touching weights. Required before eval-mode use of a
/// freshly initialized encoder.
void calibrate_batchnorm(EncoderParams& encoder, const std::vector<ImageSample>& samples,
                         std::size_t batch_size = 128);

/// Exact single SGD step used by both loops; exposed for the update-rule test.
/// With zero momentum and weight decay the parameter change is exactly -lr*g.
template <typename Params>
void sgd_step(Params& params, const Params& tracked_params, const GradMap& grads, double lr,
              double momentum, double weight_decay,
              std::map<std::string, std::vector<float>>& velocity) {
    std::map<std::string, Tensor> tracked_by_name;
    Params& tracked_mut = const_cast<Params&>(tracked_params);
    for_each_tensor(tracked_mut,
                    [&](const std::string& name, Tensor& t) { tracked_by_name[name] = t; });
    for_each_tensor(params, [&](const std::string& name, Tensor& p) {
        auto grad = grads.find(tracked_by_name.at(name));
        if (!grad) return; // parameter untouched by this loss
        const auto& g = grad->data();
        auto& pv = p.data();
        if (momentum != 0.0) {
            auto& v = velocity[name];
            if (v.empty()) v.assign(pv.size(), 0.0f);
            for (std::size_t i = 0; i < pv.size(); ++i) {
                const float step = g[i] + static_cast<float>(weight_decay) * pv[i];
                v[i] = static_cast<float>(momentum) * v[i] + step;
                pv[i] -= static_cast<float>(lr) * v[i];
            }
        } else {
            for (std::size_t i = 0; i < pv.size(); ++i)
                pv[i] -= static_cast<float>(lr) *
                         (g[i] + static_cast<float>(weight_decay) * pv[i]);
        }
    });
}

} // namespace ucl
