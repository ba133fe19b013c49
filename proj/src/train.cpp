#include "ucl/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace ucl {

void SgdConfig::validate(const std::string& section, bool pretraining) const {
    auto fail = [&](const std::string& key, const std::string& why) {
        throw ValidationError(section + "." + key + ": " + why);
    };
    if (!(lr > 0.0)) fail("lr", "learning rate must be positive");
    if (step_size == 0) fail("step_size", "must be >= 1");
    if (!(descending_rate > 0.0 && descending_rate < 1.0))
        fail("descending_rate", "must lie in (0,1)");
    if (pretraining && batch_size < 2) fail("batch_size", "pretraining needs batches of >= 2");
    if (batch_size == 0) fail("batch_size", "must be >= 1");
    if (epochs == 0) fail("epochs", "must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) fail("momentum", "must lie in [0,1)");
    if (weight_decay < 0.0) fail("weight_decay", "must be >= 0");
}

double step_lr(double initial_lr, std::size_t step_size, double descending_rate,
               std::size_t epoch) {
    if (step_size == 0) throw ValidationError("step_lr: step_size must be >= 1");
    if (descending_rate < 0.0 || descending_rate >= 1.0)
        throw ValidationError("step_lr: descending_rate must lie in [0,1)");
    const auto steps = epoch / step_size;
    return initial_lr * std::pow(1.0 - descending_rate, static_cast<double>(steps));
}

std::string TrainReport::to_json() const {
    nlohmann::json j;
    j["loss_per_epoch"] = loss_per_epoch;
    j["lr_per_epoch"] = lr_per_epoch;
    j["wall_seconds"] = wall_seconds;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    return j.dump(2);
}

void TrainReport::write_loss_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("train report: cannot open " + path.string());
    f << "epoch,loss,lr\n";
    f.precision(10);
    for (std::size_t e = 0; e < loss_per_epoch.size(); ++e)
        f << e << "," << loss_per_epoch[e] << "," << lr_per_epoch[e] << "\n";
}

Image prepare_image(const ImageSample& sample, std::size_t input_size) {
    if (sample.bbox) return preprocess_face_crop(sample.image, *sample.bbox, input_size);
    Image square = center_crop_square(sample.image);
    if (square.height == input_size && square.width == input_size) return square;
    return bilinear_resize(square, input_size, input_size);
}

UnlabeledDataset strip_labels(const std::vector<ImageSample>& samples, std::size_t input_size) {
    UnlabeledDataset out;
    out.images.reserve(samples.size());
    for (const auto& s : samples) out.images.push_back(prepare_image(s, input_size));
    return out;
}

Tensor to_batch_tensor(const std::vector<Image>& images) {
    if (images.empty()) throw ValidationError("batch: no images");
    const std::size_t c = images[0].channels, h = images[0].height, w = images[0].width;
    Tensor t({images.size(), c, h, w});
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].channels != c || images[i].height != h || images[i].width != w)
            throw ValidationError("batch: image extents differ within one batch");
        std::copy(images[i].data.begin(), images[i].data.end(),
                  t.data().begin() + i * c * h * w);
    }
    return t;
}

PretrainResult pretrain(const UnlabeledDataset& data, const AugmentationPolicy& policy,
                        const EncoderConfig& encoder_config,
                        const ProjectionConfig& projection_config, const SgdConfig& sgd,
                        double temperature, DenominatorMode denominator, std::uint64_t seed) {
    if (data.images.empty()) throw ValidationError("pretrain: empty dataset");
    if (sgd.batch_size < 2) throw ValidationError("pretrain: batch size must be >= 2");
    if (!(temperature > 0.0)) throw ValidationError("pretrain: temperature must be positive");
    policy.validate();
    encoder_config.validate();
    if (policy.output_size != encoder_config.input_size)
        throw ValidationError("pretrain: augmentation output_size " +
                              std::to_string(policy.output_size) +
                              " does not match encoder input_size " +
                              std::to_string(encoder_config.input_size));

    const auto t0 = std::chrono::steady_clock::now();
    PretrainResult result;
    result.encoder = init_encoder<float>(encoder_config, seed);
    result.projection =
        init_projection<float>(encoder_config.feature_dim(), projection_config, seed);
    result.report.seed = seed;

    const std::size_t m = data.images.size();
    const std::size_t n = sgd.batch_size;
    std::map<std::string, std::vector<float>> vel_encoder, vel_projection;

    for (std::size_t epoch = 0; epoch < sgd.epochs; ++epoch) {
        const double lr = step_lr(sgd.lr, sgd.step_size, sgd.descending_rate, epoch);
        Rng shuffle = Rng::stream(seed, rng_purpose::kShuffle, epoch);
        const std::vector<std::size_t> order = shuffle.permutation(m);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + n <= m; start += n) {
            std::vector<Image> views;
            views.reserve(2 * n);
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t idx = order[start + k];
                // augmentation streams advance with the epoch so views differ
                // across passes while staying a pure function of the key
                auto [a, b] = make_view_pair(data.images[idx], policy, seed,
                                             static_cast<std::uint64_t>(epoch) * m + idx);
                views.push_back(std::move(a));
                views.push_back(std::move(b));
            }
            Tensor batch = to_batch_tensor(views);

            Tape tape;
            EncoderParams enc = tracked(tape, result.encoder);
            ProjectionParams proj = tracked(tape, result.projection);
            Tensor features = encoder_forward(batch, enc, BnMode::Train);
            Tensor z = projection_forward(features, proj);
            Tensor loss = nt_xent_loss(z, static_cast<float>(temperature), denominator);
            epoch_loss += loss.item();
            ++batches;

            GradMap grads = backward(loss);
            sgd_step(result.encoder, enc, grads, lr, sgd.momentum, sgd.weight_decay, vel_encoder);
            sgd_step(result.projection, proj, grads, lr, sgd.momentum, sgd.weight_decay,
                     vel_projection);
        }
        if (batches == 0)
            throw ValidationError("pretrain: dataset smaller than one batch (" +
                                  std::to_string(m) + " < " + std::to_string(n) + ")");
        result.report.loss_per_epoch.push_back(epoch_loss / static_cast<double>(batches));
        result.report.lr_per_epoch.push_back(lr);
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

FeatureTable extract_features(EncoderParams& encoder, const ProjectionParams& projection,
                              const std::vector<ImageSample>& samples, FeatureSource source) {
    if (samples.empty()) throw ValidationError("extract_features: empty dataset");
    const std::size_t input_size = encoder.config.input_size;
    const std::size_t dim = source == FeatureSource::Encoder
                                ? encoder.config.feature_dim()
                                : projection.config.output_dim;
    FeatureTable table;
    table.features = Tensor({samples.size(), dim});
    table.labels.reserve(samples.size());

    constexpr std::size_t kChunk = 128;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, samples.size() - start);
        std::vector<Image> images;
        images.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            images.push_back(prepare_image(samples[start + i], input_size));
        Tensor batch = to_batch_tensor(images);
        Tensor f = encoder_forward(batch, encoder, BnMode::Eval);
        if (source == FeatureSource::ProjectionHead) f = projection_forward(f, projection);
        std::copy(f.data().begin(), f.data().end(), table.features.data().begin() + start * dim);
    }
    for (const auto& s : samples) table.labels.push_back(s.label == Label::Fake ? 1 : 0);
    return table;
}

ProbeResult train_probe(const FeatureTable& table, const ClassifierConfig& config,
                        const SgdConfig& sgd, std::uint64_t seed) {
    const std::size_t m = table.labels.size();
    if (m == 0) throw ValidationError("probe: empty feature table");
    if (table.features.shape()[0] != m)
        throw ValidationError("probe: feature row count does not match labels");
    bool has_real = false, has_fake = false;
    for (int l : table.labels) (l ? has_fake : has_real) = true;
    if (!has_real || !has_fake)
        throw ValidationError("probe: a class is absent from the training labels");
    if (config.input_dim != table.features.shape()[1])
        throw ValidationError("probe: classifier input_dim " + std::to_string(config.input_dim) +
                              " does not match feature dim " +
                              std::to_string(table.features.shape()[1]));

    const auto t0 = std::chrono::steady_clock::now();
    ProbeResult result;
    result.classifier = init_classifier<float>(config, seed);
    result.report.seed = seed;

    const std::size_t dim = table.features.shape()[1];
    std::map<std::string, std::vector<float>> velocity;
    for (std::size_t epoch = 0; epoch < sgd.epochs; ++epoch) {
        const double lr = step_lr(sgd.lr, sgd.step_size, sgd.descending_rate, epoch);
        Rng shuffle = Rng::stream(seed, rng_purpose::kShuffle, epoch);
        const std::vector<std::size_t> order = shuffle.permutation(m);

        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < m; start += sgd.batch_size) {
            const std::size_t count = std::min(sgd.batch_size, m - start);
            Tensor batch({count, dim});
            std::vector<int> labels(count);
            for (std::size_t k = 0; k < count; ++k) {
                const std::size_t idx = order[start + k];
                std::copy_n(table.features.data().begin() + idx * dim, dim,
                            batch.data().begin() + k * dim);
                labels[k] = table.labels[idx];
            }
            Tape tape;
            ClassifierParams tracked_params = tracked(tape, result.classifier);
            Tensor loss = cross_entropy_mean(classifier_logits(batch, tracked_params), labels);
            epoch_loss += loss.item() * static_cast<double>(count);
            seen += count;
            GradMap grads = backward(loss);
            sgd_step(result.classifier, tracked_params, grads, lr, sgd.momentum, sgd.weight_decay,
                     velocity);
        }
        result.report.loss_per_epoch.push_back(epoch_loss / static_cast<double>(seen));
        result.report.lr_per_epoch.push_back(lr);
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

std::vector<double> probe_scores(const FeatureTable& table, const ClassifierParams& classifier) {
    Tensor probs = classifier_forward(table.features, classifier);
    std::vector<double> scores(table.labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = probs.data()[i * ClassifierConfig::kClasses + 1]; // P(fake)
    return scores;
}

void calibrate_batchnorm(EncoderParams& encoder, const std::vector<ImageSample>& samples,
                         std::size_t batch_size) {
    if (samples.empty()) throw ValidationError("calibrate: empty dataset");
    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, samples.size() - start);
        if (count < 2) break; // batch statistics need at least two values
        std::vector<Image> images;
        images.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            images.push_back(prepare_image(samples[start + i], encoder.config.input_size));
        (void)encoder_forward(to_batch_tensor(images), encoder, BnMode::Train);
    }
}

} // namespace ucl
