#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ucl/checkpoint.hpp"
#include "ucl/train.hpp"

using namespace ucl;

namespace {

// reduced settings: the desk-scale run lives in the acceptance suite
struct TinySetup {
    EncoderConfig encoder;
    ProjectionConfig projection;
    AugmentationPolicy policy;
    SgdConfig sgd;

    TinySetup() {
        encoder.input_size = 16;
        encoder.stem_channels = 8;
        encoder.block_widths = {8, 16};
        projection.hidden_dim = 16;
        projection.output_dim = 8;
        policy = AugmentationPolicy::full(16);
        sgd = SgdConfig{1e-3, 6, 0.5, 8, 6, 0.0, 0.0};
    }
};

std::vector<ImageSample> tiny_domain(std::size_t per_class, std::uint64_t seed = 77) {
    DomainSpec spec;
    spec.name = "tiny";
    spec.artifact = ArtifactType::BoundarySeam;
    spec.strength = 0.4;
    spec.real_count = spec.fake_count = per_class;
    spec.image_size = 16;
    spec.seed = seed;
    return generate_synthetic_domain(spec);
}

std::uint64_t params_checksum(EncoderParams& encoder, ProjectionParams& projection) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto eat = [&h](const std::string&, Tensor& t) {
        h = fnv1a64(t.data().data(), t.data().size() * sizeof(float), h);
    };
    for_each_tensor(encoder, eat);
    for_each_tensor(projection, eat);
    return h;
}

FeatureTable gaussian_blobs(std::size_t per_class, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    FeatureTable table;
    table.features = Tensor({2 * per_class, dim});
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool fake = i >= per_class;
        for (std::size_t d = 0; d < dim; ++d)
            table.features.data()[i * dim + d] =
                static_cast<float>(rng.normal() * 0.7 + (fake ? 1.0 : -1.0) * (d % 3 == 0));
        table.labels.push_back(fake ? 1 : 0);
    }
    return table;
}

} // namespace

TEST_CASE("step_lr reproduces the published schedules") {
    CHECK(step_lr(5e-4, 6, 0.5, 0) == doctest::Approx(5e-4));
    CHECK(step_lr(5e-4, 6, 0.5, 5) == doctest::Approx(5e-4));
    CHECK(step_lr(5e-4, 6, 0.5, 6) == doctest::Approx(2.5e-4));
    CHECK(step_lr(5e-4, 6, 0.5, 12) == doctest::Approx(1.25e-4));
    CHECK(step_lr(0.3, 400, 0.8, 399) == doctest::Approx(0.3));
    CHECK(step_lr(0.3, 400, 0.8, 400) == doctest::Approx(0.06));
    CHECK(step_lr(0.42, 10, 0.0, 999) == doctest::Approx(0.42)); // zero rate: constant
}

TEST_CASE("sgd config validation") {
    SgdConfig bad_lr{0.0, 6, 0.5, 8, 2, 0.0, 0.0};
    CHECK_THROWS_WITH_AS(bad_lr.validate("pretrain", true), doctest::Contains("pretrain.lr"),
                         ValidationError);
    SgdConfig bad_rate{1e-3, 6, 1.0, 8, 2, 0.0, 0.0};
    CHECK_THROWS_AS(bad_rate.validate("probe", false), ValidationError);
    SgdConfig small_batch{1e-3, 6, 0.5, 1, 2, 0.0, 0.0};
    CHECK_THROWS_AS(small_batch.validate("pretrain", true), ValidationError);
    CHECK_NOTHROW(small_batch.validate("probe", false));
}

TEST_CASE("an SGD step changes parameters by exactly -lr*g") {
    ClassifierConfig cfg;
    cfg.input_dim = 4;
    cfg.widths = {3};
    ClassifierParams params = init_classifier<float>(cfg, 11);
    ClassifierParams before = params;
    std::vector<float> before_w = params.stack[0].weight.data();

    Tape tape;
    ClassifierParams tp = tracked(tape, params);
    Tensor x = Tensor::full({2, 4}, 0.5f);
    Tensor loss = cross_entropy_mean(classifier_logits(x, tp), {0, 1});
    GradMap grads = backward(loss);
    Tensor g = grads.at(tp.stack[0].weight);

    std::map<std::string, std::vector<float>> velocity;
    const double lr = 0.05;
    sgd_step(params, tp, grads, lr, 0.0, 0.0, velocity);
    for (std::size_t i = 0; i < before_w.size(); ++i)
        CHECK(params.stack[0].weight.data()[i] ==
              before_w[i] - static_cast<float>(lr) * g.data()[i]);
}

TEST_CASE("pretrain: loss trace decreases on the tiny synthetic task") {
    TinySetup s;
    auto samples = tiny_domain(16);
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    PretrainResult r = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 0);
    REQUIRE(r.report.loss_per_epoch.size() == s.sgd.epochs);
    const auto& t = r.report.loss_per_epoch;
    const double first = (t[0] + t[1] + t[2]) / 3.0;
    const double last = (t[t.size() - 3] + t[t.size() - 2] + t[t.size() - 1]) / 3.0;
    CHECK(last < first);
    CHECK(r.report.lr_per_epoch[0] == doctest::Approx(1e-3));
}

TEST_CASE("pretrain: the training path never reads labels") {
    TinySetup s;
    s.sgd.epochs = 2;
    auto samples = tiny_domain(8);
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    // shuffle every label; the unlabeled view is identical by construction
    auto shuffled = samples;
    for (auto& smp : shuffled) smp.label = Label::Fake;
    UnlabeledDataset data2 = strip_labels(shuffled, s.encoder.input_size);
    PretrainResult a = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 3);
    PretrainResult b = pretrain(data2, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 3);
    CHECK(params_checksum(a.encoder, a.projection) == params_checksum(b.encoder, b.projection));
}

TEST_CASE("pretrain: lr=0 leaves parameters bit-exactly at initialization") {
    TinySetup s;
    s.sgd.lr = 0.0;
    s.sgd.epochs = 1;
    s.sgd.batch_size = 2;
    auto samples = tiny_domain(1); // 1 real + 1 fake
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    PretrainResult r = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 5);
    EncoderParams init_e = init_encoder<float>(s.encoder, 5);
    ProjectionParams init_p = init_projection<float>(s.encoder.feature_dim(), s.projection, 5);
    CHECK(params_checksum(r.encoder, r.projection) == params_checksum(init_e, init_p));
}

TEST_CASE("pretrain: determinism across repeated runs") {
    TinySetup s;
    s.sgd.epochs = 2;
    auto samples = tiny_domain(8);
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    PretrainResult a = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 9);
    PretrainResult b = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 9);
    CHECK(params_checksum(a.encoder, a.projection) == params_checksum(b.encoder, b.projection));
    CHECK(a.report.loss_per_epoch == b.report.loss_per_epoch);
}

TEST_CASE("pretrain: validation errors") {
    TinySetup s;
    UnlabeledDataset empty;
    CHECK_THROWS_AS(pretrain(empty, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                             DenominatorMode::ExcludeSelf, 0),
                    ValidationError);
    auto samples = tiny_domain(2);
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    SgdConfig tiny_batch = s.sgd;
    tiny_batch.batch_size = 1;
    CHECK_THROWS_AS(pretrain(data, s.policy, s.encoder, s.projection, tiny_batch, 0.5,
                             DenominatorMode::ExcludeSelf, 0),
                    ValidationError);
    CHECK_THROWS_AS(pretrain(data, s.policy, s.encoder, s.projection, s.sgd, -0.5,
                             DenominatorMode::ExcludeSelf, 0),
                    ValidationError);
}

TEST_CASE("extract_features: deterministic, one row per sample, head source") {
    TinySetup s;
    s.sgd.epochs = 1;
    auto samples = tiny_domain(6);
    UnlabeledDataset data = strip_labels(samples, s.encoder.input_size);
    PretrainResult r = pretrain(data, s.policy, s.encoder, s.projection, s.sgd, 0.5,
                                DenominatorMode::ExcludeSelf, 1);
    FeatureTable t1 = extract_features(r.encoder, r.projection, samples);
    FeatureTable t2 = extract_features(r.encoder, r.projection, samples);
    CHECK(t1.features.data() == t2.features.data());
    CHECK(t1.features.shape() == Shape{12, 16});
    CHECK(t1.labels.size() == 12);

    FeatureTable z = extract_features(r.encoder, r.projection, samples,
                                      FeatureSource::ProjectionHead);
    CHECK(z.features.shape() == Shape{12, 8});
}

TEST_CASE("probe: separable blobs reach 99% training accuracy within 200 epochs") {
    FeatureTable table = gaussian_blobs(100, 16, 13);
    ClassifierConfig cfg;
    cfg.input_dim = 16;
    cfg.widths = {16, 8};
    SgdConfig sgd{0.05, 400, 0.8, 64, 200, 0.0, 0.0};
    ProbeResult r = train_probe(table, cfg, sgd, 0);

    std::vector<double> scores = probe_scores(table, r.classifier);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        correct += (scores[i] >= 0.5 ? 1 : 0) == table.labels[i];
    CHECK(static_cast<double>(correct) / scores.size() >= 0.99);

    // loss trace non-increasing in at least 80% of epoch transitions
    std::size_t non_increasing = 0;
    const auto& t = r.report.loss_per_epoch;
    for (std::size_t e = 1; e < t.size(); ++e) non_increasing += t[e] <= t[e - 1];
    CHECK(static_cast<double>(non_increasing) / (t.size() - 1) >= 0.8);
}

TEST_CASE("probe: lr=0 leaves the classifier at initialization") {
    FeatureTable table = gaussian_blobs(20, 8, 5);
    ClassifierConfig cfg;
    cfg.input_dim = 8;
    cfg.widths = {8};
    SgdConfig sgd{0.0, 400, 0.8, 16, 3, 0.0, 0.0};
    ProbeResult r = train_probe(table, cfg, sgd, 21);
    ClassifierParams init = init_classifier<float>(cfg, 21);
    bool equal = true;
    for_each_tensor(r.classifier, [&](const std::string& name, Tensor& t) {
        for_each_tensor(init, [&](const std::string& n2, Tensor& t2) {
            if (n2 == name) equal = equal && (t.data() == t2.data());
        });
    });
    CHECK(equal);
}

TEST_CASE("probe: a class absent from the labels is an error") {
    FeatureTable table = gaussian_blobs(10, 4, 3);
    for (auto& l : table.labels) l = 0;
    ClassifierConfig cfg;
    cfg.input_dim = 4;
    cfg.widths = {4};
    SgdConfig sgd{0.1, 400, 0.8, 8, 2, 0.0, 0.0};
    CHECK_THROWS_AS(train_probe(table, cfg, sgd, 0), ValidationError);
}

TEST_CASE("calibration enables eval mode on a fresh encoder") {
    TinySetup s;
    auto samples = tiny_domain(4);
    EncoderParams params = init_encoder<float>(s.encoder, 31);
    ProjectionParams proj = init_projection<float>(s.encoder.feature_dim(), s.projection, 31);
    CHECK_THROWS_AS(extract_features(params, proj, samples), ValidationError);
    calibrate_batchnorm(params, samples);
    CHECK_NOTHROW(extract_features(params, proj, samples));
}
