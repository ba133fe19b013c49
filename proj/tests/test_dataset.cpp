#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ucl/dataset.hpp"

using namespace ucl;
namespace fs = std::filesystem;

namespace {

Image gradient_frame(std::size_t h, std::size_t w) {
    Image img(3, h, w);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                img.at(c, y, x) = static_cast<float>((x * 13 + y * 7 + c * 29) % 101) / 100.0f;
    return img;
}

DomainSpec reference_spec() {
    DomainSpec spec;
    spec.name = "synthA";
    spec.artifact = ArtifactType::ColorShift;
    spec.strength = 0.15;
    spec.real_count = 20;
    spec.fake_count = 20;
    spec.image_size = 32;
    spec.seed = 42;
    return spec;
}

fs::path temp_dir(const char* tag) {
    fs::path dir = fs::temp_directory_path() / (std::string("ucl_dataset_") + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("face crop: centered square bbox is cropped exactly") {
    Image frame = gradient_frame(64, 64);
    BBox box{20, 20, 24, 24};
    Image out = preprocess_face_crop(frame, box, 24);
    Image expect = crop(frame, 20, 20, 24, 24);
    CHECK(out.data == expect.data);
}

TEST_CASE("face crop: 100x60 box becomes a 100x100 square sharing the center") {
    Image frame = gradient_frame(200, 200);
    BBox box{50, 70, 100, 60};
    Image out = preprocess_face_crop(frame, box, 100);
    // center (100,100), side max(100,60)=100 -> square (50,50)..(150,150)
    Image expect = crop(frame, 50, 50, 100, 100);
    CHECK(out.data == expect.data);
}

TEST_CASE("face crop: overflow shifts the square inside, size preserved") {
    Image frame = gradient_frame(120, 120);
    BBox box{0, 40, 30, 50}; // center x=15, side 50 -> left edge would be -10
    Image out = preprocess_face_crop(frame, box, 50);
    Image expect = crop(frame, 0, 40, 50, 50); // shifted right by 10
    CHECK(out.data == expect.data);
}

TEST_CASE("face crop: degenerate boxes are rejected") {
    Image frame = gradient_frame(32, 32);
    CHECK_THROWS_AS(preprocess_face_crop(frame, BBox{4, 4, 0, 6}, 16), ValidationError);
    CHECK_THROWS_AS(preprocess_face_crop(frame, BBox{40, 40, 8, 8}, 16), ValidationError);
}

TEST_CASE("generator: zero strength makes fake pixels identical to real") {
    DomainSpec spec = reference_spec();
    spec.strength = 0.0;
    spec.real_count = spec.fake_count = 4;
    for (ArtifactType a :
         {ArtifactType::ColorShift, ArtifactType::BoundarySeam, ArtifactType::LowpassPatch}) {
        spec.artifact = a;
        auto samples = generate_synthetic_domain(spec);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(samples[k].image.data == samples[4 + k].image.data);
    }
}

TEST_CASE("generator: counts and class balance are exact") {
    DomainSpec spec = reference_spec();
    spec.real_count = 10;
    spec.fake_count = 10;
    auto samples = generate_synthetic_domain(spec);
    CHECK(samples.size() == 20);
    std::size_t real = 0, fake = 0;
    for (const auto& s : samples) (s.label == Label::Real ? real : fake)++;
    CHECK(real == 10);
    CHECK(fake == 10);
}

TEST_CASE("generator: deterministic and frozen golden checksum") {
    auto a = generate_synthetic_domain(reference_spec());
    auto b = generate_synthetic_domain(reference_spec());
    CHECK(domain_checksum(a) == domain_checksum(b));
    // frozen once from the reference spec (synthA, seed 42, 32 px,
    // color_shift 0.15, 20+20 samples)
    CHECK(domain_checksum(a) == 0x96f54c2c4f574565ULL);
}

TEST_CASE("generator: artifact confined to the region mask") {
    DomainSpec spec = reference_spec();
    spec.real_count = spec.fake_count = 6;
    for (ArtifactType a : {ArtifactType::ColorShift, ArtifactType::LowpassPatch}) {
        spec.artifact = a;
        auto samples = generate_synthetic_domain(spec);
        const std::size_t n = spec.image_size * spec.image_size;
        for (std::size_t k = 0; k < 6; ++k) {
            auto mask = artifact_region_mask(spec, k);
            const auto& real = samples[k].image.data;
            const auto& fake = samples[6 + k].image.data;
            std::size_t differing = 0;
            for (std::size_t i = 0; i < real.size(); ++i) {
                if (real[i] != fake[i]) {
                    ++differing;
                    CHECK(mask[i % n] == 1);
                }
            }
            CHECK(differing > 0);
        }
    }
}

TEST_CASE("generator: faces carry a bounding box inside the frame") {
    auto samples = generate_synthetic_domain(reference_spec());
    for (const auto& s : samples) {
        REQUIRE(s.bbox.has_value());
        CHECK(s.bbox->w > 0);
        CHECK(s.bbox->h > 0);
        CHECK(s.bbox->x >= 0);
        CHECK(s.bbox->x + s.bbox->w <= 32);
        CHECK(s.bbox->y + s.bbox->h <= 32);
    }
}

TEST_CASE("split: 400 samples at 0.15 give 60 test, 340 train") {
    DomainSpec spec = reference_spec();
    spec.real_count = spec.fake_count = 200;
    auto samples = generate_synthetic_domain(spec);
    SplitSpec ss{0.15, 3};
    auto [train, test] = split(samples, ss);
    CHECK(test.size() == 60);
    CHECK(train.size() == 340);
    // stratified: per-class fractions exact within rounding (<= 2% target)
    std::size_t test_fake = 0;
    for (const auto& s : test) test_fake += s.label == Label::Fake;
    CHECK(test_fake == 30);
}

TEST_CASE("split: deterministic partition, union and disjointness") {
    DomainSpec spec = reference_spec();
    auto samples = generate_synthetic_domain(spec);
    SplitSpec ss{0.25, 9};
    auto [train1, test1] = split(samples, ss);
    auto [train2, test2] = split(samples, ss);
    CHECK(train1.size() == train2.size());
    CHECK(test1.size() == test2.size());
    for (std::size_t i = 0; i < test1.size(); ++i)
        CHECK(test1[i].source_id == test2[i].source_id);
    CHECK(train1.size() + test1.size() == samples.size());
    std::set<std::string> seen;
    for (const auto& s : train1) seen.insert(s.source_id);
    for (const auto& s : test1) CHECK(seen.insert(s.source_id).second);
    CHECK(seen.size() == samples.size());
}

TEST_CASE("split: invalid fractions are rejected") {
    SplitSpec zero{0.0, 1};
    SplitSpec one{1.0, 1};
    CHECK_THROWS_AS(zero.validate(), ValidationError);
    CHECK_THROWS_AS(one.validate(), ValidationError);
}

TEST_CASE("dataset io: save then load round-trips within quantization") {
    fs::path dir = temp_dir("roundtrip");
    DomainSpec spec = reference_spec();
    spec.real_count = spec.fake_count = 5;
    auto samples = generate_synthetic_domain(spec);
    save_dataset(dir, samples);
    auto loaded = load_dataset(dir);
    REQUIRE(loaded.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(loaded[i].label == samples[i].label);
        CHECK(loaded[i].domain == samples[i].domain);
        REQUIRE(loaded[i].image.data.size() == samples[i].image.data.size());
        for (std::size_t p = 0; p < samples[i].image.data.size(); ++p)
            CHECK(std::abs(loaded[i].image.data[p] - samples[i].image.data[p]) <=
                  0.5f / 255.0f + 1e-6f);
        CHECK(loaded[i].bbox.has_value() == samples[i].bbox.has_value());
        if (loaded[i].bbox) CHECK(loaded[i].bbox->x == samples[i].bbox->x);
    }
    // quantized payloads are bit-stable across a save/load/save cycle
    fs::path dir2 = temp_dir("roundtrip2");
    save_dataset(dir2, loaded);
    auto reloaded = load_dataset(dir2);
    for (std::size_t i = 0; i < loaded.size(); ++i)
        CHECK(reloaded[i].image.data == loaded[i].image.data);
}

TEST_CASE("dataset io: empty directory is an empty dataset") {
    fs::path dir = temp_dir("empty");
    CHECK(load_dataset(dir).empty());
}

TEST_CASE("dataset io: unknown label names the offending line") {
    fs::path dir = temp_dir("badlabel");
    {
        std::ofstream f(dir / "manifest.jsonl");
        f << R"({"file":"images/a.ppm","label":"real","domain":"d","bbox":null})" << "\n";
        f << R"({"file":"images/b.ppm","label":"realz","domain":"d","bbox":null})" << "\n";
    }
    fs::create_directories(dir / "images");
    save_ppm(dir / "images/a.ppm", gradient_frame(8, 8));
    save_ppm(dir / "images/b.ppm", gradient_frame(8, 8));
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains(":2"), ValidationError);
}

TEST_CASE("dataset io: malformed line and missing file are reported") {
    fs::path dir = temp_dir("badline");
    {
        std::ofstream f(dir / "manifest.jsonl");
        f << "{not json}\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains(":1"), ValidationError);

    fs::path dir2 = temp_dir("missingfile");
    {
        std::ofstream f(dir2 / "manifest.jsonl");
        f << R"({"file":"images/gone.ppm","label":"real","domain":"d","bbox":null})" << "\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir2), doctest::Contains("gone.ppm"), IoError);
}

TEST_CASE("dataset io: unknown manifest keys are rejected") {
    fs::path dir = temp_dir("unknownkey");
    {
        std::ofstream f(dir / "manifest.jsonl");
        f << R"({"file":"x.ppm","label":"real","domain":"d","bbox":null,"exif":1})" << "\n";
    }
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("exif"), ValidationError);
}

TEST_CASE("ppm: maxval and magic are enforced") {
    fs::path dir = temp_dir("ppm");
    {
        std::ofstream f(dir / "bad.ppm", std::ios::binary);
        f << "P5\n2 2\n255\n";
    }
    CHECK_THROWS_AS(load_ppm(dir / "bad.ppm"), IoError);
    {
        std::ofstream f(dir / "bad16.ppm", std::ios::binary);
        f << "P6\n2 2\n65535\n";
    }
    CHECK_THROWS_AS(load_ppm(dir / "bad16.ppm"), IoError);
}
