#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ucl/image.hpp"
#include "ucl/rng.hpp"

namespace ucl {

enum class Label { Real, Fake };

inline const char* label_name(Label l) { return l == Label::Real ? "real" : "fake"; }

struct BBox {
    int x = 0, y = 0, w = 0, h = 0;
};

/// One face-centered frame with its label and provenance.
struct ImageSample {
    Image image;
    Label label = Label::Real;
    std::string domain;
    std::string source_id;
    std::optional<BBox> bbox;
};

enum class ArtifactType { ColorShift, BoundarySeam, LowpassPatch };

ArtifactType artifact_from_name(const std::string& name);
const char* artifact_name(ArtifactType a);

/// Ranges for the synthetic face geometry, as fractions of the image size.
struct FaceGeometry {
    double rx_lo = 0.24, rx_hi = 0.36;
    double ry_lo = 0.28, ry_hi = 0.42;
    double center_jitter = 0.05;
};

/// Recipe for one synthetic domain: a forgery-method stand-in. Fake samples
/// carry the domain's artifact inside a central elliptical region; everything
/// else is identical to the real counterpart drawn from the same stream.
struct DomainSpec {
    std::string name;
    ArtifactType artifact = ArtifactType::ColorShift;
    double strength = 0.15;
    std::size_t real_count = 100;
    std::size_t fake_count = 100;
    std::size_t image_size = 32;
    std::uint64_t seed = 0;
    std::size_t background_cells = 4;
    FaceGeometry face;
    bool emit_bbox = true;

    void validate() const;
};

struct SplitSpec {
    double test_fraction = 0.15;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Square crop of side max(bbox w, h) centered on the bbox, shifted (not
/// shrunk) back inside the frame on overflow, then resized to out_size.
Image preprocess_face_crop(const Image& frame, const BBox& bbox, std::size_t out_size);

std::vector<ImageSample> generate_synthetic_domain(const DomainSpec& spec);

/// Checksum over the quantized pixel bytes of every sample, in order.
std::uint64_t domain_checksum(const std::vector<ImageSample>& samples);

/// Mask (1 = inside) of the artifact region for the sample drawn from
/// per-sample stream `sample_index`; row-major image_size x image_size.
std::vector<std::uint8_t> artifact_region_mask(const DomainSpec& spec, std::size_t sample_index);

/// Random partition, stratified by label so per-class fractions track the
/// target. Returns (train, test); original order is preserved within each.
std::pair<std::vector<ImageSample>, std::vector<ImageSample>> split(
    const std::vector<ImageSample>& samples, const SplitSpec& spec);

// Directory layout: <root>/images/*.ppm plus <root>/manifest.jsonl with one
// {"file","label","domain","bbox"} object per line.
void save_dataset(const std::filesystem::path& root, const std::vector<ImageSample>& samples);
std::vector<ImageSample> load_dataset(const std::filesystem::path& root);

void save_ppm(const std::filesystem::path& path, const Image& img);
Image load_ppm(const std::filesystem::path& path);

} // namespace ucl
