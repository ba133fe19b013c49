#pragma once

#include <cstdint>
#include <utility>

#include "ucl/image.hpp"
#include "ucl/rng.hpp"

namespace ucl {

/// Which stochastic transforms run when building a view pair, and how strong
/// they are. Policies with every transform disabled are rejected.
struct AugmentationPolicy {
    struct Crop {
        bool enabled = true;
        double area_lo = 0.5;
        double area_hi = 1.0;
    } crop;
    struct Flip {
        bool enabled = true;
        double p = 0.5;
    } flip;
    struct Jitter {
        bool enabled = true;
        double brightness = 0.4;
        double contrast = 0.4;
        double saturation = 0.4;
        double hue = 0.1;
        double p = 0.8;
    } jitter;
    struct Grayscale {
        bool enabled = true;
        double p = 0.2;
    } grayscale;

    std::size_t output_size = 32;

    void validate() const;

    /// Table-style ablation rows: {crop}, {crop,flip}, {crop,flip,jitter,gray}.
    static AugmentationPolicy crop_only(std::size_t output_size);
    static AugmentationPolicy crop_flip(std::size_t output_size);
    static AugmentationPolicy full(std::size_t output_size);
};

struct CropRect {
    std::size_t x = 0, y = 0, w = 0, h = 0;
};

/// Draws the crop rectangle: area uniform in [area_lo, area_hi] * source area,
/// aspect ratio log-uniform in [aspect_lo, aspect_hi], position uniform.
/// Falls back to the centered min-edge square when 10 draws do not fit.
CropRect sample_crop_rect(Rng& rng, std::size_t width, std::size_t height, double area_lo,
                          double area_hi, double aspect_lo = 0.75,
                          double aspect_hi = 4.0 / 3.0);

Image random_resized_crop(const Image& img, Rng& rng, double area_lo, double area_hi,
                          std::size_t output_size, double aspect_lo = 0.75,
                          double aspect_hi = 4.0 / 3.0);

Image random_horizontal_flip(const Image& img, Rng& rng, double p);

/// Brightness, contrast, saturation and hue adjustments in a randomly permuted
/// order, applied with probability p. Output clamped to [0,1].
Image color_jitter(const Image& img, Rng& rng, const AugmentationPolicy::Jitter& cfg);

Image random_grayscale(const Image& img, Rng& rng, double p);

/// The two augmented views of one image. Pure function of
/// (image, policy, seed, sample_index); views use independent streams.
std::pair<Image, Image> make_view_pair(const Image& img, const AugmentationPolicy& policy,
                                       std::uint64_t seed, std::uint64_t sample_index);

/// One view (stream (seed, sample_index, view_index)); transform order is
/// crop, flip, jitter, grayscale.
Image make_view(const Image& img, const AugmentationPolicy& policy, std::uint64_t seed,
                std::uint64_t sample_index, std::uint64_t view_index);

} // namespace ucl
