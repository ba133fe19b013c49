#pragma once

#include <cstdint>
#include <vector>

#include "ucl/common.hpp"

namespace ucl {

/// Planar CHW image, values in [0,1]. The pipeline works in 3-channel RGB;
/// single-channel images are accepted by the geometric helpers.
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> data; // c-major planes, row-major within a plane

    Image() = default;
    Image(std::size_t c, std::size_t h, std::size_t w)
        : channels(c), height(h), width(w), data(c * h * w, 0.0f) {}

    float& at(std::size_t c, std::size_t y, std::size_t x) {
        return data[(c * height + y) * width + x];
    }
    float at(std::size_t c, std::size_t y, std::size_t x) const {
        return data[(c * height + y) * width + x];
    }
    std::size_t pixel_count() const { return height * width; }
};

/// Bilinear resampling with half-pixel centers. Output of a constant image is
/// that constant; same-size resize is an exact copy.
Image bilinear_resize(const Image& img, std::size_t out_h, std::size_t out_w);

/// Crop [y0, y0+h) x [x0, x0+w); the rectangle must lie inside the image.
Image crop(const Image& img, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h);

/// Largest centered square (side = min extent).
Image center_crop_square(const Image& img);

Image flip_horizontal(const Image& img);

/// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B. Identity for 1-channel images.
std::vector<float> luma(const Image& img);

/// Luma replicated over all channels.
Image to_grayscale(const Image& img);

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v);
void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b);

/// Shifts hue by `delta` turns (fraction of the full circle).
Image shift_hue(const Image& img, double delta);

inline float clamp01(double v) {
    return v < 0.0 ? 0.0f : (v > 1.0 ? 1.0f : static_cast<float>(v));
}

/// round(p*255) quantization used by the on-disk image format.
std::vector<std::uint8_t> quantize8(const Image& img);
Image dequantize8(const std::vector<std::uint8_t>& bytes, std::size_t channels, std::size_t h,
                  std::size_t w);

} // namespace ucl
