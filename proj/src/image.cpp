#include "ucl/image.hpp"

#include <algorithm>
#include <cmath>

namespace ucl {

Image bilinear_resize(const Image& img, std::size_t out_h, std::size_t out_w) {
    if (img.height == 0 || img.width == 0)
        throw ValidationError("bilinear_resize: empty source image");
    if (out_h == 0 || out_w == 0) throw ValidationError("bilinear_resize: empty target extent");
    Image out(img.channels, out_h, out_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        if (fy < 0.0) fy = 0.0;
        std::size_t y0 = static_cast<std::size_t>(fy);
        if (y0 > img.height - 1) y0 = img.height - 1;
        std::size_t y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            if (fx < 0.0) fx = 0.0;
            std::size_t x0 = static_cast<std::size_t>(fx);
            if (x0 > img.width - 1) x0 = img.width - 1;
            std::size_t x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < img.channels; ++c) {
                double top = (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
                double bot = (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
                out.at(c, y, x) = static_cast<float>((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

Image crop(const Image& img, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) throw ValidationError("crop: empty rectangle");
    if (x0 + w > img.width || y0 + h > img.height)
        throw ValidationError("crop: rectangle (" + std::to_string(x0) + "," +
                              std::to_string(y0) + "," + std::to_string(w) + "," +
                              std::to_string(h) + ") exceeds image " +
                              std::to_string(img.width) + "x" + std::to_string(img.height));
    Image out(img.channels, h, w);
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    return out;
}

Image center_crop_square(const Image& img) {
    std::size_t side = std::min(img.height, img.width);
    std::size_t x0 = (img.width - side) / 2;
    std::size_t y0 = (img.height - side) / 2;
    return crop(img, x0, y0, side, side);
}

Image flip_horizontal(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x)
                out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

std::vector<float> luma(const Image& img) {
    std::vector<float> out(img.pixel_count());
    if (img.channels == 1) {
        std::copy(img.data.begin(), img.data.end(), out.begin());
        return out;
    }
    if (img.channels != 3)
        throw ValidationError("luma: expects 1 or 3 channels, got " +
                              std::to_string(img.channels));
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        out[i] = static_cast<float>(0.299 * img.data[i] + 0.587 * img.data[n + i] +
                                    0.114 * img.data[2 * n + i]);
    return out;
}

Image to_grayscale(const Image& img) {
    std::vector<float> l = luma(img);
    Image out(img.channels, img.height, img.width);
    for (std::size_t c = 0; c < img.channels; ++c)
        std::copy(l.begin(), l.end(), out.data.begin() + c * img.pixel_count());
    return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    double mx = std::max({r, g, b});
    double mn = std::min({r, g, b});
    double d = mx - mn;
    v = mx;
    s = mx <= 0.0 ? 0.0 : d / mx;
    if (d <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r)
        h = (g - b) / d;
    else if (mx == g)
        h = 2.0 + (b - r) / d;
    else
        h = 4.0 + (r - g) / d;
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    if (s <= 0.0) {
        r = g = b = v;
        return;
    }
    double hh = (h - std::floor(h)) * 6.0;
    int sector = static_cast<int>(hh);
    if (sector > 5) sector = 5;
    double f = hh - sector;
    double p = v * (1.0 - s);
    double q = v * (1.0 - s * f);
    double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

Image shift_hue(const Image& img, double delta) {
    if (img.channels != 3)
        throw ValidationError("shift_hue: expects 3 channels, got " +
                              std::to_string(img.channels));
    if (delta == 0.0) return img;
    Image out(3, img.height, img.width);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        double h, s, v, r, g, b;
        rgb_to_hsv(img.data[i], img.data[n + i], img.data[2 * n + i], h, s, v);
        h += delta;
        h -= std::floor(h);
        hsv_to_rgb(h, s, v, r, g, b);
        out.data[i] = clamp01(r);
        out.data[n + i] = clamp01(g);
        out.data[2 * n + i] = clamp01(b);
    }
    return out;
}

std::vector<std::uint8_t> quantize8(const Image& img) {
    std::vector<std::uint8_t> out(img.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = std::lround(static_cast<double>(img.data[i]) * 255.0);
        out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
    return out;
}

Image dequantize8(const std::vector<std::uint8_t>& bytes, std::size_t channels, std::size_t h,
                  std::size_t w) {
    if (bytes.size() != channels * h * w)
        throw ValidationError("dequantize8: byte count does not match extents");
    Image img(channels, h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

} // namespace ucl
