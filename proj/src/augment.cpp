#include "ucl/augment.hpp"

#include <algorithm>
#include <cmath>

namespace ucl {

void AugmentationPolicy::validate() const {
    if (!crop.enabled && !flip.enabled && !jitter.enabled && !grayscale.enabled)
        throw ValidationError("augmentation: at least one transform must be enabled");
    auto check_p = [](const char* name, double p) {
        if (p < 0.0 || p > 1.0)
            throw ValidationError(std::string("augmentation: ") + name + " probability " +
                                  std::to_string(p) + " outside [0,1]");
    };
    check_p("flip", flip.p);
    check_p("jitter", jitter.p);
    check_p("grayscale", grayscale.p);
    if (crop.area_lo <= 0.0 || crop.area_hi > 1.0 || crop.area_lo > crop.area_hi)
        throw ValidationError("augmentation: crop area range [" + std::to_string(crop.area_lo) +
                              "," + std::to_string(crop.area_hi) + "] outside (0,1]");
    if (jitter.brightness < 0.0 || jitter.contrast < 0.0 || jitter.saturation < 0.0 ||
        jitter.hue < 0.0 || jitter.hue > 0.5)
        throw ValidationError("augmentation: jitter deltas must be non-negative (hue <= 0.5)");
    if (output_size < 2) throw ValidationError("augmentation: output_size must be >= 2");
}

AugmentationPolicy AugmentationPolicy::crop_only(std::size_t output_size) {
    AugmentationPolicy p;
    p.flip.enabled = false;
    p.jitter.enabled = false;
    p.grayscale.enabled = false;
    p.output_size = output_size;
    return p;
}

AugmentationPolicy AugmentationPolicy::crop_flip(std::size_t output_size) {
    AugmentationPolicy p;
    p.jitter.enabled = false;
    p.grayscale.enabled = false;
    p.output_size = output_size;
    return p;
}

AugmentationPolicy AugmentationPolicy::full(std::size_t output_size) {
    AugmentationPolicy p;
    p.output_size = output_size;
    return p;
}

CropRect sample_crop_rect(Rng& rng, std::size_t width, std::size_t height, double area_lo,
                          double area_hi, double aspect_lo, double aspect_hi) {
    const double src_area = static_cast<double>(width) * static_cast<double>(height);
    for (int attempt = 0; attempt < 10; ++attempt) {
        double target_area = rng.uniform(area_lo, area_hi) * src_area;
        double aspect = std::exp(rng.uniform(std::log(aspect_lo), std::log(aspect_hi)));
        auto w = static_cast<std::size_t>(std::lround(std::sqrt(target_area * aspect)));
        auto h = static_cast<std::size_t>(std::lround(std::sqrt(target_area / aspect)));
        if (w < 1 || h < 1 || w > width || h > height) continue;
        CropRect r;
        r.w = w;
        r.h = h;
        r.x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(width - w)));
        r.y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(height - h)));
        return r;
    }
    // fallback: centered min-edge square
    CropRect r;
    r.w = r.h = std::min(width, height);
    r.x = (width - r.w) / 2;
    r.y = (height - r.h) / 2;
    return r;
}

Image random_resized_crop(const Image& img, Rng& rng, double area_lo, double area_hi,
                          std::size_t output_size, double aspect_lo, double aspect_hi) {
    if (img.width < 2 || img.height < 2)
        throw ValidationError("random_resized_crop: degenerate image " +
                              std::to_string(img.width) + "x" + std::to_string(img.height));
    CropRect r = sample_crop_rect(rng, img.width, img.height, area_lo, area_hi, aspect_lo,
                                  aspect_hi);
    Image patch = crop(img, r.x, r.y, r.w, r.h);
    return bilinear_resize(patch, output_size, output_size);
}

Image random_horizontal_flip(const Image& img, Rng& rng, double p) {
    return rng.uniform() < p ? flip_horizontal(img) : img;
}

namespace {

Image adjust_brightness(const Image& img, double factor) {
    Image out(img.channels, img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = clamp01(static_cast<double>(img.data[i]) * factor);
    return out;
}

Image adjust_contrast(const Image& img, double factor) {
    std::vector<float> l = luma(img);
    double m = 0.0;
    for (float v : l) m += v;
    m /= static_cast<double>(l.size());
    Image out(img.channels, img.height, img.width);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = clamp01(factor * img.data[i] + (1.0 - factor) * m);
    return out;
}

Image adjust_saturation(const Image& img, double factor) {
    if (img.channels == 1) return img;
    std::vector<float> l = luma(img);
    Image out(img.channels, img.height, img.width);
    const std::size_t n = img.pixel_count();
    for (std::size_t c = 0; c < img.channels; ++c)
        for (std::size_t i = 0; i < n; ++i)
            out.data[c * n + i] = clamp01(factor * img.data[c * n + i] + (1.0 - factor) * l[i]);
    return out;
}

} // namespace

Image color_jitter(const Image& img, Rng& rng, const AugmentationPolicy::Jitter& cfg) {
    if (rng.uniform() >= cfg.p) return img;
    // factors drawn in a fixed order, application order permuted afterwards
    const double fb = 1.0 + rng.uniform(-cfg.brightness, cfg.brightness);
    const double fc = 1.0 + rng.uniform(-cfg.contrast, cfg.contrast);
    const double fs = 1.0 + rng.uniform(-cfg.saturation, cfg.saturation);
    const double dh = rng.uniform(-cfg.hue, cfg.hue);
    std::vector<std::size_t> order = rng.permutation(4);
    Image out = img;
    for (std::size_t step : order) {
        switch (step) {
            case 0:
                if (cfg.brightness > 0.0) out = adjust_brightness(out, fb);
                break;
            case 1:
                if (cfg.contrast > 0.0) out = adjust_contrast(out, fc);
                break;
            case 2:
                if (cfg.saturation > 0.0) out = adjust_saturation(out, fs);
                break;
            default:
                if (cfg.hue > 0.0 && img.channels == 3) out = shift_hue(out, dh);
                break;
        }
    }
    return out;
}

Image random_grayscale(const Image& img, Rng& rng, double p) {
    return rng.uniform() < p ? to_grayscale(img) : img;
}

Image make_view(const Image& img, const AugmentationPolicy& policy, std::uint64_t seed,
                std::uint64_t sample_index, std::uint64_t view_index) {
    policy.validate();
    Rng rng = Rng::stream(seed, sample_index, view_index);
    Image out = img;
    if (policy.crop.enabled) {
        out = random_resized_crop(out, rng, policy.crop.area_lo, policy.crop.area_hi,
                                  policy.output_size);
    } else if (out.height != policy.output_size || out.width != policy.output_size) {
        out = bilinear_resize(out, policy.output_size, policy.output_size);
    }
    if (policy.flip.enabled) out = random_horizontal_flip(out, rng, policy.flip.p);
    if (policy.jitter.enabled) out = color_jitter(out, rng, policy.jitter);
    if (policy.grayscale.enabled) out = random_grayscale(out, rng, policy.grayscale.p);
    return out;
}

std::pair<Image, Image> make_view_pair(const Image& img, const AugmentationPolicy& policy,
                                       std::uint64_t seed, std::uint64_t sample_index) {
    return {make_view(img, policy, seed, sample_index, 0),
            make_view(img, policy, seed, sample_index, 1)};
}

} // namespace ucl
