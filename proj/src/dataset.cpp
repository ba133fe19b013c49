#include "ucl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace ucl {

ArtifactType artifact_from_name(const std::string& name) {
    if (name == "color_shift") return ArtifactType::ColorShift;
    if (name == "boundary_seam") return ArtifactType::BoundarySeam;
    if (name == "lowpass_patch") return ArtifactType::LowpassPatch;
    throw ValidationError("artifact: unknown type '" + name +
                          "' (expected color_shift|boundary_seam|lowpass_patch)");
}

const char* artifact_name(ArtifactType a) {
    switch (a) {
        case ArtifactType::ColorShift: return "color_shift";
        case ArtifactType::BoundarySeam: return "boundary_seam";
        default: return "lowpass_patch";
    }
}

void DomainSpec::validate() const {
    if (name.empty()) throw ValidationError("domain: name must not be empty");
    if (strength < 0.0) throw ValidationError("domain '" + name + "': strength must be >= 0");
    if (real_count < 1 || fake_count < 1)
        throw ValidationError("domain '" + name + "': counts must be >= 1 per class");
    if (image_size < 8) throw ValidationError("domain '" + name + "': image_size must be >= 8");
    if (background_cells < 2 || background_cells > image_size)
        throw ValidationError("domain '" + name + "': background_cells outside [2, image_size]");
    if (face.rx_lo <= 0 || face.rx_hi > 0.5 || face.rx_lo > face.rx_hi || face.ry_lo <= 0 ||
        face.ry_hi > 0.5 || face.ry_lo > face.ry_hi)
        throw ValidationError("domain '" + name + "': face radius ranges outside (0, 0.5]");
}

void SplitSpec::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("split: test_fraction " + std::to_string(test_fraction) +
                              " outside (0,1)");
}

Image preprocess_face_crop(const Image& frame, const BBox& bbox, std::size_t out_size) {
    if (bbox.w <= 0 || bbox.h <= 0)
        throw ValidationError("face_crop: bounding box has zero area");
    if (bbox.x + bbox.w <= 0 || bbox.y + bbox.h <= 0 ||
        bbox.x >= static_cast<int>(frame.width) || bbox.y >= static_cast<int>(frame.height))
        throw ValidationError("face_crop: bounding box lies fully outside the frame");

    std::size_t side = static_cast<std::size_t>(std::max(bbox.w, bbox.h));
    side = std::min({side, frame.width, frame.height});
    const double cx = bbox.x + bbox.w / 2.0;
    const double cy = bbox.y + bbox.h / 2.0;
    auto place = [side](double center, std::size_t extent) {
        double lo = center - static_cast<double>(side) / 2.0;
        double max_lo = static_cast<double>(extent - side);
        if (lo < 0.0) lo = 0.0;         // shift right/down into the frame
        if (lo > max_lo) lo = max_lo;   // shift left/up into the frame
        return static_cast<std::size_t>(std::lround(lo));
    };
    Image square = crop(frame, place(cx, frame.width), place(cy, frame.height), side, side);
    return bilinear_resize(square, out_size, out_size);
}

namespace {

struct FaceSketch {
    double cx, cy, rx, ry;
    double skin_r, skin_g, skin_b;
    double eye_shade;
};

// Geometry and palette draws, in pinned order (after the background cells).
void consume_sketch(const DomainSpec& spec, Rng& rng, FaceSketch& sketch) {
    const double sd = static_cast<double>(spec.image_size);
    sketch.cx = sd * (0.5 + rng.uniform(-spec.face.center_jitter, spec.face.center_jitter));
    sketch.cy = sd * (0.5 + rng.uniform(-spec.face.center_jitter, spec.face.center_jitter));
    sketch.rx = sd * rng.uniform(spec.face.rx_lo, spec.face.rx_hi);
    sketch.ry = sd * rng.uniform(spec.face.ry_lo, spec.face.ry_hi);
    sketch.skin_r = rng.uniform(0.55, 0.88);
    sketch.skin_g = sketch.skin_r * rng.uniform(0.62, 0.80);
    sketch.skin_b = sketch.skin_g * rng.uniform(0.60, 0.82);
    sketch.eye_shade = rng.uniform(0.05, 0.20);
}

// Draw order is pinned: background cells, center, radii, skin, eye shade.
// Real and fake counterparts replay the identical stream.
Image draw_base_face(const DomainSpec& spec, Rng& rng, FaceSketch& sketch) {
    const std::size_t s = spec.image_size;
    const std::size_t g = spec.background_cells;
    Image cells(3, g, g);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < g * g; ++i)
            cells.data[c * g * g + i] = static_cast<float>(rng.uniform(0.08, 0.92));
    Image img = bilinear_resize(cells, s, s);

    consume_sketch(spec, rng, sketch);

    const std::size_t n = s * s;
    for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t x = 0; x < s; ++x) {
            const double dx = (x + 0.5 - sketch.cx) / sketch.rx;
            const double dy = (y + 0.5 - sketch.cy) / sketch.ry;
            const double d2 = dx * dx + dy * dy;
            if (d2 > 1.44) continue;
            const double d = std::sqrt(d2);
            const double alpha = std::clamp((1.0 - d) * 4.0 + 0.5, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            const double shade = 1.0 - 0.35 * d2;
            const std::size_t i = y * s + x;
            img.data[i] = clamp01(alpha * sketch.skin_r * shade + (1.0 - alpha) * img.data[i]);
            img.data[n + i] =
                clamp01(alpha * sketch.skin_g * shade + (1.0 - alpha) * img.data[n + i]);
            img.data[2 * n + i] =
                clamp01(alpha * sketch.skin_b * shade + (1.0 - alpha) * img.data[2 * n + i]);
        }
    }

    // two eye dots in the upper half of the face
    const double eye_r = 0.16 * std::min(sketch.rx, sketch.ry);
    for (int side = -1; side <= 1; side += 2) {
        const double ex = sketch.cx + side * 0.40 * sketch.rx;
        const double ey = sketch.cy - 0.28 * sketch.ry;
        const std::size_t x_lo =
            static_cast<std::size_t>(std::max(0.0, std::floor(ex - eye_r - 1)));
        const std::size_t y_lo =
            static_cast<std::size_t>(std::max(0.0, std::floor(ey - eye_r - 1)));
        const std::size_t x_hi = std::min(s, static_cast<std::size_t>(
                                                 std::max(0.0, std::ceil(ex + eye_r + 1))));
        const std::size_t y_hi = std::min(s, static_cast<std::size_t>(
                                                 std::max(0.0, std::ceil(ey + eye_r + 1))));
        for (std::size_t y = y_lo; y < y_hi; ++y) {
            for (std::size_t x = x_lo; x < x_hi; ++x) {
                const double ddx = x + 0.5 - ex;
                const double ddy = y + 0.5 - ey;
                const double dist = std::sqrt(ddx * ddx + ddy * ddy);
                const double alpha = std::clamp((eye_r - dist) * 2.0 + 0.5, 0.0, 1.0);
                if (alpha <= 0.0) continue;
                const std::size_t i = y * s + x;
                img.data[i] = clamp01(alpha * sketch.eye_shade + (1.0 - alpha) * img.data[i]);
                img.data[n + i] =
                    clamp01(alpha * sketch.eye_shade * 0.8 + (1.0 - alpha) * img.data[n + i]);
                img.data[2 * n + i] =
                    clamp01(alpha * sketch.eye_shade * 0.8 + (1.0 - alpha) * img.data[2 * n + i]);
            }
        }
    }
    return img;
}

// The artifact region is the central ellipse at 0.55 of the face radii.
void apply_artifact(Image& img, const DomainSpec& spec, const FaceSketch& sketch) {
    const std::size_t s = spec.image_size;
    const std::size_t n = s * s;
    const double rrx = 0.55 * sketch.rx;
    const double rry = 0.55 * sketch.ry;
    auto region_d = [&](std::size_t x, std::size_t y) {
        const double dx = (x + 0.5 - sketch.cx) / rrx;
        const double dy = (y + 0.5 - sketch.cy) / rry;
        return std::sqrt(dx * dx + dy * dy);
    };

    switch (spec.artifact) {
        case ArtifactType::ColorShift: {
            for (std::size_t y = 0; y < s; ++y)
                for (std::size_t x = 0; x < s; ++x) {
                    if (region_d(x, y) > 1.0) continue;
                    const std::size_t i = y * s + x;
                    double h, sat, v, r, g, b;
                    rgb_to_hsv(img.data[i], img.data[n + i], img.data[2 * n + i], h, sat, v);
                    h += spec.strength;
                    h -= std::floor(h);
                    v = std::min(1.0, v + 0.25 * spec.strength);
                    hsv_to_rgb(h, sat, v, r, g, b);
                    img.data[i] = clamp01(r);
                    img.data[n + i] = clamp01(g);
                    img.data[2 * n + i] = clamp01(b);
                }
            break;
        }
        case ArtifactType::BoundarySeam: {
            // ring one pixel wide along the region boundary
            const double half_px = 0.5 / std::min(rrx, rry);
            for (std::size_t y = 0; y < s; ++y)
                for (std::size_t x = 0; x < s; ++x) {
                    const double d = region_d(x, y);
                    if (std::abs(d - 1.0) > half_px || d > 1.0) continue;
                    const std::size_t i = y * s + x;
                    for (std::size_t c = 0; c < 3; ++c)
                        img.data[c * n + i] = clamp01(img.data[c * n + i] + spec.strength);
                }
            break;
        }
        case ArtifactType::LowpassPatch: {
            const Image orig = img;
            const double blend = std::clamp(spec.strength, 0.0, 1.0);
            for (std::size_t y = 0; y < s; ++y)
                for (std::size_t x = 0; x < s; ++x) {
                    if (region_d(x, y) > 1.0) continue;
                    const std::size_t i = y * s + x;
                    for (std::size_t c = 0; c < 3; ++c) {
                        double acc = 0.0;
                        int taps = 0;
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int yy = static_cast<int>(y) + dy;
                                const int xx = static_cast<int>(x) + dx;
                                if (yy < 0 || xx < 0 || yy >= static_cast<int>(s) ||
                                    xx >= static_cast<int>(s))
                                    continue;
                                acc += orig.data[c * n + static_cast<std::size_t>(yy) * s +
                                                 static_cast<std::size_t>(xx)];
                                ++taps;
                            }
                        const double blurred = acc / taps;
                        img.data[c * n + i] =
                            clamp01((1.0 - blend) * orig.data[c * n + i] + blend * blurred);
                    }
                }
            break;
        }
    }
}

std::optional<BBox> face_bbox(const DomainSpec& spec, const FaceSketch& sketch) {
    if (!spec.emit_bbox) return std::nullopt;
    const int s = static_cast<int>(spec.image_size);
    BBox b;
    b.x = std::clamp(static_cast<int>(std::floor(sketch.cx - sketch.rx)), 0, s - 1);
    b.y = std::clamp(static_cast<int>(std::floor(sketch.cy - sketch.ry)), 0, s - 1);
    const int x1 = std::clamp(static_cast<int>(std::ceil(sketch.cx + sketch.rx)), b.x + 1, s);
    const int y1 = std::clamp(static_cast<int>(std::ceil(sketch.cy + sketch.ry)), b.y + 1, s);
    b.w = x1 - b.x;
    b.h = y1 - b.y;
    return b;
}

std::string index_id(const DomainSpec& spec, Label label, std::size_t k) {
    std::ostringstream os;
    os << spec.name << '/' << label_name(label) << '/' << k;
    return os.str();
}

} // namespace

std::vector<ImageSample> generate_synthetic_domain(const DomainSpec& spec) {
    spec.validate();
    std::vector<ImageSample> out;
    out.reserve(spec.real_count + spec.fake_count);
    for (std::size_t k = 0; k < spec.real_count; ++k) {
        Rng rng = Rng::stream(spec.seed, rng_purpose::kDataGen, k);
        FaceSketch sketch{};
        ImageSample sample;
        sample.image = draw_base_face(spec, rng, sketch);
        sample.label = Label::Real;
        sample.domain = spec.name;
        sample.source_id = index_id(spec, Label::Real, k);
        sample.bbox = face_bbox(spec, sketch);
        out.push_back(std::move(sample));
    }
    for (std::size_t k = 0; k < spec.fake_count; ++k) {
        Rng rng = Rng::stream(spec.seed, rng_purpose::kDataGen, k);
        FaceSketch sketch{};
        ImageSample sample;
        sample.image = draw_base_face(spec, rng, sketch);
        apply_artifact(sample.image, spec, sketch);
        sample.label = Label::Fake;
        sample.domain = spec.name;
        sample.source_id = index_id(spec, Label::Fake, k);
        sample.bbox = face_bbox(spec, sketch);
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<std::uint8_t> artifact_region_mask(const DomainSpec& spec,
                                               std::size_t sample_index) {
    spec.validate();
    Rng rng = Rng::stream(spec.seed, rng_purpose::kDataGen, sample_index);
    for (std::size_t i = 0; i < 3 * spec.background_cells * spec.background_cells; ++i)
        (void)rng.uniform();
    FaceSketch sketch{};
    consume_sketch(spec, rng, sketch);
    const std::size_t s = spec.image_size;
    const double rrx = 0.55 * sketch.rx;
    const double rry = 0.55 * sketch.ry;
    std::vector<std::uint8_t> mask(s * s, 0);
    for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x) {
            const double dx = (x + 0.5 - sketch.cx) / rrx;
            const double dy = (y + 0.5 - sketch.cy) / rry;
            if (dx * dx + dy * dy <= 1.0) mask[y * s + x] = 1;
        }
    return mask;
}

std::uint64_t domain_checksum(const std::vector<ImageSample>& samples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : samples) {
        auto bytes = quantize8(s.image);
        h = fnv1a64(bytes.data(), bytes.size(), h);
    }
    return h;
}

std::pair<std::vector<ImageSample>, std::vector<ImageSample>> split(
    const std::vector<ImageSample>& samples, const SplitSpec& spec) {
    spec.validate();
    std::vector<char> is_test(samples.size(), 0);
    for (int lab = 0; lab < 2; ++lab) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (static_cast<int>(samples[i].label) == lab) idx.push_back(i);
        if (idx.empty()) continue;
        Rng rng = Rng::stream(spec.seed, rng_purpose::kSplit, static_cast<std::uint64_t>(lab));
        std::vector<std::size_t> perm = rng.permutation(idx.size());
        const auto k = static_cast<std::size_t>(
            std::lround(spec.test_fraction * static_cast<double>(idx.size())));
        for (std::size_t j = 0; j < k; ++j) is_test[idx[perm[j]]] = 1;
    }
    std::pair<std::vector<ImageSample>, std::vector<ImageSample>> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        (is_test[i] ? out.second : out.first).push_back(samples[i]);
    return out;
}

// ---------------------------------------------------------------------------
// PPM (P6, maxval 255)

void save_ppm(const fs::path& path, const Image& img) {
    if (img.channels != 3) throw ValidationError("save_ppm: expects a 3-channel image");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_ppm: cannot open " + path.string());
    f << "P6\n" << img.width << " " << img.height << "\n255\n";
    const auto planar = quantize8(img);
    const std::size_t n = img.pixel_count();
    std::vector<std::uint8_t> interleaved(n * 3);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) interleaved[i * 3 + c] = planar[c * n + i];
    f.write(reinterpret_cast<const char*>(interleaved.data()),
            static_cast<std::streamsize>(interleaved.size()));
    if (!f) throw IoError("save_ppm: short write to " + path.string());
}

namespace {

// skips whitespace and '#' comments between header fields
std::size_t next_ppm_int(std::istream& in, const fs::path& path) {
    for (;;) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(ch)) {
            in.get();
            continue;
        }
        break;
    }
    std::size_t v = 0;
    if (!(in >> v)) throw IoError("load_ppm: malformed header in " + path.string());
    return v;
}

} // namespace

Image load_ppm(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_ppm: cannot open " + path.string());
    std::string magic;
    f >> magic;
    if (magic != "P6") throw IoError("load_ppm: " + path.string() + " is not a binary PPM (P6)");
    const std::size_t w = next_ppm_int(f, path);
    const std::size_t h = next_ppm_int(f, path);
    const std::size_t maxval = next_ppm_int(f, path);
    if (maxval != 255)
        throw IoError("load_ppm: unsupported maxval " + std::to_string(maxval) + " in " +
                      path.string());
    f.get(); // single whitespace after maxval
    std::vector<std::uint8_t> interleaved(w * h * 3);
    f.read(reinterpret_cast<char*>(interleaved.data()),
           static_cast<std::streamsize>(interleaved.size()));
    if (f.gcount() != static_cast<std::streamsize>(interleaved.size()))
        throw IoError("load_ppm: truncated pixel data in " + path.string());
    std::vector<std::uint8_t> planar(w * h * 3);
    const std::size_t n = w * h;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 3; ++c) planar[c * n + i] = interleaved[i * 3 + c];
    return dequantize8(planar, 3, h, w);
}

// ---------------------------------------------------------------------------
// manifest

void save_dataset(const fs::path& root, const std::vector<ImageSample>& samples) {
    std::error_code ec;
    fs::create_directories(root / "images", ec);
    if (ec) throw IoError("save_dataset: cannot create " + (root / "images").string());
    std::ofstream manifest(root / "manifest.jsonl");
    if (!manifest) throw IoError("save_dataset: cannot open " + (root / "manifest.jsonl").string());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        std::ostringstream name;
        name << "images/" << label_name(s.label) << "_";
        name.fill('0');
        name.width(6);
        name << i;
        std::string file = name.str() + ".ppm";
        save_ppm(root / file, s.image);
        json line;
        line["file"] = file;
        line["label"] = label_name(s.label);
        line["domain"] = s.domain;
        if (s.bbox)
            line["bbox"] = {s.bbox->x, s.bbox->y, s.bbox->w, s.bbox->h};
        else
            line["bbox"] = nullptr;
        manifest << line.dump() << "\n";
    }
    if (!manifest) throw IoError("save_dataset: short write to manifest");
}

std::vector<ImageSample> load_dataset(const fs::path& root) {
    std::vector<ImageSample> out;
    const fs::path manifest_path = root / "manifest.jsonl";
    if (!fs::exists(manifest_path)) return out; // empty directory: empty dataset
    std::ifstream manifest(manifest_path);
    if (!manifest) throw IoError("load_dataset: cannot open " + manifest_path.string());

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(manifest, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
        json entry;
        try {
            entry = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("manifest " + where + ": malformed JSON: " + e.what());
        }
        if (!entry.is_object())
            throw ValidationError("manifest " + where + ": line is not an object");
        for (const auto& [key, value] : entry.items()) {
            (void)value;
            if (key != "file" && key != "label" && key != "domain" && key != "bbox")
                throw ValidationError("manifest " + where + ": unknown key '" + key + "'");
        }
        for (const char* key : {"file", "label", "domain", "bbox"})
            if (!entry.contains(key))
                throw ValidationError("manifest " + where + ": missing key '" + std::string(key) +
                                      "'");
        ImageSample s;
        const std::string label = entry["label"].get<std::string>();
        if (label == "real")
            s.label = Label::Real;
        else if (label == "fake")
            s.label = Label::Fake;
        else
            throw ValidationError("manifest " + where + ": unknown label '" + label + "'");
        s.domain = entry["domain"].get<std::string>();
        const std::string file = entry["file"].get<std::string>();
        s.source_id = s.domain + "/" + file;
        const fs::path img_path = root / file;
        if (!fs::exists(img_path))
            throw IoError("manifest " + where + ": missing file " + img_path.string());
        s.image = load_ppm(img_path);
        if (!entry["bbox"].is_null()) {
            auto arr = entry["bbox"];
            if (!arr.is_array() || arr.size() != 4)
                throw ValidationError("manifest " + where + ": bbox must be [x,y,w,h] or null");
            s.bbox = BBox{arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(),
                          arr[3].get<int>()};
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace ucl
