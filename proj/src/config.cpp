#include "ucl/config.hpp"

#include <fstream>
#include <set>

using nlohmann::json;

namespace ucl {

namespace {

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
    if (!j.is_object())
        throw ValidationError("config: " + path + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError("config: unknown key '" + path + (path.empty() ? "" : ".") +
                                  key + "'");
    }
}

template <typename T>
void read_field(const json& j, const char* key, T& into, const std::string& path) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config: '" + path + "." + key + "' has the wrong type");
    }
}

void read_sgd(const json& j, const std::string& path, SgdConfig& sgd) {
    read_field(j, "lr", sgd.lr, path);
    read_field(j, "step_size", sgd.step_size, path);
    read_field(j, "descending_rate", sgd.descending_rate, path);
    read_field(j, "batch_size", sgd.batch_size, path);
    read_field(j, "epochs", sgd.epochs, path);
    read_field(j, "momentum", sgd.momentum, path);
    read_field(j, "weight_decay", sgd.weight_decay, path);
}

json sgd_json(const SgdConfig& sgd) {
    return json{{"lr", sgd.lr},
                {"step_size", sgd.step_size},
                {"descending_rate", sgd.descending_rate},
                {"batch_size", sgd.batch_size},
                {"epochs", sgd.epochs},
                {"momentum", sgd.momentum},
                {"weight_decay", sgd.weight_decay}};
}

DomainSpec domain_from_json(const json& j, const std::string& path) {
    reject_unknown(j, path,
                   {"name", "artifact", "strength", "real_count", "fake_count", "image_size",
                    "seed", "background_cells", "face", "emit_bbox"});
    DomainSpec d;
    read_field(j, "name", d.name, path);
    if (j.contains("artifact")) d.artifact = artifact_from_name(j.at("artifact").get<std::string>());
    read_field(j, "strength", d.strength, path);
    read_field(j, "real_count", d.real_count, path);
    read_field(j, "fake_count", d.fake_count, path);
    read_field(j, "image_size", d.image_size, path);
    read_field(j, "seed", d.seed, path);
    read_field(j, "background_cells", d.background_cells, path);
    read_field(j, "emit_bbox", d.emit_bbox, path);
    if (j.contains("face")) {
        const json& f = j.at("face");
        reject_unknown(f, path + ".face", {"rx", "ry", "center_jitter"});
        if (f.contains("rx")) {
            auto rx = f.at("rx").get<std::vector<double>>();
            if (rx.size() != 2) throw ValidationError("config: '" + path + ".face.rx' needs [lo,hi]");
            d.face.rx_lo = rx[0];
            d.face.rx_hi = rx[1];
        }
        if (f.contains("ry")) {
            auto ry = f.at("ry").get<std::vector<double>>();
            if (ry.size() != 2) throw ValidationError("config: '" + path + ".face.ry' needs [lo,hi]");
            d.face.ry_lo = ry[0];
            d.face.ry_hi = ry[1];
        }
        read_field(f, "center_jitter", d.face.center_jitter, path + ".face");
    }
    return d;
}

json domain_json(const DomainSpec& d) {
    return json{{"name", d.name},
                {"artifact", artifact_name(d.artifact)},
                {"strength", d.strength},
                {"real_count", d.real_count},
                {"fake_count", d.fake_count},
                {"image_size", d.image_size},
                {"seed", d.seed},
                {"background_cells", d.background_cells},
                {"face",
                 {{"rx", {d.face.rx_lo, d.face.rx_hi}},
                  {"ry", {d.face.ry_lo, d.face.ry_hi}},
                  {"center_jitter", d.face.center_jitter}}},
                {"emit_bbox", d.emit_bbox}};
}

} // namespace

RunConfig RunConfig::preset(const std::string& name) {
    RunConfig c;
    if (name == "desk") {
        c.data.split.test_fraction = 1.0 / 6.0; // 1200 samples -> 1000 train / 200 test
        c.data.split.seed = 7;
        DomainSpec a;
        a.name = "synthA";
        a.artifact = ArtifactType::BoundarySeam;
        a.strength = 0.15;
        a.real_count = a.fake_count = 600;
        a.image_size = 32;
        a.seed = 1001;
        a.background_cells = 8;
        DomainSpec b = a;
        b.name = "synthB";
        b.artifact = ArtifactType::ColorShift;
        b.strength = 0.12;
        b.seed = 1002;
        DomainSpec d3 = a;
        d3.name = "synthC";
        d3.artifact = ArtifactType::LowpassPatch;
        d3.strength = 0.85;
        d3.seed = 1003;
        c.data.domains = {a, b, d3};
        c.eval.test_domains = {"synthA", "synthB", "synthC"};

        c.encoder.input_size = 32;
        c.encoder.stem_channels = 16;
        c.encoder.block_widths = {32, 64, 128};
        c.projection.hidden_dim = 128;
        c.projection.output_dim = 64;
        c.augmentation.output_size = 32;

        // batch 40, 20 epochs, step 6 at 50%, tau 0.5; the desk rate is raised
        // because the mini encoder trains from scratch
        c.pretrain.sgd = SgdConfig{0.2, 6, 0.5, 40, 20, 0.0, 0.0};
        c.pretrain.temperature = 0.5;

        c.probe.sgd = SgdConfig{0.01, 400, 0.8, 256, 500, 0.0, 0.0};
        c.probe.classifier_widths = {128, 256, 128, 16};
        return c;
    }
    if (name == "paper") {
        c = preset("desk");
        for (auto& d : c.data.domains) d.image_size = 256;
        c.encoder.input_size = 256;
        c.encoder.stem_channels = 32;
        c.encoder.block_widths = {256, 728, 2048};
        c.projection.hidden_dim = 2048;
        c.projection.output_dim = 64;
        c.augmentation.output_size = 256;
        c.pretrain.sgd = SgdConfig{5e-4, 6, 0.5, 40, 20, 0.0, 0.0};
        c.probe.sgd = SgdConfig{3e-1, 400, 0.8, 6000, 5000, 0.0, 0.0};
        c.probe.classifier_widths = {2048, 4096, 2048, 256};
        return c;
    }
    throw ValidationError("config: unknown preset '" + name + "' (expected desk|paper)");
}

RunConfig RunConfig::from_json(const json& j) {
    reject_unknown(j, "",
                   {"preset", "seed", "data", "augmentation", "encoder", "pretrain", "probe",
                    "eval"});
    RunConfig c = preset(j.value("preset", std::string("desk")));
    read_field(j, "seed", c.seed, "");

    if (j.contains("data")) {
        const json& d = j.at("data");
        reject_unknown(d, "data", {"root", "train_domain", "split", "domains"});
        read_field(d, "root", c.data.root, "data");
        read_field(d, "train_domain", c.data.train_domain, "data");
        if (d.contains("split")) {
            const json& s = d.at("split");
            reject_unknown(s, "data.split", {"test_fraction", "seed"});
            read_field(s, "test_fraction", c.data.split.test_fraction, "data.split");
            read_field(s, "seed", c.data.split.seed, "data.split");
        }
        if (d.contains("domains")) {
            c.data.domains.clear();
            std::size_t i = 0;
            for (const auto& entry : d.at("domains"))
                c.data.domains.push_back(
                    domain_from_json(entry, "data.domains[" + std::to_string(i++) + "]"));
        }
    }

    if (j.contains("augmentation")) {
        const json& a = j.at("augmentation");
        reject_unknown(a, "augmentation", {"output_size", "crop", "flip", "jitter", "grayscale"});
        read_field(a, "output_size", c.augmentation.output_size, "augmentation");
        if (a.contains("crop")) {
            const json& t = a.at("crop");
            reject_unknown(t, "augmentation.crop", {"enabled", "area_range"});
            read_field(t, "enabled", c.augmentation.crop.enabled, "augmentation.crop");
            if (t.contains("area_range")) {
                auto r = t.at("area_range").get<std::vector<double>>();
                if (r.size() != 2)
                    throw ValidationError("config: 'augmentation.crop.area_range' needs [lo,hi]");
                c.augmentation.crop.area_lo = r[0];
                c.augmentation.crop.area_hi = r[1];
            }
        }
        if (a.contains("flip")) {
            const json& t = a.at("flip");
            reject_unknown(t, "augmentation.flip", {"enabled", "p"});
            read_field(t, "enabled", c.augmentation.flip.enabled, "augmentation.flip");
            read_field(t, "p", c.augmentation.flip.p, "augmentation.flip");
        }
        if (a.contains("jitter")) {
            const json& t = a.at("jitter");
            reject_unknown(t, "augmentation.jitter",
                           {"enabled", "brightness", "contrast", "saturation", "hue", "p"});
            read_field(t, "enabled", c.augmentation.jitter.enabled, "augmentation.jitter");
            read_field(t, "brightness", c.augmentation.jitter.brightness, "augmentation.jitter");
            read_field(t, "contrast", c.augmentation.jitter.contrast, "augmentation.jitter");
            read_field(t, "saturation", c.augmentation.jitter.saturation, "augmentation.jitter");
            read_field(t, "hue", c.augmentation.jitter.hue, "augmentation.jitter");
            read_field(t, "p", c.augmentation.jitter.p, "augmentation.jitter");
        }
        if (a.contains("grayscale")) {
            const json& t = a.at("grayscale");
            reject_unknown(t, "augmentation.grayscale", {"enabled", "p"});
            read_field(t, "enabled", c.augmentation.grayscale.enabled, "augmentation.grayscale");
            read_field(t, "p", c.augmentation.grayscale.p, "augmentation.grayscale");
        }
    }

    if (j.contains("encoder")) {
        const json& e = j.at("encoder");
        reject_unknown(e, "encoder",
                       {"input_size", "stem_channels", "block_widths", "projection_hidden",
                        "projection_dim"});
        read_field(e, "input_size", c.encoder.input_size, "encoder");
        read_field(e, "stem_channels", c.encoder.stem_channels, "encoder");
        read_field(e, "block_widths", c.encoder.block_widths, "encoder");
        read_field(e, "projection_hidden", c.projection.hidden_dim, "encoder");
        read_field(e, "projection_dim", c.projection.output_dim, "encoder");
    }

    if (j.contains("pretrain")) {
        const json& p = j.at("pretrain");
        reject_unknown(p, "pretrain",
                       {"lr", "step_size", "descending_rate", "batch_size", "epochs", "momentum",
                        "weight_decay", "temperature", "denominator"});
        read_sgd(p, "pretrain", c.pretrain.sgd);
        read_field(p, "temperature", c.pretrain.temperature, "pretrain");
        if (p.contains("denominator"))
            c.pretrain.denominator = denominator_from_name(p.at("denominator").get<std::string>());
    }

    if (j.contains("probe")) {
        const json& p = j.at("probe");
        reject_unknown(p, "probe",
                       {"lr", "step_size", "descending_rate", "batch_size", "epochs", "momentum",
                        "weight_decay", "feature_source", "classifier_widths"});
        read_sgd(p, "probe", c.probe.sgd);
        if (p.contains("feature_source"))
            c.probe.feature_source =
                feature_source_from_name(p.at("feature_source").get<std::string>());
        read_field(p, "classifier_widths", c.probe.classifier_widths, "probe");
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, "eval", {"test_domains"});
        read_field(e, "test_domains", c.eval.test_domains, "eval");
    }

    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path.string());
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ValidationError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

json RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    json domains = json::array();
    for (const auto& d : data.domains) domains.push_back(domain_json(d));
    j["data"] = {{"root", data.root},
                 {"train_domain", data.train_domain},
                 {"split",
                  {{"test_fraction", data.split.test_fraction}, {"seed", data.split.seed}}},
                 {"domains", domains}};
    j["augmentation"] = {
        {"output_size", augmentation.output_size},
        {"crop",
         {{"enabled", augmentation.crop.enabled},
          {"area_range", {augmentation.crop.area_lo, augmentation.crop.area_hi}}}},
        {"flip", {{"enabled", augmentation.flip.enabled}, {"p", augmentation.flip.p}}},
        {"jitter",
         {{"enabled", augmentation.jitter.enabled},
          {"brightness", augmentation.jitter.brightness},
          {"contrast", augmentation.jitter.contrast},
          {"saturation", augmentation.jitter.saturation},
          {"hue", augmentation.jitter.hue},
          {"p", augmentation.jitter.p}}},
        {"grayscale",
         {{"enabled", augmentation.grayscale.enabled}, {"p", augmentation.grayscale.p}}}};
    j["encoder"] = {{"input_size", encoder.input_size},
                    {"stem_channels", encoder.stem_channels},
                    {"block_widths", encoder.block_widths},
                    {"projection_hidden", projection.hidden_dim},
                    {"projection_dim", projection.output_dim}};
    json pre = sgd_json(pretrain.sgd);
    pre["temperature"] = pretrain.temperature;
    pre["denominator"] =
        pretrain.denominator == DenominatorMode::ExcludeSelf ? "exclude_self" : "literal";
    j["pretrain"] = pre;
    json pr = sgd_json(probe.sgd);
    pr["feature_source"] = feature_source_name(probe.feature_source);
    pr["classifier_widths"] = probe.classifier_widths;
    j["probe"] = pr;
    j["eval"] = {{"test_domains", eval.test_domains}};
    return j;
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("config: cannot open " + path.string() + " for writing");
    f << to_json().dump(2) << "\n";
    if (!f) throw IoError("config: short write to " + path.string());
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

void RunConfig::validate() const {
    pretrain.sgd.validate("pretrain", true);
    probe.sgd.validate("probe", false);
    if (!(pretrain.temperature > 0.0))
        throw ValidationError("pretrain.temperature: must be positive, got " +
                              std::to_string(pretrain.temperature));
    augmentation.validate();
    encoder.validate();
    projection.validate(encoder.feature_dim());
    data.split.validate();
    if (augmentation.output_size != encoder.input_size)
        throw ValidationError("augmentation.output_size: " +
                              std::to_string(augmentation.output_size) +
                              " does not match encoder.input_size " +
                              std::to_string(encoder.input_size));
    if (data.domains.empty())
        throw ValidationError("data.domains: must list at least one domain");
    std::set<std::string> names;
    for (const auto& d : data.domains) {
        d.validate();
        if (!names.insert(d.name).second)
            throw ValidationError("data.domains: duplicate name '" + d.name + "'");
    }
    if (!names.count(data.train_domain))
        throw ValidationError("data.train_domain: '" + data.train_domain +
                              "' is not a configured domain");
    if (eval.test_domains.empty())
        throw ValidationError("eval.test_domains: must list at least one domain");
    for (const auto& t : eval.test_domains)
        if (!names.count(t))
            throw ValidationError("eval.test_domains: '" + t + "' is not a configured domain");
    if (probe.classifier_widths.empty())
        throw ValidationError("probe.classifier_widths: must list at least one width");
}

const DomainSpec& RunConfig::domain(const std::string& name) const {
    for (const auto& d : data.domains)
        if (d.name == name) return d;
    throw ValidationError("config: domain '" + name + "' is not configured");
}

} // namespace ucl
