#include "ucl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts are unsupported");

namespace ucl {

namespace {

constexpr char kMagic[4] = {'U', 'C', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& f, const fs::path& path) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw IoError("checkpoint: truncated file " + path.string());
    return v;
}

} // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    json header;
    header["format"] = "UCL1";
    header["version"] = kVersion;
    header["kind"] = ckpt.kind;
    header["config_hash"] = ckpt.config_hash;
    header["seed"] = ckpt.seed;
    header["extra"] = ckpt.extra;
    json tensor_list = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : ckpt.tensors) {
        json entry;
        entry["name"] = name;
        entry["shape"] = tensor.shape();
        entry["offset"] = offset;
        entry["bytes"] = tensor.numel() * sizeof(float);
        tensor_list.push_back(entry);
        offset += tensor.numel() * sizeof(float);
    }
    header["tensors"] = tensor_list;
    const std::string header_str = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open " + path.string() + " for writing");
    f.write(kMagic, 4);
    write_le<std::uint32_t>(f, kVersion);
    write_le<std::uint64_t>(f, header_str.size());
    f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    for (const auto& [name, tensor] : ckpt.tensors)
        f.write(reinterpret_cast<const char*>(tensor.data().data()),
                static_cast<std::streamsize>(tensor.numel() * sizeof(float)));
    if (!f) throw IoError("checkpoint: short write to " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: missing file " + path.string());
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("checkpoint: " + path.string() + " lacks the UCL1 magic");
    const auto version = read_le<std::uint32_t>(f, path);
    if (version != kVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version) + " in " +
                      path.string());
    const auto header_len = read_le<std::uint64_t>(f, path);
    std::string header_str(header_len, '\0');
    f.read(header_str.data(), static_cast<std::streamsize>(header_len));
    if (!f) throw IoError("checkpoint: truncated header in " + path.string());
    json header;
    try {
        header = json::parse(header_str);
    } catch (const json::exception& e) {
        throw IoError("checkpoint: malformed header in " + path.string() + ": " + e.what());
    }

    Checkpoint ckpt;
    ckpt.kind = header.at("kind").get<std::string>();
    ckpt.config_hash = header.at("config_hash").get<std::string>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.extra = header.value("extra", json::object());

    const std::streampos payload_start = f.tellg();
    std::uint64_t expected_offset = 0;
    for (const auto& entry : header.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<Shape>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        const auto bytes = entry.at("bytes").get<std::uint64_t>();
        if (offset != expected_offset)
            throw IoError("checkpoint: inconsistent offset for tensor '" + name + "' in " +
                          path.string());
        if (bytes != shape_numel(shape) * sizeof(float))
            throw IoError("checkpoint: byte count does not match shape for '" + name + "'");
        Tensor t(shape);
        f.seekg(payload_start + static_cast<std::streamoff>(offset));
        f.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(bytes));
        if (!f) throw IoError("checkpoint: truncated payload for '" + name + "' in " +
                              path.string());
        ckpt.tensors.emplace(name, std::move(t));
        expected_offset += bytes;
    }
    return ckpt;
}

std::string checkpoint_file_hash(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: missing file " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(f.gcount()), h);
    return hex64(h);
}

// ---------------------------------------------------------------------------

namespace {

Tensor stats_tensor(const std::vector<float>& v) { return Tensor({v.size()}, v); }

void put_bn(std::map<std::string, Tensor>& out, const std::string& base,
            const BatchNormParamsT<float>& bn) {
    out[base + ".gamma"] = bn.gamma;
    out[base + ".beta"] = bn.beta;
    out[base + ".running_mean"] = stats_tensor(bn.state->running_mean);
    out[base + ".running_var"] = stats_tensor(bn.state->running_var);
    out[base + ".stats_ready"] = Tensor({1}, {bn.state->initialized ? 1.0f : 0.0f});
}

const Tensor& need(const Checkpoint& ckpt, const std::string& name) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
        throw IoError("checkpoint: missing tensor '" + name + "'");
    return it->second;
}

void get_bn(const Checkpoint& ckpt, const std::string& base, BatchNormParamsT<float>& bn) {
    bn.gamma = need(ckpt, base + ".gamma");
    bn.beta = need(ckpt, base + ".beta");
    bn.state = std::make_shared<BatchNormState<float>>(bn.gamma.numel());
    bn.state->running_mean = need(ckpt, base + ".running_mean").data();
    bn.state->running_var = need(ckpt, base + ".running_var").data();
    bn.state->initialized = need(ckpt, base + ".stats_ready").data()[0] != 0.0f;
}

json encoder_config_json(const EncoderConfig& c) {
    return json{{"input_size", c.input_size},
                {"stem_channels", c.stem_channels},
                {"block_widths", c.block_widths}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    EncoderConfig c;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.stem_channels = j.at("stem_channels").get<std::size_t>();
    c.block_widths = j.at("block_widths").get<std::vector<std::size_t>>();
    return c;
}

} // namespace

Checkpoint encoder_to_checkpoint(const EncoderParams& encoder, const ProjectionParams& projection,
                                 std::uint64_t seed, const std::string& config_hash,
                                 const std::string& train_domain) {
    Checkpoint ckpt;
    ckpt.kind = "encoder";
    ckpt.config_hash = config_hash;
    ckpt.seed = seed;
    ckpt.extra["encoder"] = encoder_config_json(encoder.config);
    ckpt.extra["projection"] = {{"hidden_dim", projection.config.hidden_dim},
                                {"output_dim", projection.config.output_dim}};
    ckpt.extra["train_domain"] = train_domain;

    ckpt.tensors["encoder.stem.weight"] = encoder.stem;
    put_bn(ckpt.tensors, "encoder.stem_bn", encoder.stem_bn);
    for (std::size_t i = 0; i < encoder.blocks.size(); ++i) {
        const std::string base = "encoder.block" + std::to_string(i);
        ckpt.tensors[base + ".depthwise.weight"] = encoder.blocks[i].depthwise;
        ckpt.tensors[base + ".pointwise.weight"] = encoder.blocks[i].pointwise;
        put_bn(ckpt.tensors, base + ".bn", encoder.blocks[i].bn);
    }
    ckpt.tensors["projection.fc1.weight"] = projection.fc1.weight;
    ckpt.tensors["projection.fc1.bias"] = projection.fc1.bias;
    ckpt.tensors["projection.fc2.weight"] = projection.fc2.weight;
    ckpt.tensors["projection.fc2.bias"] = projection.fc2.bias;
    return ckpt;
}

void checkpoint_to_encoder(const Checkpoint& ckpt, EncoderParams& encoder,
                           ProjectionParams& projection) {
    if (ckpt.kind != "encoder")
        throw IoError("checkpoint: expected kind 'encoder', found '" + ckpt.kind + "'");
    encoder.config = encoder_config_from_json(ckpt.extra.at("encoder"));
    encoder.config.validate();
    encoder.stem = need(ckpt, "encoder.stem.weight");
    get_bn(ckpt, "encoder.stem_bn", encoder.stem_bn);
    encoder.blocks.clear();
    for (std::size_t i = 0; i < encoder.config.block_widths.size(); ++i) {
        const std::string base = "encoder.block" + std::to_string(i);
        SepBlockParamsT<float> block;
        block.depthwise = need(ckpt, base + ".depthwise.weight");
        block.pointwise = need(ckpt, base + ".pointwise.weight");
        get_bn(ckpt, base + ".bn", block.bn);
        encoder.blocks.push_back(std::move(block));
    }
    projection.config.hidden_dim = ckpt.extra.at("projection").at("hidden_dim").get<std::size_t>();
    projection.config.output_dim = ckpt.extra.at("projection").at("output_dim").get<std::size_t>();
    projection.fc1.weight = need(ckpt, "projection.fc1.weight");
    projection.fc1.bias = need(ckpt, "projection.fc1.bias");
    projection.fc2.weight = need(ckpt, "projection.fc2.weight");
    projection.fc2.bias = need(ckpt, "projection.fc2.bias");
}

Checkpoint classifier_to_checkpoint(const ClassifierParams& classifier, std::uint64_t seed,
                                    const std::string& config_hash,
                                    const std::string& train_domain,
                                    const std::string& feature_source) {
    Checkpoint ckpt;
    ckpt.kind = "classifier";
    ckpt.config_hash = config_hash;
    ckpt.seed = seed;
    ckpt.extra["classifier"] = {{"input_dim", classifier.config.input_dim},
                                {"widths", classifier.config.widths}};
    ckpt.extra["train_domain"] = train_domain;
    ckpt.extra["feature_source"] = feature_source;
    for (std::size_t i = 0; i < classifier.stack.size(); ++i) {
        const std::string base = "classifier.fc" + std::to_string(i);
        ckpt.tensors[base + ".weight"] = classifier.stack[i].weight;
        ckpt.tensors[base + ".bias"] = classifier.stack[i].bias;
    }
    ckpt.tensors["classifier.head.weight"] = classifier.head.weight;
    ckpt.tensors["classifier.head.bias"] = classifier.head.bias;
    return ckpt;
}

ClassifierParams checkpoint_to_classifier(const Checkpoint& ckpt) {
    if (ckpt.kind != "classifier")
        throw IoError("checkpoint: expected kind 'classifier', found '" + ckpt.kind + "'");
    ClassifierParams p;
    p.config.input_dim = ckpt.extra.at("classifier").at("input_dim").get<std::size_t>();
    p.config.widths = ckpt.extra.at("classifier").at("widths").get<std::vector<std::size_t>>();
    p.config.validate();
    p.stack.clear();
    for (std::size_t i = 0; i < p.config.widths.size(); ++i) {
        const std::string base = "classifier.fc" + std::to_string(i);
        LinearParamsT<float> l;
        l.weight = need(ckpt, base + ".weight");
        l.bias = need(ckpt, base + ".bias");
        p.stack.push_back(std::move(l));
    }
    p.head.weight = need(ckpt, "classifier.head.weight");
    p.head.bias = need(ckpt, "classifier.head.bias");
    return p;
}

} // namespace ucl
