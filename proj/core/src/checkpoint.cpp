#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sigfolio/policy_net.hpp"

namespace sigfolio {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'F', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
    }
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xffu));
    }
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
    }
    return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
    }
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const PolicySnapshot& snapshot) {
    const NetConfig& cfg = snapshot.config();

    nlohmann::json manifest;
    manifest["format"] = "sigfolio-checkpoint-1";
    manifest["version"] = snapshot.version();
    manifest["config_digest"] = cfg.digest();
    manifest["net"] = {
        {"num_symbols", cfg.num_symbols},     {"input_channels", cfg.input_channels},
        {"window", cfg.window},               {"conv1_channels", cfg.conv1_channels},
        {"conv1_kernel", cfg.conv1_kernel},   {"conv2_channels", cfg.conv2_channels},
        {"conv2_kernel", cfg.conv2_kernel},   {"hidden", cfg.hidden},
    };
    nlohmann::json params = nlohmann::json::array();
    for (const ParamShape& shape : parameter_shapes(cfg)) {
        params.push_back({{"name", shape.name}, {"shape", shape.dims}});
    }
    manifest["params"] = std::move(params);
    const std::string manifest_text = manifest.dump();

    std::vector<std::uint8_t> bytes;
    bytes.reserve(12 + manifest_text.size() + 8 * snapshot.flat().size());
    bytes.insert(bytes.end(), kMagic, kMagic + sizeof(kMagic));
    put_u32(bytes, static_cast<std::uint32_t>(manifest_text.size()));
    bytes.insert(bytes.end(), manifest_text.begin(), manifest_text.end());
    for (const double v : snapshot.flat()) {
        put_f64(bytes, v);
    }
    return bytes;
}

PolicySnapshot snapshot_from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a policy checkpoint (bad magic)");
    }
    const std::uint32_t manifest_len = get_u32(bytes, 8);
    if (bytes.size() < 12 + static_cast<std::size_t>(manifest_len)) {
        throw std::runtime_error("checkpoint truncated inside the manifest");
    }
    const std::string manifest_text(reinterpret_cast<const char*>(bytes.data()) + 12,
                                    manifest_len);
    const nlohmann::json manifest = nlohmann::json::parse(manifest_text);
    if (manifest.value("format", "") != "sigfolio-checkpoint-1") {
        throw std::runtime_error("unsupported checkpoint format");
    }

    NetConfig cfg;
    const auto& net = manifest.at("net");
    cfg.num_symbols = net.at("num_symbols").get<std::size_t>();
    cfg.input_channels = net.at("input_channels").get<std::size_t>();
    cfg.window = net.at("window").get<std::size_t>();
    cfg.conv1_channels = net.at("conv1_channels").get<std::size_t>();
    cfg.conv1_kernel = net.at("conv1_kernel").get<std::size_t>();
    cfg.conv2_channels = net.at("conv2_channels").get<std::size_t>();
    cfg.conv2_kernel = net.at("conv2_kernel").get<std::size_t>();
    cfg.hidden = net.at("hidden").get<std::size_t>();
    if (manifest.at("config_digest").get<std::string>() != cfg.digest()) {
        throw std::runtime_error("checkpoint config digest mismatch");
    }

    const std::size_t count = parameter_count(cfg);
    const std::size_t payload_offset = 12 + manifest_len;
    if (bytes.size() != payload_offset + 8 * count) {
        throw std::runtime_error("checkpoint parameter payload has the wrong size");
    }
    std::vector<double> flat(count);
    for (std::size_t i = 0; i < count; ++i) {
        flat[i] = get_f64(bytes, payload_offset + 8 * i);
    }
    return PolicySnapshot(cfg, manifest.at("version").get<std::uint64_t>(), std::move(flat));
}

void save_checkpoint(const PolicySnapshot& snapshot, const std::filesystem::path& path) {
    const auto bytes = checkpoint_bytes(snapshot);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot create " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

PolicySnapshot load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return snapshot_from_bytes(bytes);
}

}  // namespace sigfolio
