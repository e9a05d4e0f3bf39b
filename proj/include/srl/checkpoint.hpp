#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srl/network.hpp"
#include "srl/serde.hpp"

namespace srl {

struct Checkpoint {
    Network net;
    std::optional<Mask> mask;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_digest;
};

namespace detail {

inline std::string encode_matrix(const Matrix& m) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(m.data.size() * 8);
    for (double v : m.data) append_le_double(bytes, v);
    return base64_encode(bytes.data(), bytes.size());
}

inline std::string encode_doubles(const std::vector<double>& v) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(v.size() * 8);
    for (double x : v) append_le_double(bytes, x);
    return base64_encode(bytes.data(), bytes.size());
}

inline std::string encode_mask_layer(const std::vector<std::uint8_t>& m) {
    return base64_encode(m.data(), m.size());
}

inline std::vector<double> decode_doubles(const std::string& text, std::size_t expect,
                                          const std::string& what) {
    std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() != expect * 8)
        throw std::runtime_error("checkpoint: corrupted " + what + " payload (expected " +
                                 std::to_string(expect * 8) + " bytes, got " +
                                 std::to_string(bytes.size()) + ")");
    std::vector<double> out(expect);
    for (std::size_t i = 0; i < expect; ++i) out[i] = read_le_double(bytes.data() + i * 8);
    return out;
}

inline std::uint32_t payload_crc(const Network& net, const Mask* mask) {
    std::vector<std::uint8_t> bytes;
    for (const Matrix& w : net.weights)
        for (double v : w.data) append_le_double(bytes, v);
    for (const auto& s : net.scaling)
        for (double v : s) append_le_double(bytes, v);
    if (mask)
        for (const auto& l : mask->layers) bytes.insert(bytes.end(), l.begin(), l.end());
    return crc32(bytes.data(), bytes.size());
}

}  // namespace detail

/// Serialize to the versioned JSON envelope: weight matrices are row-major
/// little-endian 64-bit floats, base64-encoded, one string per layer.
inline std::string checkpoint_to_string(const Network& net, const Mask* mask,
                                        std::optional<std::uint64_t> seed = std::nullopt,
                                        std::optional<std::string> config_digest = std::nullopt) {
    net.validate();
    if (mask) mask->validate_against(net);
    nlohmann::json j;
    j["version"] = 1;
    j["dims"] = net.dims;
    j["activation"] = "relu";
    std::vector<std::string> ws;
    for (const Matrix& w : net.weights) ws.push_back(detail::encode_matrix(w));
    j["weights"] = ws;
    std::vector<std::string> ss;
    for (const auto& s : net.scaling) ss.push_back(detail::encode_doubles(s));
    j["scaling"] = ss;
    if (mask) {
        std::vector<std::string> ms;
        for (const auto& l : mask->layers) ms.push_back(detail::encode_mask_layer(l));
        j["mask"] = ms;
    }
    if (seed) j["seed"] = *seed;
    if (config_digest) j["config_digest"] = *config_digest;
    j["crc32"] = detail::payload_crc(net, mask);
    return j.dump(2) + "\n";
}

inline Checkpoint checkpoint_from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: corrupted envelope: ") + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported version");
    if (j.value("activation", "") != "relu")
        throw std::runtime_error("checkpoint: unsupported activation");

    Checkpoint ck;
    ck.net.dims = j.at("dims").get<std::vector<std::size_t>>();
    if (ck.net.dims.size() < 2) throw std::runtime_error("checkpoint: bad dims");

    auto ws = j.at("weights").get<std::vector<std::string>>();
    if (ws.size() != ck.net.dims.size() - 1)
        throw std::runtime_error("checkpoint: weight layer count does not match dims");
    for (std::size_t l = 0; l < ws.size(); ++l) {
        Matrix w(ck.net.dims[l], ck.net.dims[l + 1]);
        w.data = detail::decode_doubles(ws[l], w.rows * w.cols, "weights[" + std::to_string(l) + "]");
        ck.net.weights.push_back(std::move(w));
    }
    auto ss = j.at("scaling").get<std::vector<std::string>>();
    if (ss.size() != ck.net.hidden_count())
        throw std::runtime_error("checkpoint: scaling layer count does not match dims");
    for (std::size_t l = 0; l < ss.size(); ++l)
        ck.net.scaling.push_back(
            detail::decode_doubles(ss[l], ck.net.dims[l + 1], "scaling[" + std::to_string(l) + "]"));

    if (j.contains("mask")) {
        Mask m;
        auto ms = j.at("mask").get<std::vector<std::string>>();
        if (ms.size() != ck.net.weights.size())
            throw std::runtime_error("checkpoint: mask layer count does not match weights");
        for (std::size_t l = 0; l < ms.size(); ++l) {
            std::vector<std::uint8_t> bytes = base64_decode(ms[l]);
            if (bytes.size() != ck.net.dims[l] * ck.net.dims[l + 1])
                throw std::runtime_error("checkpoint: corrupted mask payload at layer " +
                                         std::to_string(l));
            for (std::uint8_t b : bytes)
                if (b > 1) throw std::runtime_error("checkpoint: mask bytes must be 0 or 1");
            m.layers.push_back(std::move(bytes));
        }
        ck.mask = std::move(m);
    }
    if (j.contains("seed")) ck.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("config_digest")) ck.config_digest = j.at("config_digest").get<std::string>();

    std::uint32_t want = j.value("crc32", std::uint32_t(0));
    std::uint32_t got = detail::payload_crc(ck.net, ck.mask ? &*ck.mask : nullptr);
    if (j.contains("crc32") && want != got)
        throw std::runtime_error("checkpoint: checksum mismatch");
    ck.net.validate();
    return ck;
}

inline void save_checkpoint(const Network& net, const Mask* mask, const std::string& path,
                            std::optional<std::uint64_t> seed = std::nullopt,
                            std::optional<std::string> config_digest = std::nullopt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out << checkpoint_to_string(net, mask, seed, config_digest);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

}  // namespace srl
