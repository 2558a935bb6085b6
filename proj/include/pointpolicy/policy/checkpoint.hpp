#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/policy.hpp"

// Checkpoint layout (all integers little-endian):
//   magic "PPCKPT\r\n" | u32 version | u64 metadata length | metadata JSON (UTF-8)
//   u32 tensor count | per tensor: u32 name length, name, u32 rows, u32 cols, rows*cols f32 row-major
//   end marker "PPEND\0\0\0"
namespace pointpolicy::policy {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::array<char, 8> kCheckpointMagic{'P', 'P', 'C', 'K', 'P', 'T', '\r', '\n'};
inline constexpr std::array<char, 8> kCheckpointEnd{'P', 'P', 'E', 'N', 'D', '\0', '\0', '\0'};

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.put(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(std::istream& in) {
    static_assert(std::is_unsigned_v<U>);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw CorruptFile("checkpoint truncated");
        value |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
}

inline std::string get_bytes(std::istream& in, std::size_t n) {
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw CorruptFile("checkpoint truncated");
    return s;
}

inline nlohmann::json metadata(const PolicyParameters& p) {
    const auto& c = p.config;
    nlohmann::json kps = nlohmann::json::array();
    for (const auto& k : p.keypoints) kps.push_back({{"name", k.name}, {"role", dataio::to_string(k.role)}, {"group", k.group}});
    return {{"task", p.task},
            {"config",
             {{"history", c.history},
              {"chunk", c.chunk},
              {"hidden", c.hidden},
              {"layers", c.layers},
              {"heads", c.heads},
              {"mlp_ratio", c.mlp_ratio},
              {"num_robot_points", c.num_robot_points},
              {"num_object_points", c.num_object_points}}},
            {"normalization",
             {{"mean", {p.stats.mean.x(), p.stats.mean.y(), p.stats.mean.z()}},
              {"std", {p.stats.std.x(), p.stats.std.y(), p.stats.std.z()}}}},
            {"keypoints", kps}};
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const PolicyParameters& p) {
    out.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    const std::string meta = detail::metadata(p).dump();
    detail::put_le<std::uint64_t>(out, meta.size());
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.weights.size()));
    for (const auto& t : p.weights.tensors()) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.rows()));
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.cols()));
        for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
                detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(t.value(r, c)));
            }
        }
    }
    out.write(kCheckpointEnd.data(), kCheckpointEnd.size());
}

inline PolicyParameters load_checkpoint(std::istream& in) {
    const std::string magic = detail::get_bytes(in, kCheckpointMagic.size());
    if (std::memcmp(magic.data(), kCheckpointMagic.data(), kCheckpointMagic.size()) != 0) {
        throw CorruptFile("not a checkpoint file");
    }
    const auto version = detail::get_le<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw FormatVersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                                    std::to_string(kCheckpointVersion));
    }
    const auto meta_len = detail::get_le<std::uint64_t>(in);
    if (meta_len > (1ULL << 26)) throw CorruptFile("implausible metadata length");
    PolicyParameters p;
    try {
        const auto meta = nlohmann::json::parse(detail::get_bytes(in, static_cast<std::size_t>(meta_len)));
        p.task = meta.at("task").get<std::string>();
        const auto& c = meta.at("config");
        p.config.history = c.at("history").get<int>();
        p.config.chunk = c.at("chunk").get<int>();
        p.config.hidden = c.at("hidden").get<int>();
        p.config.layers = c.at("layers").get<int>();
        p.config.heads = c.at("heads").get<int>();
        p.config.mlp_ratio = c.at("mlp_ratio").get<int>();
        p.config.num_robot_points = c.at("num_robot_points").get<int>();
        p.config.num_object_points = c.at("num_object_points").get<int>();
        const auto& n = meta.at("normalization");
        for (int i = 0; i < 3; ++i) {
            p.stats.mean(i) = n.at("mean").at(i).get<double>();
            p.stats.std(i) = n.at("std").at(i).get<double>();
        }
        for (const auto& k : meta.at("keypoints")) {
            p.keypoints.push_back({k.at("name").get<std::string>(), dataio::role_from_string(k.at("role").get<std::string>()),
                                   k.at("group").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("bad checkpoint metadata: ") + e.what());
    } catch (const SchemaViolation& e) {
        throw CorruptFile(e.what());
    }
    try {
        p.config.validate();
    } catch (const ConfigError& e) {
        throw CorruptFile(e.what());
    }

    p.weights = TrackTransformer<float>(p.config).make_parameters();
    const auto count = detail::get_le<std::uint32_t>(in);
    if (count != p.weights.size()) throw CorruptFile("tensor count does not match architecture");
    for (auto& t : p.weights.tensors()) {
        const auto name_len = detail::get_le<std::uint32_t>(in);
        if (name_len > 4096) throw CorruptFile("implausible tensor name length");
        const std::string name = detail::get_bytes(in, name_len);
        const auto rows = detail::get_le<std::uint32_t>(in);
        const auto cols = detail::get_le<std::uint32_t>(in);
        if (name != t.name || rows != t.value.rows() || cols != t.value.cols()) {
            throw CorruptFile("unexpected tensor '" + name + "'");
        }
        for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.value.cols(); ++c) {
                t.value(r, c) = std::bit_cast<float>(detail::get_le<std::uint32_t>(in));
            }
        }
    }
    const std::string end = detail::get_bytes(in, kCheckpointEnd.size());
    if (std::memcmp(end.data(), kCheckpointEnd.data(), kCheckpointEnd.size()) != 0) {
        throw CorruptFile("missing end marker");
    }
    if (in.peek() != std::char_traits<char>::eof()) throw CorruptFile("trailing bytes after checkpoint");
    return p;
}

inline void save_checkpoint(const std::string& path, const PolicyParameters& p) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorruptFile("cannot open " + path + " for writing");
    save_checkpoint(out, p);
    if (!out) throw CorruptFile("write failed for " + path);
}

inline PolicyParameters load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptFile("cannot open " + path);
    return load_checkpoint(in);
}

}  // namespace pointpolicy::policy
