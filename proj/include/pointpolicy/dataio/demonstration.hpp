#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pointpolicy/errors.hpp"

namespace pointpolicy::dataio {

inline constexpr int kDemoFormatVersion = 1;
inline constexpr const char* kDemoFormatName = "pointpolicy.demo";

enum class KeypointRole { Hand, Robot, Object };

inline std::string to_string(KeypointRole r) {
    switch (r) {
        case KeypointRole::Hand: return "hand";
        case KeypointRole::Robot: return "robot";
        case KeypointRole::Object: return "object";
    }
    return "unknown";
}

inline KeypointRole role_from_string(const std::string& s) {
    if (s == "hand") return KeypointRole::Hand;
    if (s == "robot") return KeypointRole::Robot;
    if (s == "object") return KeypointRole::Object;
    throw SchemaViolation("unknown keypoint role '" + s + "'");
}

struct KeypointSpec {
    std::string name;
    KeypointRole role = KeypointRole::Object;
    std::string group;  // owning entity, e.g. "hand", "robot", "block"

    friend bool operator==(const KeypointSpec&, const KeypointSpec&) = default;
};

struct DemoHeader {
    int version = kDemoFormatVersion;
    std::string task;
    std::vector<KeypointSpec> keypoints;
    std::vector<std::string> views;
    double rate_hz = 20.0;
    std::uint64_t seed = 0;

    friend bool operator==(const DemoHeader&, const DemoHeader&) = default;

    std::vector<int> indices_with_role(KeypointRole role) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < keypoints.size(); ++i) {
            if (keypoints[i].role == role) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < keypoints.size(); ++i) {
            if (keypoints[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }
};

struct PixelObservation {
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
    bool occluded = false;

    friend bool operator==(const PixelObservation&, const PixelObservation&) = default;
};

struct GripperRecord {
    bool closed = false;
    double distance = 0.0;  // finger distance the state was derived from, meters

    friend bool operator==(const GripperRecord&, const GripperRecord&) = default;
};

struct DemoFrame {
    double timestamp = 0.0;
    /// views[v][k]: observation of keypoint k in view v.
    std::vector<std::vector<PixelObservation>> views;
    /// 3 x K points in the robot base frame, when known.
    std::optional<Eigen::Matrix3Xd> points3d;
    std::optional<GripperRecord> gripper;

    friend bool operator==(const DemoFrame& a, const DemoFrame& b) {
        if (a.timestamp != b.timestamp || a.views != b.views || a.gripper != b.gripper) return false;
        if (a.points3d.has_value() != b.points3d.has_value()) return false;
        return !a.points3d || (a.points3d->cols() == b.points3d->cols() && *a.points3d == *b.points3d);
    }
};

/// Ordered keypoint frames of one episode plus its schema.
struct Demonstration {
    DemoHeader header;
    std::vector<DemoFrame> frames;

    friend bool operator==(const Demonstration&, const Demonstration&) = default;

    std::size_t size() const { return frames.size(); }
    bool empty() const { return frames.empty(); }
    bool has_points3d() const { return !frames.empty() && frames.front().points3d.has_value(); }

    /// Throws SchemaViolation / FormatVersionMismatch when an invariant is broken.
    void validate() const {
        if (header.version != kDemoFormatVersion) {
            throw FormatVersionMismatch("demo version " + std::to_string(header.version));
        }
        if (!(header.rate_hz > 0.0)) throw SchemaViolation("rate_hz must be positive");
        const std::size_t k = header.keypoints.size();
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                if (header.keypoints[i].name == header.keypoints[j].name) {
                    throw SchemaViolation("duplicate keypoint name " + header.keypoints[i].name);
                }
            }
        }
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto& fr = frames[f];
            const std::string where = "frame " + std::to_string(f);
            if (!std::isfinite(fr.timestamp)) throw SchemaViolation(where + ": non-finite timestamp");
            if (f > 0 && !(fr.timestamp > frames[f - 1].timestamp)) {
                throw SchemaViolation(where + ": timestamps not strictly increasing");
            }
            if (fr.views.size() != header.views.size()) {
                throw SchemaViolation(where + ": expected " + std::to_string(header.views.size()) + " views");
            }
            for (const auto& view : fr.views) {
                if (view.size() != k) throw SchemaViolation(where + ": view keypoint count mismatch");
                for (const auto& obs : view) {
                    if (!obs.pixel.allFinite()) throw SchemaViolation(where + ": non-finite pixel");
                }
            }
            if (fr.points3d.has_value() != frames.front().points3d.has_value()) {
                throw SchemaViolation(where + ": 3D points present in some frames only");
            }
            if (fr.points3d) {
                if (fr.points3d->cols() != static_cast<Eigen::Index>(k)) {
                    throw SchemaViolation(where + ": 3D keypoint count mismatch");
                }
                if (!fr.points3d->allFinite()) throw SchemaViolation(where + ": non-finite 3D point");
            }
            if (fr.gripper.has_value() != frames.front().gripper.has_value()) {
                throw SchemaViolation(where + ": gripper present in some frames only");
            }
        }
    }
};

// ---------------------------------------------------------------------------------------------
// Line-delimited JSON encoding. Line 1 is the header object; every further line is one frame.
// See docs/demo_format.md for the grammar.

inline nlohmann::json header_to_json(const DemoHeader& h) {
    nlohmann::json kps = nlohmann::json::array();
    for (const auto& kp : h.keypoints) {
        kps.push_back({{"name", kp.name}, {"role", to_string(kp.role)}, {"group", kp.group}});
    }
    return {{"format", kDemoFormatName}, {"version", h.version}, {"task", h.task},
            {"rate_hz", h.rate_hz},      {"seed", h.seed},       {"views", h.views},
            {"keypoints", kps}};
}

inline nlohmann::json frame_to_json(const DemoFrame& f) {
    nlohmann::json j;
    j["t"] = f.timestamp;
    if (f.gripper) {
        j["gripper"] = {{"closed", f.gripper->closed}, {"distance", f.gripper->distance}};
    } else {
        j["gripper"] = nullptr;
    }
    nlohmann::json views = nlohmann::json::array();
    for (const auto& view : f.views) {
        nlohmann::json v = nlohmann::json::array();
        for (const auto& obs : view) v.push_back({obs.pixel.x(), obs.pixel.y(), obs.occluded ? 1 : 0});
        views.push_back(std::move(v));
    }
    j["views"] = std::move(views);
    if (f.points3d) {
        nlohmann::json pts = nlohmann::json::array();
        for (Eigen::Index c = 0; c < f.points3d->cols(); ++c) {
            pts.push_back({(*f.points3d)(0, c), (*f.points3d)(1, c), (*f.points3d)(2, c)});
        }
        j["points3d"] = std::move(pts);
    }
    return j;
}

namespace detail {

template <typename Fn>
auto parse_field(const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(what + ": " + e.what());
    }
}

}  // namespace detail

inline DemoHeader header_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("format") || j.at("format") != kDemoFormatName) {
        throw CorruptFile("missing demo format tag");
    }
    if (!j.contains("version") || !j.at("version").is_number_integer()) {
        throw CorruptFile("missing demo format version");
    }
    DemoHeader h;
    h.version = j.at("version").get<int>();
    if (h.version != kDemoFormatVersion) {
        throw FormatVersionMismatch("demo version " + std::to_string(h.version) + ", expected " +
                                    std::to_string(kDemoFormatVersion));
    }
    return detail::parse_field("header", [&] {
        h.task = j.at("task").get<std::string>();
        h.rate_hz = j.at("rate_hz").get<double>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.views = j.at("views").get<std::vector<std::string>>();
        for (const auto& kp : j.at("keypoints")) {
            h.keypoints.push_back({kp.at("name").get<std::string>(), role_from_string(kp.at("role").get<std::string>()),
                                   kp.at("group").get<std::string>()});
        }
        return h;
    });
}

inline DemoFrame frame_from_json(const nlohmann::json& j) {
    return detail::parse_field("frame", [&] {
        DemoFrame f;
        f.timestamp = j.at("t").get<double>();
        const auto& g = j.at("gripper");
        if (!g.is_null()) f.gripper = GripperRecord{g.at("closed").get<bool>(), g.at("distance").get<double>()};
        for (const auto& view : j.at("views")) {
            std::vector<PixelObservation> v;
            for (const auto& obs : view) {
                if (obs.size() != 3) throw SchemaViolation("pixel entries must be [u, v, occluded]");
                v.push_back({Eigen::Vector2d(obs.at(0).get<double>(), obs.at(1).get<double>()), obs.at(2).get<int>() != 0});
            }
            f.views.push_back(std::move(v));
        }
        if (j.contains("points3d")) {
            const auto& pts = j.at("points3d");
            Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(pts.size()));
            for (std::size_t c = 0; c < pts.size(); ++c) {
                if (pts[c].size() != 3) throw SchemaViolation("3D points must have three coordinates");
                for (int r = 0; r < 3; ++r) m(r, static_cast<Eigen::Index>(c)) = pts[c].at(r).get<double>();
            }
            f.points3d = std::move(m);
        }
        return f;
    });
}

inline void write_demo(std::ostream& out, const Demonstration& demo) {
    demo.validate();
    out << header_to_json(demo.header).dump() << '\n';
    for (const auto& f : demo.frames) out << frame_to_json(f).dump() << '\n';
}

inline Demonstration read_demo(std::istream& in) {
    Demonstration demo;
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile("empty demo stream");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptFile(std::string("unparsable header: ") + e.what());
    }
    demo.header = header_from_json(header);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw CorruptFile("line " + std::to_string(line_no) + ": " + e.what());
        }
        demo.frames.push_back(frame_from_json(j));
    }
    demo.validate();
    return demo;
}

inline void write_demo(const std::string& path, const Demonstration& demo) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorruptFile("cannot open " + path + " for writing");
    write_demo(out, demo);
    if (!out) throw CorruptFile("write failed for " + path);
}

inline Demonstration read_demo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptFile("cannot open " + path);
    return read_demo(in);
}

/// Keeps frames 0, s, 2s, ... and always the final frame.
inline Demonstration subsample(const Demonstration& demo, int stride) {
    if (stride < 1) throw ConfigError("subsample stride must be >= 1");
    Demonstration out;
    out.header = demo.header;
    out.header.rate_hz = demo.header.rate_hz / stride;
    const std::size_t n = demo.frames.size();
    for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(stride)) out.frames.push_back(demo.frames[i]);
    if (n > 0 && (n - 1) % static_cast<std::size_t>(stride) != 0) out.frames.push_back(demo.frames.back());
    return out;
}

}  // namespace pointpolicy::dataio
