// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tadet/bmn.hpp"
#include "tadet/core.hpp"
#include "tadet/eval.hpp"
#include "tadet/fusion.hpp"

namespace tadet {

namespace detail {

inline void append_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void append_u64(std::string& buf, std::uint64_t v) {
    append_u32(buf, static_cast<std::uint32_t>(v & 0xffffffffu));
    append_u32(buf, static_cast<std::uint32_t>(v >> 32));
}

inline void append_f32(std::string& buf, float v) {
    append_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline void append_f64(std::string& buf, double v) {
    append_u64(buf, std::bit_cast<std::uint64_t>(v));
}

/// In-memory little-endian reader with byte-offset diagnostics.
class ByteReader {
public:
    ByteReader(std::string data, std::string source)
        : data_(std::move(data)), source_(std::move(source)) {}

    std::size_t offset() const { return pos_; }
    std::size_t size() const { return data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64(const char* what) {
        const std::uint64_t lo = u32(what);
        const std::uint64_t hi = u32(what);
        return lo | (hi << 32);
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

    void expect_exhausted(std::size_t expected_total) const {
        if (data_.size() != expected_total) {
            throw std::runtime_error(source_ + ": payload length mismatch, expected " +
                                     std::to_string(expected_total) + " bytes but file has " +
                                     std::to_string(data_.size()));
        }
    }

private:
    void need(std::size_t n, const char* what) const {
        if (pos_ + n > data_.size()) {
            throw std::runtime_error(source_ + ": truncated while reading " + what +
                                     " at byte offset " + std::to_string(pos_) + " (need " +
                                     std::to_string(n) + " bytes, have " +
                                     std::to_string(data_.size() - pos_) + ")");
        }
    }

    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error(path + ": cannot open for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(path + ": cannot open for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw std::runtime_error(path + ": write failed");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature container: magic "TADF", version, N/C/V/Nn header, then features,
// verb scores and noun scores as little-endian float32, row-major.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFeatureFileVersion = 1;

inline void write_feature_file(const std::string& path, const ClipFeatureSequence& seq) {
    std::string buf;
    const std::size_t n = seq.num_clips();
    buf.reserve(24 + 4 * (seq.features.size() + seq.verb_scores.size() + seq.noun_scores.size()));
    buf += "TADF";
    detail::append_u32(buf, kFeatureFileVersion);
    detail::append_u32(buf, static_cast<std::uint32_t>(n));
    detail::append_u32(buf, static_cast<std::uint32_t>(seq.feature_dim()));
    detail::append_u32(buf, static_cast<std::uint32_t>(seq.verb_classes()));
    detail::append_u32(buf, static_cast<std::uint32_t>(seq.noun_classes()));
    for (float v : seq.features.storage()) {
        detail::append_f32(buf, v);
    }
    for (float v : seq.verb_scores.storage()) {
        detail::append_f32(buf, v);
    }
    for (float v : seq.noun_scores.storage()) {
        detail::append_f32(buf, v);
    }
    detail::write_file_bytes(path, buf);
}

inline ClipFeatureSequence read_feature_file(const std::string& path, const TimeBase& tb,
                                             const std::string& video_id) {
    std::string bytes = detail::read_file_bytes(path);
    if (bytes.size() < 4 || bytes.compare(0, 4, "TADF") != 0) {
        throw std::runtime_error(path + ": bad magic at byte offset 0, expected \"TADF\"");
    }
    detail::ByteReader r(std::move(bytes), path);
    r.u32("magic");
    const std::uint32_t version = r.u32("version");
    if (version != kFeatureFileVersion) {
        throw std::runtime_error(path + ": unsupported version " + std::to_string(version) +
                                 ", expected " + std::to_string(kFeatureFileVersion));
    }
    const std::uint32_t n = r.u32("num_clips");
    const std::uint32_t c = r.u32("feature_dim");
    const std::uint32_t v = r.u32("verb_classes");
    const std::uint32_t nn = r.u32("noun_classes");
    if (n < 1 || c < 1 || v < 1 || nn < 1) {
        throw std::runtime_error(path + ": header counts must all be >= 1");
    }
    const std::size_t expected =
        24 + 4 * (static_cast<std::size_t>(n) * c + static_cast<std::size_t>(n) * v +
                  static_cast<std::size_t>(n) * nn);
    r.expect_exhausted(expected);

    ClipFeatureSequence seq;
    seq.video_id = video_id;
    seq.timebase = tb;
    seq.features = MatF(n, c);
    seq.verb_scores = MatF(n, v);
    seq.noun_scores = MatF(n, nn);
    for (float& x : seq.features.storage()) {
        x = r.f32("features");
    }
    for (float& x : seq.verb_scores.storage()) {
        x = r.f32("verb scores");
    }
    for (float& x : seq.noun_scores.storage()) {
        x = r.f32("noun scores");
    }
    normalize_score_rows(seq.verb_scores, 1e-5, path + ": verb scores");
    normalize_score_rows(seq.noun_scores, 1e-5, path + ": noun scores");
    validate_sequence(seq);
    return seq;
}

// ---------------------------------------------------------------------------
// Model checkpoint: magic "TADC", version, config header, parameter blocks as
// little-endian float64 in declaration order.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(const std::string& path, const ModelParams& params) {
    std::string buf;
    buf.reserve(40 + 8 * params.data.size());
    buf += "TADC";
    detail::append_u32(buf, kCheckpointVersion);
    const BmnConfig& c = params.cfg;
    for (int field : {c.window_len, c.max_duration, c.num_samples, c.feature_dim,
                      c.base_hidden, c.map_hidden, c.verb_classes, c.noun_classes}) {
        detail::append_u32(buf, static_cast<std::uint32_t>(field));
    }
    for (double v : params.data) {
        detail::append_f64(buf, v);
    }
    detail::write_file_bytes(path, buf);
}

inline ModelParams read_checkpoint(const std::string& path) {
    std::string bytes = detail::read_file_bytes(path);
    if (bytes.size() < 4 || bytes.compare(0, 4, "TADC") != 0) {
        throw std::runtime_error(path + ": bad magic at byte offset 0, expected \"TADC\"");
    }
    detail::ByteReader r(std::move(bytes), path);
    r.u32("magic");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) {
        throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
    }
    BmnConfig cfg;
    cfg.window_len = static_cast<int>(r.u32("window_len"));
    cfg.max_duration = static_cast<int>(r.u32("max_duration"));
    cfg.num_samples = static_cast<int>(r.u32("num_samples"));
    cfg.feature_dim = static_cast<int>(r.u32("feature_dim"));
    cfg.base_hidden = static_cast<int>(r.u32("base_hidden"));
    cfg.map_hidden = static_cast<int>(r.u32("map_hidden"));
    cfg.verb_classes = static_cast<int>(r.u32("verb_classes"));
    cfg.noun_classes = static_cast<int>(r.u32("noun_classes"));
    cfg.validate();
    const std::size_t expected = 40 + 8 * ModelParams::total_size(cfg);
    r.expect_exhausted(expected);
    ModelParams params = ModelParams::zeros(cfg);
    for (double& v : params.data) {
        v = r.f64("parameters");
    }
    return params;
}

// ---------------------------------------------------------------------------
// Structured text documents (JSON).
// ---------------------------------------------------------------------------

struct VideoAnnotation {
    GroundTruth gt;
    double duration_s = 0.0;
};

inline nlohmann::json annotation_to_json(const VideoAnnotation& a) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : a.gt.entries) {
        entries.push_back({{"start_s", e.segment.start_s},
                           {"end_s", e.segment.end_s},
                           {"verb_id", e.verb_id},
                           {"noun_id", e.noun_id}});
    }
    return {{"video_id", a.gt.video_id}, {"duration_s", a.duration_s}, {"entries", entries}};
}

inline VideoAnnotation annotation_from_json(const nlohmann::json& j) {
    VideoAnnotation a;
    a.gt.video_id = j.at("video_id").get<std::string>();
    a.duration_s = j.at("duration_s").get<double>();
    for (const auto& e : j.at("entries")) {
        GroundTruthEntry entry;
        entry.segment = Segment(e.at("start_s").get<double>(), e.at("end_s").get<double>());
        entry.verb_id = e.at("verb_id").get<int>();
        entry.noun_id = e.at("noun_id").get<int>();
        a.gt.entries.push_back(entry);
    }
    return a;
}

inline void write_annotations(const std::string& path, const std::vector<VideoAnnotation>& all) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& a : all) {
        j.push_back(annotation_to_json(a));
    }
    detail::write_file_bytes(path, j.dump(2) + "\n");
}

inline std::vector<VideoAnnotation> read_annotations(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    std::vector<VideoAnnotation> out;
    for (const auto& item : j) {
        out.push_back(annotation_from_json(item));
    }
    return out;
}

struct VideoDetections {
    std::string video_id;
    Task task = Task::Action;
    std::vector<Detection> entries;
};

inline void write_detections(const std::string& path, const std::vector<VideoDetections>& all) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& vd : all) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& d : vd.entries) {
            nlohmann::json e = {{"start_s", d.segment.start_s},
                                {"end_s", d.segment.end_s},
                                {"score", d.score}};
            if (vd.task != Task::Noun) {
                e["verb_id"] = d.verb_id;
            }
            if (vd.task != Task::Verb) {
                e["noun_id"] = d.noun_id;
            }
            entries.push_back(e);
        }
        j.push_back({{"video_id", vd.video_id},
                     {"task", task_name(vd.task)},
                     {"entries", entries}});
    }
    detail::write_file_bytes(path, j.dump(2) + "\n");
}

inline Task task_from_name(const std::string& name) {
    if (name == "verb") {
        return Task::Verb;
    }
    if (name == "noun") {
        return Task::Noun;
    }
    if (name == "action") {
        return Task::Action;
    }
    throw std::runtime_error("unknown task \"" + name + "\"");
}

inline std::vector<VideoDetections> read_detections(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    std::vector<VideoDetections> out;
    for (const auto& item : j) {
        VideoDetections vd;
        vd.video_id = item.at("video_id").get<std::string>();
        vd.task = task_from_name(item.at("task").get<std::string>());
        for (const auto& e : item.at("entries")) {
            Detection d;
            d.task = vd.task;
            d.segment = Segment(e.at("start_s").get<double>(), e.at("end_s").get<double>());
            d.score = e.at("score").get<double>();
            if (e.contains("verb_id")) {
                d.verb_id = e.at("verb_id").get<int>();
            }
            if (e.contains("noun_id")) {
                d.noun_id = e.at("noun_id").get<int>();
            }
            vd.entries.push_back(d);
        }
        out.push_back(std::move(vd));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset manifest: one feature file per video plus ids and durations.
// ---------------------------------------------------------------------------

struct ManifestVideo {
    std::string video_id;
    double duration_s = 0.0;
    int num_clips = 0;
    std::string feature_file;  // relative to the manifest directory
};

struct Manifest {
    TimeBase timebase;
    int feature_dim = 0;
    int verb_classes = 0;
    int noun_classes = 0;
    std::vector<ManifestVideo> videos;
};

inline void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::json videos = nlohmann::json::array();
    for (const auto& v : m.videos) {
        videos.push_back({{"video_id", v.video_id},
                          {"duration_s", v.duration_s},
                          {"num_clips", v.num_clips},
                          {"feature_file", v.feature_file}});
    }
    nlohmann::json j = {{"timebase",
                         {{"fps", m.timebase.fps},
                          {"clip_stride_frames", m.timebase.clip_stride_frames}}},
                        {"feature_dim", m.feature_dim},
                        {"verb_classes", m.verb_classes},
                        {"noun_classes", m.noun_classes},
                        {"videos", videos}};
    detail::write_file_bytes(path, j.dump(2) + "\n");
}

inline Manifest read_manifest(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    Manifest m;
    m.timebase.fps = j.at("timebase").at("fps").get<double>();
    m.timebase.clip_stride_frames = j.at("timebase").at("clip_stride_frames").get<int>();
    m.timebase.validate();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.verb_classes = j.at("verb_classes").get<int>();
    m.noun_classes = j.at("noun_classes").get<int>();
    for (const auto& v : j.at("videos")) {
        m.videos.push_back({v.at("video_id").get<std::string>(),
                            v.at("duration_s").get<double>(), v.at("num_clips").get<int>(),
                            v.at("feature_file").get<std::string>()});
    }
    return m;
}

// ---------------------------------------------------------------------------
// Evaluation report: machine-readable document plus a human-readable table.
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& report) {
    auto task_json = [](const TaskReport& t) {
        nlohmann::json per_class;
        for (const auto& [key, aps] : t.per_class_ap) {
            per_class[key] = aps;
        }
        return nlohmann::json{{"thresholds", t.thresholds},
                              {"map", t.map_at},
                              {"avg", t.avg},
                              {"per_class_ap", per_class}};
    };
    return {{"verb", task_json(report.verb)},
            {"noun", task_json(report.noun)},
            {"action", task_json(report.action)}};
}

inline void write_report(const std::string& path, const EvalReport& report) {
    detail::write_file_bytes(path, report_to_json(report).dump(2) + "\n");
}

inline std::string render_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << "Task    ";
    for (double t : report.verb.thresholds) {
        char cell[16];
        std::snprintf(cell, sizeof(cell), "  @%.1f", t);
        os << cell;
    }
    os << "    Avg\n";
    auto row = [&os](const char* name, const TaskReport& t) {
        os << name;
        for (double m : t.map_at) {
            char cell[16];
            std::snprintf(cell, sizeof(cell), " %6.2f", 100.0 * m);
            os << cell;
        }
        char avg[16];
        std::snprintf(avg, sizeof(avg), " %6.2f", 100.0 * t.avg);
        os << avg << "\n";
    };
    row("verb    ", report.verb);
    row("noun    ", report.noun);
    row("action  ", report.action);
    return os.str();
}

}  // namespace tadet
