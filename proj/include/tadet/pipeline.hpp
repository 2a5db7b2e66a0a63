// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tadet/bmn.hpp"
#include "tadet/core.hpp"
#include "tadet/eval.hpp"
#include "tadet/fusion.hpp"
#include "tadet/io.hpp"
#include "tadet/optim.hpp"
#include "tadet/postproc.hpp"
#include "tadet/synth.hpp"
#include "tadet/windowing.hpp"

namespace tadet {

/// Layered configuration for the whole chain: defaults (paper values) merged
/// with an optional config file and command-line overrides. The BMN grid
/// shape is derived from the window section so the two can never contradict.
struct PipelineConfig {
    TimeBase timebase;
    WindowConfig window;
    BmnConfig bmn;
    TrainConfig train;
    NmsConfig nms;
    FusionConfig fusion;
    SynthConfig synth;

    void validate() const {
        timebase.validate();
        window.validate();
        bmn.validate();
        train.validate();
        nms.validate();
        if (bmn.window_len != window.window_len_clips ||
            bmn.max_duration != window.max_duration_clips) {
            throw std::invalid_argument("PipelineConfig: bmn grid does not match window plan");
        }
        if (synth.seg_max_s > window.max_duration_s(timebase)) {
            throw std::invalid_argument(
                "PipelineConfig: synth.seg_max_s " + std::to_string(synth.seg_max_s) +
                " exceeds the window coverage bound " +
                std::to_string(window.max_duration_s(timebase)));
        }
        if (fusion.sample_points < 1 || fusion.max_keep < 1) {
            throw std::invalid_argument("PipelineConfig: bad fusion settings");
        }
    }
};

namespace cfgio {

inline nlohmann::json to_json(const PipelineConfig& c) {
    return {
        {"timebase",
         {{"fps", c.timebase.fps}, {"clip_stride_frames", c.timebase.clip_stride_frames}}},
        {"window",
         {{"window_len_clips", c.window.window_len_clips},
          {"stride_clips", c.window.stride_clips},
          {"max_duration_clips", c.window.max_duration_clips}}},
        {"bmn",
         {{"num_samples", c.bmn.num_samples},
          {"feature_dim", c.bmn.feature_dim},
          {"base_hidden", c.bmn.base_hidden},
          {"map_hidden", c.bmn.map_hidden}}},
        {"train",
         {{"base_lr", c.train.base_lr},
          {"epochs", c.train.epochs},
          {"weight_decay", c.train.weight_decay},
          {"beta1", c.train.beta1},
          {"beta2", c.train.beta2},
          {"eps", c.train.eps},
          {"batch_windows", c.train.batch_windows},
          {"seed", c.train.seed},
          {"lambda", c.train.lambda}}},
        {"nms",
         {{"low_threshold", c.nms.low_threshold},
          {"high_threshold", c.nms.high_threshold},
          {"alpha", c.nms.alpha},
          {"max_keep", c.nms.max_keep},
          {"duration_normalizer", c.nms.duration_normalizer},
          {"score_floor", c.nms.score_floor}}},
        {"fusion",
         {{"sample_points", c.fusion.sample_points}, {"max_keep", c.fusion.max_keep}}},
        {"synth",
         {{"num_videos", c.synth.num_videos},
          {"video_duration_mean_s", c.synth.video_duration_mean_s},
          {"video_duration_jitter", c.synth.video_duration_jitter},
          {"segments_per_video", c.synth.segments_per_video},
          {"seg_log_mean", c.synth.seg_log_mean},
          {"seg_log_sigma", c.synth.seg_log_sigma},
          {"seg_min_s", c.synth.seg_min_s},
          {"seg_max_s", c.synth.seg_max_s},
          {"min_gap_s", c.synth.min_gap_s},
          {"feature_dim", c.synth.feature_dim},
          {"verb_classes", c.synth.verb_classes},
          {"noun_classes", c.synth.noun_classes},
          {"motif_strength", c.synth.motif_strength},
          {"feature_noise", c.synth.feature_noise},
          {"score_temperature", c.synth.score_temperature},
          {"val_fraction", c.synth.val_fraction},
          {"seed", c.synth.seed}}},
    };
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

inline void merge_json(PipelineConfig& c, const nlohmann::json& j) {
    if (j.contains("timebase")) {
        const auto& t = j.at("timebase");
        maybe(t, "fps", c.timebase.fps);
        maybe(t, "clip_stride_frames", c.timebase.clip_stride_frames);
    }
    if (j.contains("window")) {
        const auto& w = j.at("window");
        maybe(w, "window_len_clips", c.window.window_len_clips);
        maybe(w, "stride_clips", c.window.stride_clips);
        maybe(w, "max_duration_clips", c.window.max_duration_clips);
    }
    if (j.contains("bmn")) {
        const auto& b = j.at("bmn");
        maybe(b, "num_samples", c.bmn.num_samples);
        maybe(b, "feature_dim", c.bmn.feature_dim);
        maybe(b, "base_hidden", c.bmn.base_hidden);
        maybe(b, "map_hidden", c.bmn.map_hidden);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        maybe(t, "base_lr", c.train.base_lr);
        maybe(t, "epochs", c.train.epochs);
        maybe(t, "weight_decay", c.train.weight_decay);
        maybe(t, "beta1", c.train.beta1);
        maybe(t, "beta2", c.train.beta2);
        maybe(t, "eps", c.train.eps);
        maybe(t, "batch_windows", c.train.batch_windows);
        maybe(t, "seed", c.train.seed);
        maybe(t, "lambda", c.train.lambda);
    }
    if (j.contains("nms")) {
        const auto& n = j.at("nms");
        maybe(n, "low_threshold", c.nms.low_threshold);
        maybe(n, "high_threshold", c.nms.high_threshold);
        maybe(n, "alpha", c.nms.alpha);
        maybe(n, "max_keep", c.nms.max_keep);
        maybe(n, "duration_normalizer", c.nms.duration_normalizer);
        maybe(n, "score_floor", c.nms.score_floor);
    }
    if (j.contains("fusion")) {
        const auto& f = j.at("fusion");
        maybe(f, "sample_points", c.fusion.sample_points);
        maybe(f, "max_keep", c.fusion.max_keep);
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        maybe(s, "num_videos", c.synth.num_videos);
        maybe(s, "video_duration_mean_s", c.synth.video_duration_mean_s);
        maybe(s, "video_duration_jitter", c.synth.video_duration_jitter);
        maybe(s, "segments_per_video", c.synth.segments_per_video);
        maybe(s, "seg_log_mean", c.synth.seg_log_mean);
        maybe(s, "seg_log_sigma", c.synth.seg_log_sigma);
        maybe(s, "seg_min_s", c.synth.seg_min_s);
        maybe(s, "seg_max_s", c.synth.seg_max_s);
        maybe(s, "min_gap_s", c.synth.min_gap_s);
        maybe(s, "feature_dim", c.synth.feature_dim);
        maybe(s, "verb_classes", c.synth.verb_classes);
        maybe(s, "noun_classes", c.synth.noun_classes);
        maybe(s, "motif_strength", c.synth.motif_strength);
        maybe(s, "feature_noise", c.synth.feature_noise);
        maybe(s, "score_temperature", c.synth.score_temperature);
        maybe(s, "val_fraction", c.synth.val_fraction);
        maybe(s, "seed", c.synth.seed);
    }
}

/// "section.key=value" override; the value is parsed as JSON when possible,
/// as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override must look like section.key=value: " + spec);
    }
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception&) {
        parsed = value;
    }
    nlohmann::json* node = &j;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty()) {
            throw std::invalid_argument("bad override path: " + spec);
        }
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        begin = dot + 1;
    }
}

}  // namespace cfgio

/// Builds the effective config: defaults, then config file, then overrides.
inline PipelineConfig load_config(const std::optional<std::string>& config_path,
                                  const std::vector<std::string>& overrides) {
    PipelineConfig cfg;
    nlohmann::json j = cfgio::to_json(cfg);
    if (config_path) {
        nlohmann::json file_json;
        try {
            file_json = nlohmann::json::parse(detail::read_file_bytes(*config_path));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(*config_path + ": " + e.what());
        }
        j.merge_patch(file_json);
    }
    for (const auto& o : overrides) {
        cfgio::apply_override(j, o);
    }
    cfgio::merge_json(cfg, j);
    // The candidate grid always mirrors the window plan.
    cfg.bmn.window_len = cfg.window.window_len_clips;
    cfg.bmn.max_duration = cfg.window.max_duration_clips;
    cfg.bmn.verb_classes = cfg.synth.verb_classes;
    cfg.bmn.noun_classes = cfg.synth.noun_classes;
    cfg.validate();
    return cfg;
}

struct LoadedSplit {
    Manifest manifest;
    std::vector<ClipFeatureSequence> videos;
    std::vector<GroundTruth> gts;  // aligned with videos; empty when not loaded
};

inline LoadedSplit load_split(const std::string& dir, bool with_annotations) {
    namespace fs = std::filesystem;
    LoadedSplit split;
    split.manifest = read_manifest((fs::path(dir) / "manifest.json").string());
    for (const auto& v : split.manifest.videos) {
        ClipFeatureSequence seq = read_feature_file((fs::path(dir) / v.feature_file).string(),
                                                    split.manifest.timebase, v.video_id);
        if (seq.feature_dim() != split.manifest.feature_dim ||
            seq.verb_classes() != split.manifest.verb_classes ||
            seq.noun_classes() != split.manifest.noun_classes) {
            throw std::runtime_error(v.feature_file + ": dimensions disagree with manifest");
        }
        if (seq.num_clips() != v.num_clips) {
            throw std::runtime_error(v.feature_file + ": has " +
                                     std::to_string(seq.num_clips()) +
                                     " clips, manifest says " + std::to_string(v.num_clips));
        }
        split.videos.push_back(std::move(seq));
    }
    if (with_annotations) {
        auto annotations = read_annotations((fs::path(dir) / "annotations.json").string());
        for (const auto& v : split.manifest.videos) {
            const VideoAnnotation* found = nullptr;
            for (const auto& a : annotations) {
                if (a.gt.video_id == v.video_id) {
                    found = &a;
                    break;
                }
            }
            if (found == nullptr) {
                throw std::runtime_error("annotations.json: no entry for video " + v.video_id);
            }
            for (const auto& e : found->gt.entries) {
                if (e.verb_id < 0 || e.verb_id >= split.manifest.verb_classes ||
                    e.noun_id < 0 || e.noun_id >= split.manifest.noun_classes) {
                    throw std::runtime_error("annotations.json: class id out of range in " +
                                             v.video_id);
                }
                if (e.segment.end_s > found->duration_s + 1e-6) {
                    throw std::runtime_error("annotations.json: segment past video end in " +
                                             v.video_id);
                }
            }
            split.gts.push_back(found->gt);
        }
    }
    return split;
}

namespace detail {

inline MatF candidate_map_to_matf(const CandidateMap& m) {
    MatF out(m.max_duration, m.window_len);
    for (int d = 0; d < m.max_duration; ++d) {
        for (int s = 0; s < m.window_len; ++s) {
            out(d, s) = static_cast<float>(m.at(d, s));
        }
    }
    return out;
}

}  // namespace detail

/// Every planned window of every video becomes one training example;
/// background-only windows keep their all-zero gIoU maps as negatives.
inline std::vector<TrainExample> build_training_set(const LoadedSplit& split,
                                                    const PipelineConfig& cfg) {
    if (split.gts.size() != split.videos.size()) {
        throw std::invalid_argument("build_training_set: annotations missing");
    }
    std::vector<TrainExample> out;
    for (std::size_t vi = 0; vi < split.videos.size(); ++vi) {
        const auto& seq = split.videos[vi];
        for (const Window& w : plan_windows(seq.num_clips(), cfg.window)) {
            TrainExample ex;
            ex.features = slice_window(seq, w).features;
            ex.giou = detail::candidate_map_to_matf(
                compute_giou_map(w, split.gts[vi], cfg.bmn, cfg.timebase));
            out.push_back(std::move(ex));
        }
    }
    return out;
}

/// Sliding-window inference for one video: forward every window, fuse the
/// maps into proposals, pool, Soft-NMS, then attach classifications.
inline DetectionSet detect_video(const ModelParams& params, const SamplingWeights& sw,
                                 const ClipFeatureSequence& seq, const PipelineConfig& cfg) {
    std::vector<std::vector<Proposal>> per_window;
    const auto windows = plan_windows(seq.num_clips(), cfg.window);
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        const WindowSlice slice = slice_window(seq, windows[wi]);
        MatD features(slice.features.rows(), slice.features.cols());
        for (std::size_t i = 0; i < slice.features.size(); ++i) {
            features.data()[i] = slice.features.data()[i];
        }
        const ForwardResult maps = forward(params, features, sw);
        per_window.push_back(score_candidates(maps.cls, maps.reg, windows[wi], cfg.timebase,
                                              seq.duration_s(), static_cast<int>(wi),
                                              cfg.nms.score_floor));
    }
    const std::vector<Proposal> pooled = soft_nms(pool_windows(per_window), cfg.nms);
    return make_detections(pooled, seq, cfg.fusion);
}

// ---------------------------------------------------------------------------
// CLI-level drivers; each one backs a subcommand.
// ---------------------------------------------------------------------------

inline void run_gen_data(const PipelineConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    generate_dataset(cfg.synth, cfg.timebase, out_dir);
}

inline TrainResult run_train(const PipelineConfig& cfg, const std::string& data_dir,
                             const std::string& checkpoint_path,
                             const std::optional<std::string>& log_path = std::nullopt) {
    cfg.validate();
    LoadedSplit split = load_split(data_dir, /*with_annotations=*/true);
    BmnConfig bmn_cfg = cfg.bmn;
    bmn_cfg.feature_dim = split.manifest.feature_dim;
    bmn_cfg.verb_classes = split.manifest.verb_classes;
    bmn_cfg.noun_classes = split.manifest.noun_classes;

    PipelineConfig effective = cfg;
    effective.bmn = bmn_cfg;
    const std::vector<TrainExample> dataset = build_training_set(split, effective);
    const SamplingWeights sw = build_sampling_weights(bmn_cfg);

    std::ofstream log;
    TrainLogSink sink = nullptr;
    if (log_path) {
        log.open(*log_path, std::ios::trunc);
        if (!log) {
            throw std::runtime_error(*log_path + ": cannot open for writing");
        }
        sink = [&log](const TrainLogRecord& r) {
            nlohmann::json j = {
                {"epoch", r.epoch}, {"step", r.step}, {"lr", r.lr}, {"loss", r.loss}};
            log << j.dump() << "\n";
        };
    }
    TrainResult result = train(dataset, bmn_cfg, cfg.train, sw, sink);
    write_checkpoint(checkpoint_path, result.params);
    return result;
}

inline std::vector<VideoDetections> detections_as_docs(const std::string& video_id,
                                                       const DetectionSet& dets, Task task) {
    return {{video_id, task, dets.for_task(task)}};
}

inline void run_detect(const PipelineConfig& cfg, const std::string& checkpoint_path,
                       const std::string& data_dir, const std::string& out_dir) {
    cfg.validate();
    namespace fs = std::filesystem;
    const ModelParams params = read_checkpoint(checkpoint_path);
    LoadedSplit split = load_split(data_dir, /*with_annotations=*/false);
    if (params.cfg.feature_dim != split.manifest.feature_dim) {
        throw std::runtime_error("detect: checkpoint expects feature_dim " +
                                 std::to_string(params.cfg.feature_dim) +
                                 " but the manifest provides " +
                                 std::to_string(split.manifest.feature_dim));
    }
    if (params.cfg.window_len != cfg.window.window_len_clips ||
        params.cfg.max_duration != cfg.window.max_duration_clips) {
        throw std::runtime_error("detect: checkpoint grid " +
                                 std::to_string(params.cfg.window_len) + "x" +
                                 std::to_string(params.cfg.max_duration) +
                                 " does not match the configured window plan");
    }
    const SamplingWeights sw = build_sampling_weights(params.cfg);
    std::vector<VideoDetections> verb_docs;
    std::vector<VideoDetections> noun_docs;
    std::vector<VideoDetections> action_docs;
    for (const auto& seq : split.videos) {
        const DetectionSet dets = detect_video(params, sw, seq, cfg);
        verb_docs.push_back({seq.video_id, Task::Verb, dets.verb});
        noun_docs.push_back({seq.video_id, Task::Noun, dets.noun});
        action_docs.push_back({seq.video_id, Task::Action, dets.action});
    }
    fs::create_directories(out_dir);
    write_detections((fs::path(out_dir) / "detections_verb.json").string(), verb_docs);
    write_detections((fs::path(out_dir) / "detections_noun.json").string(), noun_docs);
    write_detections((fs::path(out_dir) / "detections_action.json").string(), action_docs);
}

inline std::vector<EvalDetection> docs_to_eval(const std::vector<VideoDetections>& docs) {
    std::vector<EvalDetection> out;
    for (const auto& vd : docs) {
        for (const auto& d : vd.entries) {
            out.push_back({vd.video_id, d});
        }
    }
    return out;
}

inline EvalReport run_eval(const PipelineConfig& cfg, const std::string& detections_dir,
                           const std::string& annotations_path,
                           const std::optional<std::string>& report_path = std::nullopt) {
    cfg.validate();
    namespace fs = std::filesystem;
    const auto verb_docs =
        read_detections((fs::path(detections_dir) / "detections_verb.json").string());
    const auto noun_docs =
        read_detections((fs::path(detections_dir) / "detections_noun.json").string());
    const auto action_docs =
        read_detections((fs::path(detections_dir) / "detections_action.json").string());
    const auto annotations = read_annotations(annotations_path);
    std::vector<GroundTruth> gts;
    for (const auto& a : annotations) {
        gts.push_back(a.gt);
    }
    const EvalReport report =
        evaluate(docs_to_eval(verb_docs), docs_to_eval(noun_docs), docs_to_eval(action_docs),
                 gts, cfg.synth.verb_classes, cfg.synth.noun_classes);
    if (report_path) {
        write_report(*report_path, report);
    }
    return report;
}

}  // namespace tadet
