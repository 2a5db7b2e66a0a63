// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/core.hpp"
#include "tadet/io.hpp"

namespace tadet {

/// Synthetic untrimmed-video generator. Videos average ~512 s; segment
/// durations follow a log-normal with ~98% of mass below 20 s, truncated
/// below the maximum proposal duration so every segment stays coverable.
struct SynthConfig {
    int num_videos = 50;
    double video_duration_mean_s = 512.0;
    double video_duration_jitter = 0.3;  // uniform in mean * (1 +/- jitter)
    int segments_per_video = 12;
    double seg_log_mean = 1.791759469228055;  // ln 6
    double seg_log_sigma = 0.586;
    double seg_min_s = 0.8;
    double seg_max_s = 26.0;
    double min_gap_s = 0.5;
    int feature_dim = 32;
    int verb_classes = 5;
    int noun_classes = 5;
    double motif_strength = 1.0;
    double feature_noise = 0.25;
    double score_temperature = 0.2;
    double val_fraction = 0.2;
    std::uint64_t seed = 7;

    void validate() const {
        if (num_videos < 1 || segments_per_video < 0) {
            throw std::invalid_argument("SynthConfig: bad video/segment counts");
        }
        if (!(video_duration_mean_s > 0.0) || !(video_duration_jitter >= 0.0) ||
            video_duration_jitter >= 1.0) {
            throw std::invalid_argument("SynthConfig: bad video duration distribution");
        }
        if (!(0.0 < seg_min_s && seg_min_s < seg_max_s)) {
            throw std::invalid_argument("SynthConfig: requires 0 < seg_min_s < seg_max_s");
        }
        if (feature_dim < 1 || verb_classes < 1 || noun_classes < 1) {
            throw std::invalid_argument("SynthConfig: bad dimension counts");
        }
        if (!(score_temperature >= 0.0) || !(feature_noise >= 0.0) ||
            !(motif_strength >= 0.0)) {
            throw std::invalid_argument("SynthConfig: noise knobs must be >= 0");
        }
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
            throw std::invalid_argument("SynthConfig: val_fraction must lie in [0, 1)");
        }
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Class motifs are fixed random unit vectors shared by every video of a run.
inline std::vector<double> class_motif(const SynthConfig& cfg, int verb_id, int noun_id) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(
        0x6d6f746966ULL + static_cast<std::uint64_t>(verb_id) * 1000003u + noun_id)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> m(cfg.feature_dim);
    double norm = 0.0;
    for (double& v : m) {
        v = gauss(rng);
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : m) {
        v /= norm > 0.0 ? norm : 1.0;
    }
    return m;
}

/// softmax((onehot + sqrt(tau) * a * eta) / tau): tau -> 0 collapses to the
/// exact one-hot of the active class, tau -> inf to the uniform row. The
/// tau = 0 limit is special-cased (background rows become uniform).
inline void fill_score_row(float* row, int k, int active, double tau, std::mt19937_64& rng) {
    constexpr double kNoiseScale = 0.4;
    std::normal_distribution<double> gauss(0.0, 1.0);
    if (tau == 0.0) {
        for (int i = 0; i < k; ++i) {
            row[i] = active >= 0 ? (i == active ? 1.0f : 0.0f)
                                 : static_cast<float>(1.0 / k);
        }
        // keep the draw count independent of tau so seeds stay comparable
        for (int i = 0; i < k; ++i) {
            gauss(rng);
        }
        return;
    }
    std::vector<double> logits(k);
    double max_logit = -1e300;
    const double noise = std::sqrt(tau) * kNoiseScale;
    for (int i = 0; i < k; ++i) {
        logits[i] = ((active == i ? 1.0 : 0.0) + noise * gauss(rng)) / tau;
        max_logit = std::max(max_logit, logits[i]);
    }
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        logits[i] = std::exp(logits[i] - max_logit);
        sum += logits[i];
    }
    for (int i = 0; i < k; ++i) {
        row[i] = static_cast<float>(logits[i] / sum);
    }
}

inline double sample_segment_duration(const SynthConfig& cfg, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(cfg.seg_log_mean, cfg.seg_log_sigma);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double d = std::exp(gauss(rng));
        if (d >= cfg.seg_min_s && d <= cfg.seg_max_s) {
            return d;
        }
    }
    throw std::runtime_error("synth: segment duration sampling failed to converge");
}

}  // namespace detail

/// One synthetic video: non-overlapping planted segments, class-motif
/// features over Gaussian background, and per-clip score rows peaked at the
/// active classes.
inline std::pair<ClipFeatureSequence, GroundTruth> generate_video(std::mt19937_64& rng,
                                                                  const SynthConfig& cfg,
                                                                  const TimeBase& tb,
                                                                  const std::string& video_id) {
    cfg.validate();
    tb.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double raw_duration =
        cfg.video_duration_mean_s *
        (1.0 - cfg.video_duration_jitter + 2.0 * cfg.video_duration_jitter * unit(rng));
    const double spc = tb.seconds_per_clip();
    const int num_clips = std::max(1, static_cast<int>(std::floor(raw_duration / spc)));
    const double duration = num_clips * spc;

    // Sample durations first, then distribute the slack into k+1 gaps.
    const int k = cfg.segments_per_video;
    std::vector<double> seg_durations(k);
    double total_seg = 0.0;
    for (double& d : seg_durations) {
        d = detail::sample_segment_duration(cfg, rng);
        total_seg += d;
    }
    const double free_time = duration - total_seg - (k + 1) * cfg.min_gap_s;
    if (free_time < 0.0) {
        throw std::invalid_argument(
            "generate_video: infeasible packing, " + std::to_string(k) + " segments (" +
            std::to_string(total_seg) + " s plus gaps) exceed video duration " +
            std::to_string(duration) + " s");
    }
    std::vector<double> gap_weights(k + 1);
    double weight_sum = 0.0;
    for (double& g : gap_weights) {
        g = unit(rng);
        weight_sum += g;
    }

    GroundTruth gt;
    gt.video_id = video_id;
    std::uniform_int_distribution<int> verb_dist(0, cfg.verb_classes - 1);
    std::uniform_int_distribution<int> noun_dist(0, cfg.noun_classes - 1);
    double cursor = 0.0;
    for (int i = 0; i < k; ++i) {
        cursor += cfg.min_gap_s + gap_weights[i] / weight_sum * free_time;
        const double start = cursor;
        cursor += seg_durations[i];
        GroundTruthEntry e;
        e.segment = Segment(start, cursor);
        e.verb_id = verb_dist(rng);
        e.noun_id = noun_dist(rng);
        gt.entries.push_back(e);
    }

    ClipFeatureSequence seq;
    seq.video_id = video_id;
    seq.timebase = tb;
    seq.features = MatF(num_clips, cfg.feature_dim);
    seq.verb_scores = MatF(num_clips, cfg.verb_classes);
    seq.noun_scores = MatF(num_clips, cfg.noun_classes);

    std::size_t next_seg = 0;
    for (int t = 0; t < num_clips; ++t) {
        const double center = (t + 0.5) * spc;
        while (next_seg < gt.entries.size() && gt.entries[next_seg].segment.end_s <= center) {
            ++next_seg;
        }
        const GroundTruthEntry* active = nullptr;
        if (next_seg < gt.entries.size() &&
            gt.entries[next_seg].segment.start_s <= center &&
            center < gt.entries[next_seg].segment.end_s) {
            active = &gt.entries[next_seg];
        }
        float* feat = seq.features.row(t);
        for (int c = 0; c < cfg.feature_dim; ++c) {
            feat[c] = static_cast<float>(cfg.feature_noise * gauss(rng));
        }
        if (active != nullptr && cfg.motif_strength > 0.0) {
            const std::vector<double> motif =
                detail::class_motif(cfg, active->verb_id, active->noun_id);
            for (int c = 0; c < cfg.feature_dim; ++c) {
                feat[c] += static_cast<float>(cfg.motif_strength * motif[c]);
            }
        }
        detail::fill_score_row(seq.verb_scores.row(t), cfg.verb_classes,
                               active != nullptr ? active->verb_id : -1,
                               cfg.score_temperature, rng);
        detail::fill_score_row(seq.noun_scores.row(t), cfg.noun_classes,
                               active != nullptr ? active->noun_id : -1,
                               cfg.score_temperature, rng);
    }
    return {std::move(seq), std::move(gt)};
}

struct SynthVideo {
    ClipFeatureSequence seq;
    GroundTruth gt;
};

struct SynthDataset {
    std::vector<SynthVideo> train;
    std::vector<SynthVideo> val;
};

/// Deterministic in-memory dataset: per-video RNGs are derived from
/// (seed, video index), the split is disjoint by video id.
inline SynthDataset generate_dataset_in_memory(const SynthConfig& cfg, const TimeBase& tb) {
    cfg.validate();
    const int num_val = static_cast<int>(cfg.num_videos * cfg.val_fraction);
    const int num_train = cfg.num_videos - num_val;
    if (num_train < 1 || num_val < 1) {
        throw std::invalid_argument(
            "generate_dataset: split is degenerate (" + std::to_string(num_train) +
            " train / " + std::to_string(num_val) + " val videos); adjust num_videos or "
            "val_fraction");
    }
    SynthDataset ds;
    for (int i = 0; i < cfg.num_videos; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "video_%04d", i);
        std::mt19937_64 rng(detail::splitmix64(cfg.seed) ^
                            detail::splitmix64(static_cast<std::uint64_t>(i) + 1));
        auto [seq, gt] = generate_video(rng, cfg, tb, id);
        if (i < num_train) {
            ds.train.push_back({std::move(seq), std::move(gt)});
        } else {
            ds.val.push_back({std::move(seq), std::move(gt)});
        }
    }
    return ds;
}

/// Writes one split: manifest.json, annotations.json and features/*.tadf.
inline void write_split(const std::string& dir, const std::vector<SynthVideo>& videos,
                        const SynthConfig& cfg, const TimeBase& tb) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "features");
    Manifest manifest;
    manifest.timebase = tb;
    manifest.feature_dim = cfg.feature_dim;
    manifest.verb_classes = cfg.verb_classes;
    manifest.noun_classes = cfg.noun_classes;
    std::vector<VideoAnnotation> annotations;
    for (const auto& v : videos) {
        const std::string rel = "features/" + v.seq.video_id + ".tadf";
        write_feature_file((fs::path(dir) / rel).string(), v.seq);
        manifest.videos.push_back(
            {v.seq.video_id, v.seq.duration_s(), v.seq.num_clips(), rel});
        annotations.push_back({v.gt, v.seq.duration_s()});
    }
    write_manifest((fs::path(dir) / "manifest.json").string(), manifest);
    write_annotations((fs::path(dir) / "annotations.json").string(), annotations);
}

/// Generates and writes train/ and val/ splits under `out_dir`.
inline SynthDataset generate_dataset(const SynthConfig& cfg, const TimeBase& tb,
                                     const std::string& out_dir) {
    SynthDataset ds = generate_dataset_in_memory(cfg, tb);
    namespace fs = std::filesystem;
    write_split((fs::path(out_dir) / "train").string(), ds.train, cfg, tb);
    write_split((fs::path(out_dir) / "val").string(), ds.val, cfg, tb);
    return ds;
}

}  // namespace tadet
