// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/mat.hpp"

namespace tadet {

/// Conversion between clip indices and video seconds. A clip is a fixed
/// stride of frames; its timestamp is the start of its first frame.
struct TimeBase {
    double fps = 60.0;
    int clip_stride_frames = 16;

    double seconds_per_clip() const { return clip_stride_frames / fps; }

    void validate() const {
        if (!(fps > 0.0)) {
            throw std::invalid_argument("TimeBase: fps must be > 0");
        }
        if (clip_stride_frames < 1) {
            throw std::invalid_argument("TimeBase: clip_stride_frames must be >= 1");
        }
    }
};

inline double clip_to_seconds(int clip_index, const TimeBase& tb) {
    if (clip_index < 0) {
        throw std::invalid_argument("clip_to_seconds: clip index must be >= 0");
    }
    return clip_index * static_cast<double>(tb.clip_stride_frames) / tb.fps;
}

/// Clips that fit entirely into a frame count; a trailing partial clip is dropped.
inline int num_clips_for_frames(long frames, const TimeBase& tb) {
    if (frames < 0) {
        throw std::invalid_argument("num_clips_for_frames: negative frame count");
    }
    return static_cast<int>(frames / tb.clip_stride_frames);
}

/// Half-open time interval in video seconds with strictly positive duration.
struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;

    Segment() = default;
    Segment(double start, double end) : start_s(start), end_s(end) {
        if (!(start_s >= 0.0) || !(end_s > start_s)) {
            throw std::invalid_argument("Segment: requires 0 <= start < end, got [" +
                                        std::to_string(start) + ", " + std::to_string(end) + ")");
        }
    }

    double duration() const { return end_s - start_s; }
};

/// Temporal intersection-over-union; 0 for disjoint (or merely touching) segments.
inline double segment_iou(const Segment& a, const Segment& b) {
    const double inter =
        std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.duration() + b.duration() - inter;
    return inter / uni;
}

struct GroundTruthEntry {
    Segment segment;
    int verb_id = 0;
    int noun_id = 0;
};

struct GroundTruth {
    std::string video_id;
    std::vector<GroundTruthEntry> entries;
};

/// One untrimmed video after feature extraction: N clip feature vectors plus
/// the per-clip verb/noun score rows saved alongside them.
struct ClipFeatureSequence {
    std::string video_id;
    MatF features;     // N x C
    MatF verb_scores;  // N x V, rows on the simplex
    MatF noun_scores;  // N x Nn, rows on the simplex
    TimeBase timebase;

    int num_clips() const { return features.rows(); }
    int feature_dim() const { return features.cols(); }
    int verb_classes() const { return verb_scores.cols(); }
    int noun_classes() const { return noun_scores.cols(); }
    double duration_s() const { return num_clips() * timebase.seconds_per_clip(); }
};

/// Checks every row is non-negative and sums to 1 within `tol`, then
/// renormalizes exactly. External score files may carry rounding error.
inline void normalize_score_rows(MatF& scores, double tol = 1e-5,
                                 const std::string& what = "score matrix") {
    for (int r = 0; r < scores.rows(); ++r) {
        double sum = 0.0;
        for (int c = 0; c < scores.cols(); ++c) {
            const float v = scores(r, c);
            if (!(v >= 0.0f)) {
                throw std::invalid_argument(what + ": negative entry at row " +
                                            std::to_string(r));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) {
            throw std::invalid_argument(what + ": row " + std::to_string(r) +
                                        " sums to " + std::to_string(sum) +
                                        ", expected 1 within " + std::to_string(tol));
        }
        for (int c = 0; c < scores.cols(); ++c) {
            scores(r, c) = static_cast<float>(scores(r, c) / sum);
        }
    }
}

inline void validate_sequence(const ClipFeatureSequence& seq) {
    seq.timebase.validate();
    if (seq.num_clips() < 1 || seq.feature_dim() < 1) {
        throw std::invalid_argument("ClipFeatureSequence: needs at least 1 clip and 1 feature");
    }
    if (seq.verb_scores.rows() != seq.num_clips() || seq.noun_scores.rows() != seq.num_clips()) {
        throw std::invalid_argument("ClipFeatureSequence: score row count != clip count");
    }
}

}  // namespace tadet
