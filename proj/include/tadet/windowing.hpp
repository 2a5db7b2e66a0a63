// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/core.hpp"
#include "tadet/mat.hpp"

namespace tadet {

/// Sliding-window plan over a clip sequence. Window starts sit on a uniform
/// stride grid; the tail window is zero-padded rather than back-aligned.
struct WindowConfig {
    int window_len_clips = 200;
    int stride_clips = 100;
    int max_duration_clips = 100;

    void validate() const {
        if (window_len_clips < 1 || stride_clips < 1 || max_duration_clips < 1) {
            throw std::invalid_argument("WindowConfig: all counts must be >= 1");
        }
        if (stride_clips > window_len_clips) {
            throw std::invalid_argument("WindowConfig: stride must not exceed window length");
        }
        if (max_duration_clips > stride_clips) {
            throw std::invalid_argument(
                "WindowConfig: max_duration_clips must not exceed stride_clips");
        }
        // stride + max duration <= window length is what makes every admissible
        // segment land fully inside some window.
        if (stride_clips + max_duration_clips > window_len_clips) {
            throw std::invalid_argument(
                "WindowConfig: stride_clips + max_duration_clips must not exceed "
                "window_len_clips");
        }
    }

    double max_duration_s(const TimeBase& tb) const {
        return max_duration_clips * tb.seconds_per_clip();
    }
};

struct Window {
    int start_clip = 0;
    int len_clips = 0;
    int pad_clips = 0;  // trailing zero-padded clips
};

inline std::vector<Window> plan_windows(int num_clips, const WindowConfig& cfg) {
    cfg.validate();
    if (num_clips < 1) {
        throw std::invalid_argument("plan_windows: num_clips must be >= 1");
    }
    std::vector<Window> out;
    for (int start = 0; start < num_clips; start += cfg.stride_clips) {
        Window w;
        w.start_clip = start;
        w.len_clips = cfg.window_len_clips;
        w.pad_clips = std::max(0, start + cfg.window_len_clips - num_clips);
        out.push_back(w);
    }
    return out;
}

/// Per-window feature/score slice. Padded feature rows are zero; padded score
/// rows are uniform so simplex invariants hold everywhere.
struct WindowSlice {
    MatF features;     // L x C
    MatF verb_scores;  // L x V
    MatF noun_scores;  // L x Nn
};

inline WindowSlice slice_window(const ClipFeatureSequence& seq, const Window& w) {
    const int n = seq.num_clips();
    if (w.start_clip < 0 || w.start_clip >= n || w.pad_clips < 0 ||
        w.pad_clips >= w.len_clips ||
        w.pad_clips != std::max(0, w.start_clip + w.len_clips - n)) {
        throw std::invalid_argument("slice_window: window inconsistent with sequence of " +
                                    std::to_string(n) + " clips");
    }
    WindowSlice s;
    s.features = MatF(w.len_clips, seq.feature_dim());
    s.verb_scores = MatF(w.len_clips, seq.verb_classes(), 1.0f / seq.verb_classes());
    s.noun_scores = MatF(w.len_clips, seq.noun_classes(), 1.0f / seq.noun_classes());
    const int copied = w.len_clips - w.pad_clips;
    for (int r = 0; r < copied; ++r) {
        const int src = w.start_clip + r;
        std::copy_n(seq.features.row(src), seq.feature_dim(), s.features.row(r));
        std::copy_n(seq.verb_scores.row(src), seq.verb_classes(), s.verb_scores.row(r));
        std::copy_n(seq.noun_scores.row(src), seq.noun_classes(), s.noun_scores.row(r));
    }
    return s;
}

/// Maps a window-local candidate (start clip, duration in clips) to a
/// video-global segment in seconds.
inline Segment localize(const Window& w, int start_idx, int duration_clips,
                        const TimeBase& tb) {
    if (start_idx < 0 || duration_clips < 1 ||
        start_idx + duration_clips > w.len_clips) {
        throw std::invalid_argument("localize: candidate exceeds window length");
    }
    return Segment(clip_to_seconds(w.start_clip + start_idx, tb),
                   clip_to_seconds(w.start_clip + start_idx + duration_clips, tb));
}

}  // namespace tadet
