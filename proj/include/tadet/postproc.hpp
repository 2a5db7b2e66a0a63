// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tadet/bmn.hpp"
#include "tadet/core.hpp"
#include "tadet/windowing.hpp"

namespace tadet {

/// Candidate segment with a confidence score, in video-global seconds.
struct Proposal {
    Segment segment;
    double score = 0.0;
    int source_window = -1;
};

struct NmsConfig {
    double low_threshold = 0.25;
    double high_threshold = 0.9;
    double alpha = 0.4;
    int max_keep = 100;
    double duration_normalizer = 100.0 * 16.0 / 60.0;  // max proposal duration, seconds
    double score_floor = 1e-4;

    void validate() const {
        if (!(0.0 <= low_threshold && low_threshold <= high_threshold &&
              high_threshold <= 1.0)) {
            throw std::invalid_argument("NmsConfig: requires 0 <= t1 <= t2 <= 1");
        }
        if (!(alpha > 0.0)) {
            throw std::invalid_argument("NmsConfig: alpha must be > 0");
        }
        if (max_keep < 1 || !(duration_normalizer > 0.0)) {
            throw std::invalid_argument("NmsConfig: bad max_keep or duration normalizer");
        }
    }
};

/// Fuses the classification and regression maps into scored proposals for one
/// window. Scores are the cls * reg product; cells under the floor are
/// dropped; segments are clipped to the video end (candidates starting in
/// the padded tail beyond it are discarded).
inline std::vector<Proposal> score_candidates(const CandidateMap& cls,
                                              const CandidateMap& reg, const Window& w,
                                              const TimeBase& tb, double video_duration_s,
                                              int window_index = -1,
                                              double score_floor = 1e-4) {
    if (cls.max_duration != reg.max_duration || cls.window_len != reg.window_len) {
        throw std::invalid_argument("score_candidates: map shapes differ");
    }
    std::vector<Proposal> out;
    for (int d = 0; d < cls.max_duration; ++d) {
        for (int s = 0; s < cls.window_len; ++s) {
            if (!cls.is_valid(d, s)) {
                continue;
            }
            const double score = cls.at(d, s) * reg.at(d, s);
            if (score < score_floor) {
                continue;
            }
            Segment seg = localize(w, s, d + 1, tb);
            if (seg.start_s >= video_duration_s) {
                continue;
            }
            if (seg.end_s > video_duration_s) {
                seg = Segment(seg.start_s, video_duration_s);
            }
            out.push_back({seg, score, window_index});
        }
    }
    return out;
}

/// Video-level pooling: concatenation sorted by descending score. Duplicates
/// from overlapping windows are retained; Soft-NMS resolves them.
inline std::vector<Proposal> pool_windows(const std::vector<std::vector<Proposal>>& per_window) {
    std::vector<Proposal> out;
    for (const auto& props : per_window) {
        out.insert(out.end(), props.begin(), props.end());
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    return out;
}

/// Gaussian Soft-NMS with a length-adaptive trigger threshold. Repeatedly
/// selects the highest-scoring remaining proposal; every other remaining
/// proposal whose IoU with it exceeds
///   t1 + (t2 - t1) * (selected duration / normalizer)
/// has its score decayed by exp(-iou^2 / alpha). Selection stops after
/// max_keep picks; selected proposals keep their decayed scores.
inline std::vector<Proposal> soft_nms(std::vector<Proposal> props, const NmsConfig& cfg) {
    cfg.validate();
    for (const auto& p : props) {
        if (!(p.score >= 0.0 && p.score <= 1.0)) {
            throw std::invalid_argument("soft_nms: scores must lie in [0, 1]");
        }
    }
    std::vector<Proposal> kept;
    kept.reserve(std::min<std::size_t>(props.size(), cfg.max_keep));
    std::vector<char> taken(props.size(), 0);
    std::size_t remaining = props.size();
    while (remaining > 0 && kept.size() < static_cast<std::size_t>(cfg.max_keep)) {
        std::size_t best = props.size();
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (!taken[i] && (best == props.size() || props[i].score > props[best].score)) {
                best = i;
            }
        }
        const Proposal& sel = props[best];
        taken[best] = 1;
        --remaining;
        kept.push_back(sel);

        const double norm_dur =
            std::min(1.0, sel.segment.duration() / cfg.duration_normalizer);
        const double trigger =
            cfg.low_threshold + (cfg.high_threshold - cfg.low_threshold) * norm_dur;
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (taken[i]) {
                continue;
            }
            const double iou = segment_iou(sel.segment, props[i].segment);
            if (iou > trigger) {
                props[i].score *= std::exp(-(iou * iou) / cfg.alpha);
            }
        }
    }
    return kept;
}

}  // namespace tadet
