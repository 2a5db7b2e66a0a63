// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/core.hpp"
#include "tadet/mat.hpp"
#include "tadet/postproc.hpp"

namespace tadet {

enum class Task { Verb, Noun, Action };

inline const char* task_name(Task t) {
    switch (t) {
        case Task::Verb: return "verb";
        case Task::Noun: return "noun";
        case Task::Action: return "action";
    }
    return "?";
}

/// A proposal fused with class labels. Action detections carry both ids;
/// verb/noun detections leave the other id at -1.
struct Detection {
    Segment segment;
    Task task = Task::Action;
    int verb_id = -1;
    int noun_id = -1;
    double score = 0.0;
};

struct DetectionSet {
    std::vector<Detection> verb;
    std::vector<Detection> noun;
    std::vector<Detection> action;

    const std::vector<Detection>& for_task(Task t) const {
        switch (t) {
            case Task::Verb: return verb;
            case Task::Noun: return noun;
            default: return action;
        }
    }
};

struct FusionConfig {
    int sample_points = 10;
    int max_keep = 100;
};

/// Means the stored per-clip score rows over `k_points` uniform sample times
/// placed at bin centers inside the proposal. Sample times clamp to the clip
/// range, so arbitrarily short proposals are well-defined.
inline std::vector<double> sample_class_scores(const MatF& clip_scores, const Proposal& p,
                                               const TimeBase& tb, int k_points = 10) {
    if (k_points < 1 || clip_scores.rows() < 1) {
        throw std::invalid_argument("sample_class_scores: need >= 1 sample and >= 1 clip");
    }
    const int n = clip_scores.rows();
    const int k_classes = clip_scores.cols();
    const double spc = tb.seconds_per_clip();
    std::vector<double> mean(k_classes, 0.0);
    for (int i = 0; i < k_points; ++i) {
        const double t = p.segment.start_s +
                         (i + 0.5) / k_points * (p.segment.end_s - p.segment.start_s);
        int idx = static_cast<int>(std::floor(t / spc));
        idx = std::clamp(idx, 0, n - 1);
        const float* row = clip_scores.row(idx);
        for (int c = 0; c < k_classes; ++c) {
            mean[c] += row[c];
        }
    }
    for (double& v : mean) {
        v /= k_points;
    }
    return mean;
}

namespace detail {

/// Ties break toward the lowest class index.
inline int argmax(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i) {
        if (v[i] > v[best]) {
            best = i;
        }
    }
    return best;
}

inline void keep_top(std::vector<Detection>& dets, int max_keep) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (dets.size() > static_cast<std::size_t>(max_keep)) {
        dets.resize(max_keep);
    }
}

}  // namespace detail

/// Attaches verb/noun/action labels to post-NMS proposals using the sampled
/// backbone score rows. Verb/noun tasks take the argmax class with score
/// p.score * max prob; the action task fuses both as a product.
inline DetectionSet make_detections(const std::vector<Proposal>& props,
                                    const ClipFeatureSequence& seq,
                                    const FusionConfig& cfg = {}) {
    DetectionSet out;
    for (const Proposal& p : props) {
        const std::vector<double> vbar =
            sample_class_scores(seq.verb_scores, p, seq.timebase, cfg.sample_points);
        const std::vector<double> nbar =
            sample_class_scores(seq.noun_scores, p, seq.timebase, cfg.sample_points);
        const int v = detail::argmax(vbar);
        const int n = detail::argmax(nbar);
        out.verb.push_back({p.segment, Task::Verb, v, -1, p.score * vbar[v]});
        out.noun.push_back({p.segment, Task::Noun, -1, n, p.score * nbar[n]});
        out.action.push_back({p.segment, Task::Action, v, n, p.score * vbar[v] * nbar[n]});
    }
    detail::keep_top(out.verb, cfg.max_keep);
    detail::keep_top(out.noun, cfg.max_keep);
    detail::keep_top(out.action, cfg.max_keep);
    return out;
}

}  // namespace tadet
