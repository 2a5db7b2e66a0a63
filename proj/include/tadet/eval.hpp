// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/core.hpp"
#include "tadet/fusion.hpp"

namespace tadet {

/// One detection tagged with its video, ready for evaluation.
struct EvalDetection {
    std::string video_id;
    Detection det;
};

inline const std::vector<double>& default_tiou_thresholds() {
    static const std::vector<double> t = {0.1, 0.2, 0.3, 0.4, 0.5};
    return t;
}

/// Greedy score-order matching for one (video, class) group: a detection is a
/// TP if its best-IoU unmatched ground truth reaches the threshold, FP
/// otherwise; each ground truth matches at most once.
inline std::vector<bool> match_detections(const std::vector<Segment>& dets_by_score,
                                          const std::vector<Segment>& gts, double tiou) {
    std::vector<bool> flags(dets_by_score.size(), false);
    std::vector<char> matched(gts.size(), 0);
    for (std::size_t i = 0; i < dets_by_score.size(); ++i) {
        double best_iou = 0.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (matched[g]) {
                continue;
            }
            const double iou = segment_iou(dets_by_score[i], gts[g]);
            if (iou > best_iou) {
                best_iou = iou;
                best_gt = g;
            }
        }
        if (best_gt < gts.size() && best_iou >= tiou) {
            flags[i] = true;
            matched[best_gt] = 1;
        }
    }
    return flags;
}

/// Interpolation-free discrete AP: sum of precision at each TP hit / num_gt.
inline double average_precision(const std::vector<bool>& flags, std::size_t num_gt) {
    if (num_gt == 0) {
        return 0.0;
    }
    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) {
            ++tp;
            ap += static_cast<double>(tp) / static_cast<double>(i + 1);
        }
    }
    return ap / static_cast<double>(num_gt);
}

struct TaskReport {
    std::vector<double> thresholds;
    std::vector<double> map_at;  // mAP per threshold
    double avg = 0.0;            // mean over thresholds
    // AP per (class key, threshold index); key is "v<id>", "n<id>" or "v<id>_n<id>".
    std::map<std::string, std::vector<double>> per_class_ap;
};

struct EvalReport {
    TaskReport verb;
    TaskReport noun;
    TaskReport action;

    const TaskReport& for_task(Task t) const {
        switch (t) {
            case Task::Verb: return verb;
            case Task::Noun: return noun;
            default: return action;
        }
    }
};

namespace detail {

struct ClassDetection {
    std::string video_id;
    double score;
    Segment segment;
};

struct ClassInstances {
    std::vector<ClassDetection> dets;  // input order preserved
    std::map<std::string, std::vector<Segment>> gts;
    std::size_t num_gt = 0;
};

inline std::string class_key(Task task, int verb_id, int noun_id) {
    switch (task) {
        case Task::Verb: return "v" + std::to_string(verb_id);
        case Task::Noun: return "n" + std::to_string(noun_id);
        default: return "v" + std::to_string(verb_id) + "_n" + std::to_string(noun_id);
    }
}

/// AP for one class over the whole dataset: detections sorted by descending
/// score globally (ties stay in input order), matched per video.
inline double class_ap(const ClassInstances& cls, double tiou) {
    std::vector<std::size_t> order(cls.dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cls.dets[a].score > cls.dets[b].score;
    });

    std::map<std::string, std::vector<char>> matched;
    for (const auto& [video, gts] : cls.gts) {
        matched[video].assign(gts.size(), 0);
    }
    std::vector<bool> flags(order.size(), false);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const ClassDetection& det = cls.dets[order[i]];
        const auto git = cls.gts.find(det.video_id);
        if (git == cls.gts.end()) {
            continue;  // FP: no gt of this class in the video
        }
        const auto& gts = git->second;
        auto& taken = matched[det.video_id];
        double best_iou = 0.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) {
                continue;
            }
            const double iou = segment_iou(det.segment, gts[g]);
            if (iou > best_iou) {
                best_iou = iou;
                best_gt = g;
            }
        }
        if (best_gt < gts.size() && best_iou >= tiou) {
            flags[i] = true;
            taken[best_gt] = 1;
        }
    }
    return average_precision(flags, cls.num_gt);
}

inline TaskReport evaluate_task(Task task, const std::vector<EvalDetection>& dets,
                                const std::vector<GroundTruth>& gts,
                                const std::vector<double>& thresholds, int verb_classes,
                                int noun_classes) {
    std::map<std::string, ClassInstances> classes;
    for (const auto& gt : gts) {
        for (const auto& e : gt.entries) {
            if (e.verb_id < 0 || e.verb_id >= verb_classes || e.noun_id < 0 ||
                e.noun_id >= noun_classes) {
                throw std::invalid_argument("evaluate: ground-truth class id out of range in " +
                                            gt.video_id);
            }
            auto& cls = classes[class_key(task, e.verb_id, e.noun_id)];
            cls.gts[gt.video_id].push_back(e.segment);
            ++cls.num_gt;
        }
    }
    for (const auto& ed : dets) {
        const Detection& d = ed.det;
        const bool needs_verb = task != Task::Noun;
        const bool needs_noun = task != Task::Verb;
        if ((needs_verb && (d.verb_id < 0 || d.verb_id >= verb_classes)) ||
            (needs_noun && (d.noun_id < 0 || d.noun_id >= noun_classes))) {
            throw std::invalid_argument("evaluate: detection class id out of range in " +
                                        ed.video_id);
        }
        const std::string key = class_key(task, d.verb_id, d.noun_id);
        auto it = classes.find(key);
        if (it == classes.end()) {
            continue;  // class with zero gt instances: excluded from the mean
        }
        it->second.dets.push_back({ed.video_id, d.score, d.segment});
    }

    TaskReport report;
    report.thresholds = thresholds;
    report.map_at.assign(thresholds.size(), 0.0);
    for (auto& [key, cls] : classes) {
        auto& aps = report.per_class_ap[key];
        aps.resize(thresholds.size());
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            aps[ti] = class_ap(cls, thresholds[ti]);
            report.map_at[ti] += aps[ti];
        }
    }
    if (!classes.empty()) {
        for (double& m : report.map_at) {
            m /= static_cast<double>(classes.size());
        }
    }
    for (double m : report.map_at) {
        report.avg += m;
    }
    report.avg /= static_cast<double>(thresholds.size());
    return report;
}

}  // namespace detail

/// Detection evaluation matching the verb/noun/action protocol: per task and
/// threshold, mAP over classes with at least one gt instance; Avg is the mean
/// over thresholds. Action classes are (verb, noun) pairs.
inline EvalReport evaluate(const std::vector<EvalDetection>& verb_dets,
                           const std::vector<EvalDetection>& noun_dets,
                           const std::vector<EvalDetection>& action_dets,
                           const std::vector<GroundTruth>& gts, int verb_classes,
                           int noun_classes,
                           const std::vector<double>& thresholds = default_tiou_thresholds()) {
    if (thresholds.empty()) {
        throw std::invalid_argument("evaluate: need at least one threshold");
    }
    EvalReport report;
    report.verb = detail::evaluate_task(Task::Verb, verb_dets, gts, thresholds, verb_classes,
                                        noun_classes);
    report.noun = detail::evaluate_task(Task::Noun, noun_dets, gts, thresholds, verb_classes,
                                        noun_classes);
    report.action = detail::evaluate_task(Task::Action, action_dets, gts, thresholds,
                                          verb_classes, noun_classes);
    return report;
}

}  // namespace tadet
