// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-only reference implementations, written independently of the library
// code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tadet/bm_sampling.hpp"
#include "tadet/bmn.hpp"
#include "tadet/core.hpp"
#include "tadet/optim.hpp"
#include "tadet/postproc.hpp"

namespace oracles {

/// Per-candidate interpolation loop recomputing sample positions from the
/// definition; never touches SamplingWeights. Output layout (D, L, N_s, C).
inline std::vector<double> naive_candidate_features(const tadet::BmnConfig& cfg,
                                                    const tadet::MatD& x) {
    const int len = cfg.window_len;
    const int ns = cfg.num_samples;
    const int c = x.cols();
    std::vector<double> out(
        static_cast<std::size_t>(cfg.max_duration) * len * ns * c, 0.0);
    for (int d = 0; d < cfg.max_duration; ++d) {
        for (int s = 0; s < len; ++s) {
            if (s + d + 1 > len) {
                continue;
            }
            for (int j = 0; j < ns; ++j) {
                const double p = s + static_cast<double>(j) * (d + 1) / (ns - 1);
                double* dst =
                    out.data() +
                    (((static_cast<std::size_t>(d) * len + s) * ns) + j) * c;
                const int lo = static_cast<int>(std::floor(p));
                const double frac = p - lo;
                if (lo >= len - 1) {
                    // at or beyond the last clip: full weight on clip L-1
                    for (int k = 0; k < c; ++k) {
                        dst[k] = x(len - 1, k);
                    }
                } else {
                    for (int k = 0; k < c; ++k) {
                        dst[k] = (1.0 - frac) * x(lo, k) + frac * x(lo + 1, k);
                    }
                }
            }
        }
    }
    return out;
}

/// Quadratic Soft-NMS reference: scans a plain score array, decays with the
/// Gaussian rule, repeats until max_keep picks.
inline std::vector<tadet::Proposal> soft_nms_reference(std::vector<tadet::Proposal> props,
                                                       const tadet::NmsConfig& cfg) {
    auto iou = [](const tadet::Segment& a, const tadet::Segment& b) {
        const double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
        if (inter <= 0.0) {
            return 0.0;
        }
        const double uni = (a.end_s - a.start_s) + (b.end_s - b.start_s) - inter;
        return inter / uni;
    };
    std::vector<tadet::Proposal> picked;
    std::vector<bool> used(props.size(), false);
    while (picked.size() < static_cast<std::size_t>(cfg.max_keep)) {
        int best = -1;
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (!used[i] && (best < 0 || props[i].score > props[best].score)) {
                best = static_cast<int>(i);
            }
        }
        if (best < 0) {
            break;
        }
        used[best] = true;
        picked.push_back(props[best]);
        const double width = props[best].segment.end_s - props[best].segment.start_s;
        double normalized = width / cfg.duration_normalizer;
        if (normalized > 1.0) {
            normalized = 1.0;
        }
        const double threshold =
            cfg.low_threshold + (cfg.high_threshold - cfg.low_threshold) * normalized;
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (used[i]) {
                continue;
            }
            const double ov = iou(props[best].segment, props[i].segment);
            if (ov > threshold) {
                props[i].score *= std::exp(-(ov * ov) / cfg.alpha);
            }
        }
    }
    return picked;
}

/// Plain Adam (no weight decay) for the AdamW == Adam comparison.
struct ReferenceAdam {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;

    explicit ReferenceAdam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::vector<double>& params, const std::vector<double>& grad, double lr,
              double beta1, double beta2, double eps) {
        ++t;
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mh = m[i] / (1.0 - std::pow(beta1, static_cast<double>(t)));
            const double vh = v[i] / (1.0 - std::pow(beta2, static_cast<double>(t)));
            params[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
    }
};

/// Central finite differences of the training loss w.r.t. every parameter.
inline std::vector<double> finite_difference_grad(const tadet::ModelParams& params,
                                                  const tadet::MatD& features,
                                                  const tadet::CandidateMap& giou,
                                                  double lambda,
                                                  const tadet::SamplingWeights& sw,
                                                  double step = 1e-5) {
    std::vector<double> fd(params.data.size());
    tadet::ModelParams probe = params;
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + step;
        const double up = tadet::loss_and_grad(probe, features, giou, lambda, sw).loss;
        probe.data[i] = saved - step;
        const double down = tadet::loss_and_grad(probe, features, giou, lambda, sw).loss;
        probe.data[i] = saved;
        fd[i] = (up - down) / (2.0 * step);
    }
    return fd;
}

/// Exhaustive detection evaluator: per class and video, greedy matching over
/// score-sorted detections, discrete AP, classes with gt instances averaged.
struct RefDetection {
    std::string video_id;
    std::string class_key;
    tadet::Segment segment;
    double score;
};

struct RefGroundTruth {
    std::string video_id;
    std::string class_key;
    tadet::Segment segment;
};

inline double reference_map(const std::vector<RefDetection>& dets,
                            const std::vector<RefGroundTruth>& gts, double tiou) {
    std::map<std::string, std::vector<const RefGroundTruth*>> gt_by_class;
    for (const auto& g : gts) {
        gt_by_class[g.class_key].push_back(&g);
    }
    double ap_sum = 0.0;
    for (const auto& [cls, cls_gts] : gt_by_class) {
        std::vector<const RefDetection*> cls_dets;
        for (const auto& d : dets) {
            if (d.class_key == cls) {
                cls_dets.push_back(&d);
            }
        }
        std::stable_sort(cls_dets.begin(), cls_dets.end(),
                         [](const RefDetection* a, const RefDetection* b) {
                             return a->score > b->score;
                         });
        std::vector<bool> gt_used(cls_gts.size(), false);
        std::size_t tp = 0;
        double ap = 0.0;
        for (std::size_t rank = 0; rank < cls_dets.size(); ++rank) {
            double best_iou = 0.0;
            std::size_t best = cls_gts.size();
            for (std::size_t g = 0; g < cls_gts.size(); ++g) {
                if (gt_used[g] || cls_gts[g]->video_id != cls_dets[rank]->video_id) {
                    continue;
                }
                const double ov = tadet::segment_iou(cls_dets[rank]->segment,
                                                     cls_gts[g]->segment);
                if (ov > best_iou) {
                    best_iou = ov;
                    best = g;
                }
            }
            if (best < cls_gts.size() && best_iou >= tiou) {
                gt_used[best] = true;
                ++tp;
                ap += static_cast<double>(tp) / static_cast<double>(rank + 1);
            }
        }
        ap_sum += ap / static_cast<double>(cls_gts.size());
    }
    return gt_by_class.empty() ? 0.0 : ap_sum / static_cast<double>(gt_by_class.size());
}

}  // namespace oracles
