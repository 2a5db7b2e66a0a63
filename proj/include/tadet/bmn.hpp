// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/bm_sampling.hpp"
#include "tadet/core.hpp"
#include "tadet/mat.hpp"
#include "tadet/windowing.hpp"

namespace tadet {

/// D x L map over candidates (duration index d = duration-1, start s).
/// Invalid cells (s + d + 1 > L) carry 0 and are never read as scores.
struct CandidateMap {
    int max_duration = 0;
    int window_len = 0;
    MatD values;
    std::vector<std::uint8_t> valid;

    CandidateMap() = default;
    CandidateMap(int d_max, int len)
        : max_duration(d_max), window_len(len), values(d_max, len),
          valid(static_cast<std::size_t>(d_max) * len, 0) {
        for (int d = 0; d < d_max; ++d) {
            for (int s = 0; s < len; ++s) {
                if (s + d + 1 <= len) {
                    valid[static_cast<std::size_t>(d) * len + s] = 1;
                }
            }
        }
    }

    bool is_valid(int d, int s) const {
        return valid[static_cast<std::size_t>(d) * window_len + s] != 0;
    }
    double at(int d, int s) const { return values(d, s); }
    double& at(int d, int s) { return values(d, s); }
};

struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// All trainable weights of the desk-scale PEM, stored flat in declaration
/// order: two temporal convolutions (width 3), one 3x3 map convolution over
/// the (d, s) grid, and the two 1x1 logistic heads.
struct ModelParams {
    BmnConfig cfg;
    std::vector<double> data;

    static std::vector<ParamBlock> layout(const BmnConfig& cfg) {
        const std::size_t c = cfg.feature_dim;
        const std::size_t h1 = cfg.base_hidden;
        const std::size_t h2 = cfg.map_hidden;
        std::vector<ParamBlock> blocks = {
            {"conv1_w", 0, h1 * c * 3}, {"conv1_b", 0, h1},
            {"conv2_w", 0, h1 * h1 * 3}, {"conv2_b", 0, h1},
            {"map_w", 0, h2 * h1 * 9},  {"map_b", 0, h2},
            {"cls_w", 0, h2},           {"cls_b", 0, 1},
            {"reg_w", 0, h2},           {"reg_b", 0, 1},
        };
        std::size_t offset = 0;
        for (auto& b : blocks) {
            b.offset = offset;
            offset += b.size;
        }
        return blocks;
    }

    static std::size_t total_size(const BmnConfig& cfg) {
        const auto blocks = layout(cfg);
        return blocks.back().offset + blocks.back().size;
    }

    static ModelParams zeros(const BmnConfig& cfg) {
        cfg.validate();
        ModelParams p;
        p.cfg = cfg;
        p.data.assign(total_size(cfg), 0.0);
        return p;
    }

    /// Fan-in-scaled centered uniform init for weights, zero biases.
    static ModelParams random_init(const BmnConfig& cfg, std::uint64_t seed) {
        ModelParams p = zeros(cfg);
        std::mt19937_64 rng(seed);
        auto fill = [&](const char* name, double fan_in) {
            const double a = 1.0 / std::sqrt(fan_in);
            std::uniform_real_distribution<double> dist(-a, a);
            const ParamBlock b = p.block(name);
            for (std::size_t i = 0; i < b.size; ++i) {
                p.data[b.offset + i] = dist(rng);
            }
        };
        fill("conv1_w", cfg.feature_dim * 3.0);
        fill("conv2_w", cfg.base_hidden * 3.0);
        fill("map_w", cfg.base_hidden * 9.0);
        fill("cls_w", cfg.map_hidden);
        fill("reg_w", cfg.map_hidden);
        return p;
    }

    std::vector<ParamBlock> blocks() const { return layout(cfg); }

    ParamBlock block(const std::string& name) const {
        for (const auto& b : layout(cfg)) {
            if (b.name == name) {
                return b;
            }
        }
        throw std::invalid_argument("ModelParams: no block named " + name);
    }

    const double* ptr(const std::string& name) const { return data.data() + block(name).offset; }
    double* ptr(const std::string& name) { return data.data() + block(name).offset; }
};

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

/// Intermediates of one forward pass, retained for backprop.
struct ForwardCache {
    MatD x;    // L x C input
    MatD h1;   // L x H1 after conv1 + tanh
    MatD h2;   // L x H1 after conv2 + tanh
    std::vector<double> feat;  // (D, L, N_s, H1) candidate sample features
    std::vector<double> g;     // (D, L, H1) sample-axis mean
    std::vector<double> hm;    // (D, L, H2) after map conv + tanh
    CandidateMap cls;
    CandidateMap reg;
};

/// Temporal convolution, kernel width 3, zero padding, tanh.
inline void temporal_conv_tanh(const MatD& in, const double* w, const double* b,
                               int out_ch, MatD& out) {
    const int len = in.rows();
    const int in_ch = in.cols();
    out = MatD(len, out_ch);
    for (int t = 0; t < len; ++t) {
        for (int o = 0; o < out_ch; ++o) {
            double acc = b[o];
            for (int k = 0; k < 3; ++k) {
                const int src = t + k - 1;
                if (src < 0 || src >= len) {
                    continue;
                }
                const double* row = in.row(src);
                const double* wk = w + (static_cast<std::size_t>(o) * in_ch + 0) * 3 + k;
                for (int i = 0; i < in_ch; ++i) {
                    acc += wk[static_cast<std::size_t>(i) * 3] * row[i];
                }
            }
            out(t, o) = std::tanh(acc);
        }
    }
}

inline void run_forward(const ModelParams& params, const MatD& features,
                        const SamplingWeights& sw, ForwardCache& cache,
                        bool keep_sample_features = false) {
    const BmnConfig& cfg = params.cfg;
    if (features.rows() != cfg.window_len || features.cols() != cfg.feature_dim) {
        throw std::invalid_argument(
            "forward: expected " + std::to_string(cfg.window_len) + " x " +
            std::to_string(cfg.feature_dim) + " features, got " +
            std::to_string(features.rows()) + " x " + std::to_string(features.cols()));
    }
    if (sw.window_len != cfg.window_len || sw.max_duration != cfg.max_duration ||
        sw.num_samples != cfg.num_samples) {
        throw std::invalid_argument("forward: sampling weights do not match config");
    }
    const int len = cfg.window_len;
    const int d_max = cfg.max_duration;
    const int h1 = cfg.base_hidden;
    const int h2 = cfg.map_hidden;

    cache.x = features;
    temporal_conv_tanh(cache.x, params.ptr("conv1_w"), params.ptr("conv1_b"), h1, cache.h1);
    temporal_conv_tanh(cache.h1, params.ptr("conv2_w"), params.ptr("conv2_b"), h1, cache.h2);

    if (keep_sample_features) {
        cache.feat = contract(sw, cache.h2);
    } else {
        cache.feat.clear();
    }
    cache.g = contract_mean(sw, cache.h2);

    // 3x3 convolution over the (d, s) grid; cells outside the grid and
    // invalid candidates both read as zero.
    cache.hm.assign(static_cast<std::size_t>(d_max) * len * h2, 0.0);
    const double* mw = params.ptr("map_w");
    const double* mb = params.ptr("map_b");
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            double* dst = cache.hm.data() + (static_cast<std::size_t>(d) * len + s) * h2;
            for (int o = 0; o < h2; ++o) {
                double acc = mb[o];
                for (int u = 0; u < 3; ++u) {
                    const int dd = d + u - 1;
                    if (dd < 0 || dd >= d_max) {
                        continue;
                    }
                    for (int v = 0; v < 3; ++v) {
                        const int ss = s + v - 1;
                        if (ss < 0 || ss >= len) {
                            continue;
                        }
                        const double* gsrc =
                            cache.g.data() + (static_cast<std::size_t>(dd) * len + ss) * h1;
                        const double* wk =
                            mw + ((static_cast<std::size_t>(o) * h1) * 9) + u * 3 + v;
                        for (int i = 0; i < h1; ++i) {
                            acc += wk[static_cast<std::size_t>(i) * 9] * gsrc[i];
                        }
                    }
                }
                dst[o] = std::tanh(acc);
            }
        }
    }

    cache.cls = CandidateMap(d_max, len);
    cache.reg = CandidateMap(d_max, len);
    const double* cw = params.ptr("cls_w");
    const double* rw = params.ptr("reg_w");
    const double cb = *params.ptr("cls_b");
    const double rb = *params.ptr("reg_b");
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            if (!cache.cls.is_valid(d, s)) {
                continue;
            }
            const double* m = cache.hm.data() + (static_cast<std::size_t>(d) * len + s) * h2;
            double zc = cb;
            double zr = rb;
            for (int o = 0; o < h2; ++o) {
                zc += cw[o] * m[o];
                zr += rw[o] * m[o];
            }
            cache.cls.at(d, s) = logistic(zc);
            cache.reg.at(d, s) = logistic(zr);
        }
    }
}

}  // namespace detail

struct ForwardResult {
    CandidateMap cls;
    CandidateMap reg;
};

inline ForwardResult forward(const ModelParams& params, const MatD& features,
                             const SamplingWeights& sw) {
    detail::ForwardCache cache;
    detail::run_forward(params, features, sw, cache);
    return {std::move(cache.cls), std::move(cache.reg)};
}

/// Per-candidate max temporal IoU against ground truth, the regression target.
inline CandidateMap compute_giou_map(const Window& w, const GroundTruth& gts,
                                     const BmnConfig& cfg, const TimeBase& tb) {
    CandidateMap map(cfg.max_duration, cfg.window_len);
    const double spc = tb.seconds_per_clip();
    const double win_start = clip_to_seconds(w.start_clip, tb);
    const double win_end = win_start + w.len_clips * spc;
    std::vector<const GroundTruthEntry*> overlapping;
    for (const auto& e : gts.entries) {
        if (e.segment.end_s > win_start && e.segment.start_s < win_end) {
            overlapping.push_back(&e);
        }
    }
    if (overlapping.empty()) {
        return map;
    }
    for (int d = 0; d < cfg.max_duration; ++d) {
        for (int s = 0; s < cfg.window_len; ++s) {
            if (!map.is_valid(d, s)) {
                continue;
            }
            const Segment cand(win_start + s * spc, win_start + (s + d + 1) * spc);
            double best = 0.0;
            for (const auto* e : overlapping) {
                best = std::max(best, segment_iou(cand, e->segment));
            }
            map.at(d, s) = best;
        }
    }
    return map;
}

struct LossGrad {
    double loss = 0.0;
    double reg_loss = 0.0;
    double cls_loss = 0.0;
    std::vector<double> grad;  // flat, same layout as ModelParams::data
};

/// loss = L_reg + lambda * L_cls over valid cells. L_reg is the mean squared
/// error against the gIoU map; L_cls is balanced binary cross-entropy with
/// positives giou > 0.9, negatives giou < 0.3, classes reweighted to equal
/// total mass. Gradients are exact analytic derivatives for every block.
inline LossGrad loss_and_grad(const ModelParams& params, const MatD& features,
                              const CandidateMap& giou, double lambda,
                              const SamplingWeights& sw, double pos_threshold = 0.9,
                              double neg_threshold = 0.3) {
    const BmnConfig& cfg = params.cfg;
    if (giou.max_duration != cfg.max_duration || giou.window_len != cfg.window_len) {
        throw std::invalid_argument("loss_and_grad: giou map shape mismatch");
    }
    detail::ForwardCache fc;
    detail::run_forward(params, features, sw, fc);

    const int len = cfg.window_len;
    const int d_max = cfg.max_duration;
    const int h1 = cfg.base_hidden;
    const int h2 = cfg.map_hidden;

    std::size_t n_valid = 0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            if (!giou.is_valid(d, s)) {
                continue;
            }
            ++n_valid;
            const double y = giou.at(d, s);
            if (y > pos_threshold) {
                ++n_pos;
            } else if (y < neg_threshold) {
                ++n_neg;
            }
        }
    }
    const double coef_pos =
        n_pos > 0 ? 0.5 * static_cast<double>(n_pos + n_neg) / n_pos : 0.0;
    const double coef_neg =
        n_neg > 0 ? 0.5 * static_cast<double>(n_pos + n_neg) / n_neg : 0.0;
    const double cls_norm = n_pos + n_neg > 0 ? 1.0 / static_cast<double>(n_pos + n_neg) : 0.0;

    LossGrad out;
    out.grad.assign(params.data.size(), 0.0);

    // Loss plus the head pre-activation gradients, valid cells only.
    std::vector<double> dzc(static_cast<std::size_t>(d_max) * len, 0.0);
    std::vector<double> dzr(static_cast<std::size_t>(d_max) * len, 0.0);
    double reg_loss = 0.0;
    double cls_loss = 0.0;
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            if (!giou.is_valid(d, s)) {
                continue;
            }
            const std::size_t cell = static_cast<std::size_t>(d) * len + s;
            const double y = giou.at(d, s);
            const double r = fc.reg.at(d, s);
            const double p = fc.cls.at(d, s);
            reg_loss += (r - y) * (r - y);
            dzr[cell] = 2.0 * (r - y) / n_valid * r * (1.0 - r);
            if (y > pos_threshold) {
                cls_loss += -coef_pos * std::log(p);
                dzc[cell] = lambda * cls_norm * coef_pos * (p - 1.0);
            } else if (y < neg_threshold) {
                cls_loss += -coef_neg * std::log(1.0 - p);
                dzc[cell] = lambda * cls_norm * coef_neg * p;
            }
        }
    }
    out.reg_loss = reg_loss / n_valid;
    out.cls_loss = cls_loss * cls_norm;
    out.loss = out.reg_loss + lambda * out.cls_loss;

    // Heads.
    double* d_cw = out.grad.data() + params.block("cls_w").offset;
    double* d_cb = out.grad.data() + params.block("cls_b").offset;
    double* d_rw = out.grad.data() + params.block("reg_w").offset;
    double* d_rb = out.grad.data() + params.block("reg_b").offset;
    const double* cw = params.ptr("cls_w");
    const double* rw = params.ptr("reg_w");
    std::vector<double> dhm(fc.hm.size(), 0.0);
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            const std::size_t cell = static_cast<std::size_t>(d) * len + s;
            const double gc = dzc[cell];
            const double gr = dzr[cell];
            if (gc == 0.0 && gr == 0.0) {
                continue;
            }
            const double* m = fc.hm.data() + cell * h2;
            double* dm = dhm.data() + cell * h2;
            for (int o = 0; o < h2; ++o) {
                d_cw[o] += gc * m[o];
                d_rw[o] += gr * m[o];
                dm[o] += gc * cw[o] + gr * rw[o];
            }
            *d_cb += gc;
            *d_rb += gr;
        }
    }

    // Map convolution.
    double* d_mw = out.grad.data() + params.block("map_w").offset;
    double* d_mb = out.grad.data() + params.block("map_b").offset;
    const double* mw = params.ptr("map_w");
    std::vector<double> dg(fc.g.size(), 0.0);
    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            const std::size_t cell = static_cast<std::size_t>(d) * len + s;
            const double* dm = dhm.data() + cell * h2;
            const double* m = fc.hm.data() + cell * h2;
            for (int o = 0; o < h2; ++o) {
                if (dm[o] == 0.0) {
                    continue;
                }
                const double da = dm[o] * (1.0 - m[o] * m[o]);
                d_mb[o] += da;
                for (int u = 0; u < 3; ++u) {
                    const int dd = d + u - 1;
                    if (dd < 0 || dd >= d_max) {
                        continue;
                    }
                    for (int v = 0; v < 3; ++v) {
                        const int ss = s + v - 1;
                        if (ss < 0 || ss >= len) {
                            continue;
                        }
                        const std::size_t ncell = static_cast<std::size_t>(dd) * len + ss;
                        const double* gsrc = fc.g.data() + ncell * h1;
                        double* gdst = dg.data() + ncell * h1;
                        const std::size_t wbase = (static_cast<std::size_t>(o) * h1) * 9 +
                                                  static_cast<std::size_t>(u) * 3 + v;
                        for (int i = 0; i < h1; ++i) {
                            d_mw[wbase + static_cast<std::size_t>(i) * 9] += da * gsrc[i];
                            gdst[i] += da * mw[wbase + static_cast<std::size_t>(i) * 9];
                        }
                    }
                }
            }
        }
    }

    // Contraction transpose back to the clip axis.
    MatD dh2(len, h1);
    contract_mean_backward(sw, dg, dh2);

    // Temporal convolutions.
    auto conv_backward = [&](const MatD& input, const MatD& output, const MatD& doutput,
                             const double* w, double* dw, double* db, MatD& dinput) {
        const int in_ch = input.cols();
        const int out_ch = output.cols();
        dinput = MatD(len, in_ch);
        for (int t = 0; t < len; ++t) {
            for (int o = 0; o < out_ch; ++o) {
                const double hval = output(t, o);
                const double da = doutput(t, o) * (1.0 - hval * hval);
                if (da == 0.0) {
                    continue;
                }
                db[o] += da;
                for (int k = 0; k < 3; ++k) {
                    const int src = t + k - 1;
                    if (src < 0 || src >= len) {
                        continue;
                    }
                    const double* in_row = input.row(src);
                    double* din_row = dinput.row(src);
                    const std::size_t wbase = (static_cast<std::size_t>(o) * in_ch) * 3 + k;
                    for (int i = 0; i < in_ch; ++i) {
                        dw[wbase + static_cast<std::size_t>(i) * 3] += da * in_row[i];
                        din_row[i] += da * w[wbase + static_cast<std::size_t>(i) * 3];
                    }
                }
            }
        }
    };

    MatD dh1;
    conv_backward(fc.h1, fc.h2, dh2, params.ptr("conv2_w"),
                  out.grad.data() + params.block("conv2_w").offset,
                  out.grad.data() + params.block("conv2_b").offset, dh1);
    MatD dx;
    conv_backward(fc.x, fc.h1, dh1, params.ptr("conv1_w"),
                  out.grad.data() + params.block("conv1_w").offset,
                  out.grad.data() + params.block("conv1_b").offset, dx);

    return out;
}

}  // namespace tadet
