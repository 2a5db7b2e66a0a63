// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tadet/mat.hpp"

namespace tadet {

/// Shape of the boundary-matching candidate grid and the desk-scale network
/// attached to it. Candidate (d, s) covers clips [s, s + d + 1).
struct BmnConfig {
    int window_len = 200;     // L
    int max_duration = 100;   // D
    int num_samples = 32;     // N_s sample points per candidate
    int feature_dim = 32;     // C
    int base_hidden = 8;      // channels after the temporal convolutions
    int map_hidden = 8;       // channels after the 3x3 map convolution
    int verb_classes = 5;     // synthetic data only
    int noun_classes = 5;

    void validate() const {
        if (max_duration < 1 || max_duration > window_len) {
            throw std::invalid_argument("BmnConfig: requires 1 <= max_duration <= window_len");
        }
        if (num_samples < 2) {
            throw std::invalid_argument("BmnConfig: num_samples must be >= 2");
        }
        if (feature_dim < 1 || base_hidden < 1 || map_hidden < 1) {
            throw std::invalid_argument("BmnConfig: channel counts must be >= 1");
        }
    }

    bool candidate_valid(int d, int s) const { return s + d + 1 <= window_len; }
};

/// Interpolation weights turning a clip sequence into per-candidate sample
/// features. Dense layout (D, L, N_s, L): entry (d, s, j, t) weights clip t
/// for sample j of candidate (start s, duration d+1). Rows of valid
/// candidates are stochastic with at most two nonzero taps; invalid
/// candidates are all-zero. The tap arrays carry the same weights in
/// compacted form for the fast contraction path.
struct SamplingWeights {
    int max_duration = 0;  // D
    int window_len = 0;    // L
    int num_samples = 0;   // N_s
    std::vector<double> dense;   // D * L * N_s * L
    std::vector<std::uint8_t> valid;  // D * L
    std::vector<std::int32_t> tap_index;   // 2 per (d, s, j)
    std::vector<double> tap_weight;        // 2 per (d, s, j)

    std::size_t dense_index(int d, int s, int j, int t) const {
        return ((static_cast<std::size_t>(d) * window_len + s) * num_samples + j) *
                   window_len +
               t;
    }
    std::size_t row_index(int d, int s, int j) const {
        return (static_cast<std::size_t>(d) * window_len + s) * num_samples + j;
    }
    bool candidate_valid(int d, int s) const {
        return valid[static_cast<std::size_t>(d) * window_len + s] != 0;
    }
};

/// Sample point j of candidate (s, d+1) sits at s + j*(d+1)/(N_s-1). Each
/// point interpolates linearly between its two neighbouring clips; points at
/// or beyond the last clip collapse onto clip L-1.
inline SamplingWeights build_sampling_weights(const BmnConfig& cfg) {
    cfg.validate();
    SamplingWeights sw;
    sw.max_duration = cfg.max_duration;
    sw.window_len = cfg.window_len;
    sw.num_samples = cfg.num_samples;
    const int d_max = cfg.max_duration;
    const int len = cfg.window_len;
    const int ns = cfg.num_samples;
    sw.dense.assign(static_cast<std::size_t>(d_max) * len * ns * len, 0.0);
    sw.valid.assign(static_cast<std::size_t>(d_max) * len, 0);
    sw.tap_index.assign(static_cast<std::size_t>(d_max) * len * ns * 2, 0);
    sw.tap_weight.assign(static_cast<std::size_t>(d_max) * len * ns * 2, 0.0);

    for (int d = 0; d < d_max; ++d) {
        for (int s = 0; s < len; ++s) {
            if (!cfg.candidate_valid(d, s)) {
                continue;
            }
            sw.valid[static_cast<std::size_t>(d) * len + s] = 1;
            for (int j = 0; j < ns; ++j) {
                const double p = s + static_cast<double>(j) * (d + 1) / (ns - 1);
                int t0 = static_cast<int>(std::floor(p));
                double frac = p - t0;
                if (t0 >= len - 1) {
                    t0 = len - 1;  // upper tap would fall off the sequence
                    frac = 0.0;
                }
                const std::size_t row = sw.row_index(d, s, j);
                sw.tap_index[2 * row] = t0;
                sw.tap_weight[2 * row] = 1.0 - frac;
                sw.dense[sw.dense_index(d, s, j, t0)] += 1.0 - frac;
                if (frac > 0.0) {
                    sw.tap_index[2 * row + 1] = t0 + 1;
                    sw.tap_weight[2 * row + 1] = frac;
                    sw.dense[sw.dense_index(d, s, j, t0 + 1)] += frac;
                }
            }
        }
    }
    return sw;
}

/// Candidate sample features from the compacted taps; identical to the dense
/// tensor product but skips stored zeros. Output layout (D, L, N_s, C),
/// all-zero for invalid candidates.
inline std::vector<double> contract(const SamplingWeights& sw, const MatD& x) {
    if (x.rows() != sw.window_len) {
        throw std::invalid_argument("contract: sequence length != window length");
    }
    const int c = x.cols();
    const int ns = sw.num_samples;
    std::vector<double> out(
        static_cast<std::size_t>(sw.max_duration) * sw.window_len * ns * c, 0.0);
    for (int d = 0; d < sw.max_duration; ++d) {
        for (int s = 0; s < sw.window_len; ++s) {
            if (!sw.candidate_valid(d, s)) {
                continue;
            }
            for (int j = 0; j < ns; ++j) {
                const std::size_t row = sw.row_index(d, s, j);
                double* dst = out.data() + row * c;
                for (int tap = 0; tap < 2; ++tap) {
                    const double w = sw.tap_weight[2 * row + tap];
                    if (w == 0.0) {
                        continue;
                    }
                    const double* src = x.row(sw.tap_index[2 * row + tap]);
                    for (int k = 0; k < c; ++k) {
                        dst[k] += w * src[k];
                    }
                }
            }
        }
    }
    return out;
}

/// Reference contraction over the full dense tensor, kept for the
/// taps == dense equivalence checks and the acceptance oracle.
inline std::vector<double> contract_dense(const SamplingWeights& sw, const MatD& x) {
    if (x.rows() != sw.window_len) {
        throw std::invalid_argument("contract_dense: sequence length != window length");
    }
    const int c = x.cols();
    const int len = sw.window_len;
    const std::size_t rows =
        static_cast<std::size_t>(sw.max_duration) * sw.window_len * sw.num_samples;
    std::vector<double> out(rows * c, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w = sw.dense.data() + r * len;
        double* dst = out.data() + r * c;
        for (int t = 0; t < len; ++t) {
            const double wt = w[t];
            if (wt == 0.0) {
                continue;
            }
            const double* src = x.row(t);
            for (int k = 0; k < c; ++k) {
                dst[k] += wt * src[k];
            }
        }
    }
    return out;
}

/// Sample-axis mean fused into the contraction: (D, L, C) candidate features.
inline std::vector<double> contract_mean(const SamplingWeights& sw, const MatD& x) {
    if (x.rows() != sw.window_len) {
        throw std::invalid_argument("contract_mean: sequence length != window length");
    }
    const int c = x.cols();
    const int ns = sw.num_samples;
    const double inv_ns = 1.0 / ns;
    std::vector<double> out(
        static_cast<std::size_t>(sw.max_duration) * sw.window_len * c, 0.0);
    for (int d = 0; d < sw.max_duration; ++d) {
        for (int s = 0; s < sw.window_len; ++s) {
            if (!sw.candidate_valid(d, s)) {
                continue;
            }
            double* dst =
                out.data() + (static_cast<std::size_t>(d) * sw.window_len + s) * c;
            for (int j = 0; j < ns; ++j) {
                const std::size_t row = sw.row_index(d, s, j);
                for (int tap = 0; tap < 2; ++tap) {
                    const double w = sw.tap_weight[2 * row + tap] * inv_ns;
                    if (w == 0.0) {
                        continue;
                    }
                    const double* src = x.row(sw.tap_index[2 * row + tap]);
                    for (int k = 0; k < c; ++k) {
                        dst[k] += w * src[k];
                    }
                }
            }
        }
    }
    return out;
}

/// Transpose of contract_mean: scatters per-candidate gradients back onto the
/// clip axis. `grad_cand` has layout (D, L, C); result is L x C.
inline void contract_mean_backward(const SamplingWeights& sw,
                                   const std::vector<double>& grad_cand, MatD& grad_x) {
    const int c = grad_x.cols();
    const int ns = sw.num_samples;
    const double inv_ns = 1.0 / ns;
    for (int d = 0; d < sw.max_duration; ++d) {
        for (int s = 0; s < sw.window_len; ++s) {
            if (!sw.candidate_valid(d, s)) {
                continue;
            }
            const double* g =
                grad_cand.data() + (static_cast<std::size_t>(d) * sw.window_len + s) * c;
            for (int j = 0; j < ns; ++j) {
                const std::size_t row = sw.row_index(d, s, j);
                for (int tap = 0; tap < 2; ++tap) {
                    const double w = sw.tap_weight[2 * row + tap] * inv_ns;
                    if (w == 0.0) {
                        continue;
                    }
                    double* dst = grad_x.row(sw.tap_index[2 * row + tap]);
                    for (int k = 0; k < c; ++k) {
                        dst[k] += w * g[k];
                    }
                }
            }
        }
    }
}

}  // namespace tadet
