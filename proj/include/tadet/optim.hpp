// Copyright (C) 2026 the tadet authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tadet/bmn.hpp"
#include "tadet/mat.hpp"

namespace tadet {

struct TrainConfig {
    double base_lr = 0.002;
    int epochs = 10;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_windows = 16;
    std::uint64_t seed = 1;
    double lambda = 1.0;  // classification loss weight

    void validate() const {
        if (!(base_lr >= 0.0)) {
            throw std::invalid_argument("TrainConfig: base_lr must be >= 0");
        }
        if (epochs < 1) {
            throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        }
        if (batch_windows < 1) {
            throw std::invalid_argument("TrainConfig: batch_windows must be >= 1");
        }
    }
};

/// AdamW moment accumulators, shapes mirroring the flat parameter vector.
struct OptState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    explicit OptState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

inline double cosine_lr(double progress, double base_lr) {
    if (!(progress >= 0.0 && progress <= 1.0)) {
        throw std::invalid_argument("cosine_lr: progress must lie in [0, 1]");
    }
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

/// Decoupled weight decay applied before the bias-corrected moment update.
inline void adamw_step(ModelParams& params, const std::vector<double>& grad,
                       OptState& state, double lr, const TrainConfig& cfg) {
    if (grad.size() != params.data.size() || state.m.size() != params.data.size()) {
        throw std::invalid_argument("adamw_step: shape mismatch");
    }
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            for (const auto& b : params.blocks()) {
                if (i >= b.offset && i < b.offset + b.size) {
                    throw std::runtime_error("adamw_step: non-finite gradient in block " +
                                             b.name + " at index " +
                                             std::to_string(i - b.offset));
                }
            }
            throw std::runtime_error("adamw_step: non-finite gradient");
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double& p = params.data[i];
        p -= lr * cfg.weight_decay * p;
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        p -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

/// One training sample: a window's feature slice and its gIoU label map,
/// kept in single precision until the step converts them.
struct TrainExample {
    MatF features;  // L x C
    MatF giou;      // D x L
};

struct TrainLogRecord {
    int epoch = 0;
    long step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_mean_loss;
};

using TrainLogSink = std::function<void(const TrainLogRecord&)>;

namespace detail {

inline MatD to_double(const MatF& m) {
    MatD out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        out.data()[i] = m.data()[i];
    }
    return out;
}

inline CandidateMap to_candidate_map(const MatF& m) {
    CandidateMap map(m.rows(), m.cols());
    for (int d = 0; d < m.rows(); ++d) {
        for (int s = 0; s < m.cols(); ++s) {
            if (map.is_valid(d, s)) {
                map.at(d, s) = m(d, s);
            }
        }
    }
    return map;
}

}  // namespace detail

/// Fits the model on a window dataset: seeded shuffling each epoch, batched
/// gradient averaging in fixed order, per-step cosine schedule over global
/// progress. Deterministic under a fixed seed.
inline TrainResult train(const std::vector<TrainExample>& dataset, const BmnConfig& bmn_cfg,
                         const TrainConfig& cfg, const SamplingWeights& sw,
                         const TrainLogSink& log_sink = nullptr) {
    cfg.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("train: dataset must not be empty");
    }
    const std::size_t n = dataset.size();
    const long steps_per_epoch =
        static_cast<long>((n + cfg.batch_windows - 1) / cfg.batch_windows);
    const long total_steps = steps_per_epoch * cfg.epochs;

    TrainResult result;
    result.params = ModelParams::random_init(bmn_cfg, cfg.seed);
    OptState state(result.params.data.size());
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    long global_step = 0;
    std::vector<double> batch_grad(result.params.data.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_windows) {
            const std::size_t end = std::min(n, begin + cfg.batch_windows);
            const double inv_batch = 1.0 / static_cast<double>(end - begin);
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const TrainExample& ex = dataset[order[k]];
                const LossGrad lg =
                    loss_and_grad(result.params, detail::to_double(ex.features),
                                  detail::to_candidate_map(ex.giou), cfg.lambda, sw);
                batch_loss += lg.loss;
                for (std::size_t i = 0; i < batch_grad.size(); ++i) {
                    batch_grad[i] += lg.grad[i];
                }
            }
            batch_loss *= inv_batch;
            for (double& g : batch_grad) {
                g *= inv_batch;
            }
            const double lr = cosine_lr(
                static_cast<double>(global_step) / static_cast<double>(total_steps),
                cfg.base_lr);
            adamw_step(result.params, batch_grad, state, lr, cfg);
            if (log_sink) {
                log_sink({epoch, global_step, lr, batch_loss});
            }
            epoch_loss += batch_loss * static_cast<double>(end - begin);
            ++global_step;
        }
        result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return result;
}

}  // namespace tadet
