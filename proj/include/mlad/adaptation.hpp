#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mlad/meta_learner.hpp"
#include "mlad/model.hpp"
#include "mlad/network.hpp"

namespace mlad {

enum class AdaptMethod : std::uint8_t { META, ALL, LHUC, LINEAR };

struct AdaptMethodConfig {
    AdaptMethod method = AdaptMethod::META;
    int steps = 1;                // full-batch steps: T for META, epochs for SGD methods
    double learning_rate = 0.01;  // unused for META
    int linear_layer = -1;        // -1 selects the middle hidden layer
    const MetaParams* meta = nullptr;
    bool pin_identity_gates = false;  // verification hook: forces theta' = theta for META
};

// Per-method defaults: META does one step; ALL/LHUC run 3 epochs at 0.01/0.7.
// LINEAR mirrors ALL's schedule.
inline AdaptMethodConfig default_adapt_config(AdaptMethod method,
                                              const MetaParams* meta = nullptr) {
    AdaptMethodConfig cfg;
    cfg.method = method;
    cfg.meta = meta;
    switch (method) {
        case AdaptMethod::META:
            cfg.steps = 1;
            break;
        case AdaptMethod::ALL:
            cfg.steps = 3;
            cfg.learning_rate = 0.01;
            break;
        case AdaptMethod::LHUC:
            cfg.steps = 3;
            cfg.learning_rate = 0.7;
            break;
        case AdaptMethod::LINEAR:
            cfg.steps = 3;
            cfg.learning_rate = 0.01;
            break;
    }
    return cfg;
}

// Adapted weights, either directly (META/ALL) or as an overlay on untouched
// base weights (LHUC/LINEAR). `step_losses` holds the batch loss before each
// update.
struct AdaptResult {
    ParameterVector adapted;
    std::optional<LhucParams> lhuc;
    std::optional<LinearTransformParams> linear;
    std::vector<double> step_losses;

    Overlay overlay() const {
        Overlay o;
        if (lhuc) o.lhuc = &*lhuc;
        if (linear) o.linear = &*linear;
        return o;
    }
};

namespace detail {

inline void check_adapt_batch(const FrameBatch& batch) {
    if (batch.num_frames() == 0) throw DataError("no adaptation frames");
}

inline void check_step_loss(double loss, int step, const char* what) {
    if (!std::isfinite(loss)) {
        throw NumericError(std::string(what) + ": non-finite loss at step " +
                           std::to_string(step));
    }
}

}  // namespace detail

// T full-batch meta-learner steps from `theta`: each step feeds the shared
// batch loss and per-coordinate gradients to the learned update rule.
// `tape`, when given, records each step for reverse-mode differentiation.
inline AdaptResult meta_adapt(const ModelSpec& spec, const ParameterVector& theta,
                              const FrameBatch& batch, const MetaParams& meta, int steps,
                              bool pin_identity_gates = false,
                              std::vector<MetaStepRecord>* tape = nullptr,
                              const std::vector<CoordinatePosition>* positions = nullptr) {
    detail::check_adapt_batch(batch);
    if (steps < 1) throw DataError("meta_adapt: steps must be >= 1");
    meta.validate();
    std::vector<CoordinatePosition> local_positions;
    if (meta.variant == InputVariant::position && positions == nullptr) {
        local_positions = coordinate_positions(theta);
        positions = &local_positions;
    }
    AdaptResult result;
    result.adapted = theta;
    CoordinateStates states = CoordinateStates::initial(theta.size(), meta.hidden);
    if (tape != nullptr) tape->assign(static_cast<std::size_t>(steps), MetaStepRecord{});
    for (int t = 0; t < steps; ++t) {
        const BackwardResult bw = backward(spec, result.adapted, batch);
        detail::check_step_loss(bw.loss, t + 1, "meta_adapt");
        result.step_losses.push_back(bw.loss);
        MetaStepRecord* rec = tape != nullptr ? &(*tape)[static_cast<std::size_t>(t)] : nullptr;
        AdaptStepOutput out = adapt_step_all(meta, states, result.adapted, bw.loss, bw.grad,
                                             positions, rec, pin_identity_gates);
        result.adapted = std::move(out.theta);
        states = std::move(out.states);
    }
    return result;
}

// Full-batch gradient descent on all weights, one step per epoch.
inline AdaptResult sgd_adapt_all(const ModelSpec& spec, const ParameterVector& theta,
                                 const FrameBatch& batch, double learning_rate, int epochs) {
    detail::check_adapt_batch(batch);
    if (epochs < 1) throw DataError("sgd_adapt_all: epochs must be >= 1");
    AdaptResult result;
    result.adapted = theta;
    for (int t = 0; t < epochs; ++t) {
        const BackwardResult bw = backward(spec, result.adapted, batch);
        detail::check_step_loss(bw.loss, t + 1, "sgd_adapt_all");
        result.step_losses.push_back(bw.loss);
        for (std::size_t k = 0; k < result.adapted.values.size(); ++k) {
            result.adapted.values[k] -= learning_rate * bw.grad.values[k];
        }
    }
    return result;
}

// Gradient descent on per-unit activation multipliers, all hidden layers.
// Base weights are returned untouched.
inline AdaptResult lhuc_adapt(const ModelSpec& spec, const ParameterVector& theta,
                              const FrameBatch& batch, double learning_rate, int epochs) {
    detail::check_adapt_batch(batch);
    if (epochs < 1) throw DataError("lhuc_adapt: epochs must be >= 1");
    AdaptResult result;
    result.adapted = theta;
    result.lhuc = LhucParams::ones(spec);
    for (int t = 0; t < epochs; ++t) {
        Overlay overlay;
        overlay.lhuc = &*result.lhuc;
        const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);
        detail::check_step_loss(bw.loss, t + 1, "lhuc_adapt");
        result.step_losses.push_back(bw.loss);
        for (int l = 0; l < spec.num_hidden(); ++l) {
            result.lhuc->r[static_cast<std::size_t>(l)] -=
                learning_rate * bw.grad_lhuc[static_cast<std::size_t>(l)];
        }
    }
    return result;
}

// Gradient descent on a square transform inserted after one hidden layer.
inline AdaptResult linear_adapt(const ModelSpec& spec, const ParameterVector& theta,
                                const FrameBatch& batch, double learning_rate, int epochs,
                                int layer = -1) {
    detail::check_adapt_batch(batch);
    if (epochs < 1) throw DataError("linear_adapt: epochs must be >= 1");
    if (layer < 0) layer = spec.num_hidden() / 2;
    AdaptResult result;
    result.adapted = theta;
    result.linear = LinearTransformParams::identity(spec, layer);
    for (int t = 0; t < epochs; ++t) {
        Overlay overlay;
        overlay.linear = &*result.linear;
        const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);
        detail::check_step_loss(bw.loss, t + 1, "linear_adapt");
        result.step_losses.push_back(bw.loss);
        result.linear->A -= learning_rate * bw.grad_linear;
    }
    return result;
}

// Method dispatch. Never mutates its inputs; deterministic.
inline AdaptResult adapt(const ModelSpec& spec, const ParameterVector& theta,
                         const FrameBatch& batch, const AdaptMethodConfig& cfg) {
    switch (cfg.method) {
        case AdaptMethod::META:
            if (cfg.meta == nullptr) throw DataError("adapt: META requires meta parameters");
            return meta_adapt(spec, theta, batch, *cfg.meta, cfg.steps, cfg.pin_identity_gates);
        case AdaptMethod::ALL:
            return sgd_adapt_all(spec, theta, batch, cfg.learning_rate, cfg.steps);
        case AdaptMethod::LHUC:
            return lhuc_adapt(spec, theta, batch, cfg.learning_rate, cfg.steps);
        case AdaptMethod::LINEAR:
            return linear_adapt(spec, theta, batch, cfg.learning_rate, cfg.steps,
                                cfg.linear_layer);
    }
    throw DataError("adapt: unknown method");
}

}  // namespace mlad
