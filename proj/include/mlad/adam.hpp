#pragma once

#include <cmath>

#include "mlad/numerics.hpp"

namespace mlad {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Vector m;
    Vector v;
    long t = 0;

    static AdamState zero(Eigen::Index n) {
        return {Vector::Zero(n), Vector::Zero(n), 0};
    }
};

// One Adam update with bias correction; mutates state and params in place.
inline void adam_step(AdamState& state, Vector& params, const Vector& grad,
                      const AdamConfig& cfg) {
    if (params.size() != grad.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw DataError("adam_step: size mismatch");
    }
    ++state.t;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = (cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grad.array().square()).matrix();
    const double m_corr = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double v_corr = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (Eigen::Index k = 0; k < params.size(); ++k) {
        const double m_hat = state.m[k] / m_corr;
        const double v_hat = state.v[k] / v_corr;
        params[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace mlad
