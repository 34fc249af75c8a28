#pragma once

#include <optional>
#include <vector>

#include "mlad/model.hpp"
#include "mlad/numerics.hpp"

namespace mlad {

// Per-unit multipliers on the post-activation of every hidden layer.
// Identity when r == 1 everywhere.
struct LhucParams {
    std::vector<Vector> r;  // one vector per hidden layer, length = layer width

    static LhucParams ones(const ModelSpec& spec) {
        LhucParams p;
        p.r.reserve(spec.hidden_dims.size());
        for (int d : spec.hidden_dims) p.r.push_back(Vector::Ones(d));
        return p;
    }
};

// Square transform inserted after one hidden layer's activations: h' = A h.
// Identity when A == I.
struct LinearTransformParams {
    int layer = 0;  // hidden layer index
    Matrix A;

    static LinearTransformParams identity(const ModelSpec& spec, int layer) {
        if (layer < 0 || layer >= spec.num_hidden()) {
            throw DataError("linear transform: layer index out of range");
        }
        return {layer, Matrix::Identity(spec.hidden_dims[layer], spec.hidden_dims[layer])};
    }
};

// Optional speaker-dependent overlay applied during the forward pass. The
// base weights are never touched; at most one overlay kind may be set.
struct Overlay {
    const LhucParams* lhuc = nullptr;
    const LinearTransformParams* linear = nullptr;

    bool any() const { return lhuc != nullptr || linear != nullptr; }
};

namespace detail {

inline void check_forward_inputs(const ModelSpec& spec, const ParameterVector& theta,
                                 const Matrix& features, const Overlay& overlay) {
    check_layout_matches(spec, theta);
    if (features.cols() != spec.input_dim) {
        throw DataError("forward: feature dimension does not match model input_dim");
    }
    if (overlay.lhuc && overlay.linear) {
        throw DataError("forward: LHUC and linear overlays cannot be combined");
    }
    if (overlay.lhuc) {
        if (static_cast<int>(overlay.lhuc->r.size()) != spec.num_hidden()) {
            throw DataError("forward: LHUC overlay layer count mismatch");
        }
        for (int l = 0; l < spec.num_hidden(); ++l) {
            if (overlay.lhuc->r[l].size() != spec.hidden_dims[l]) {
                throw DataError("forward: LHUC overlay width mismatch");
            }
        }
    }
    if (overlay.linear) {
        const int l = overlay.linear->layer;
        if (l < 0 || l >= spec.num_hidden()) {
            throw DataError("forward: linear overlay layer out of range");
        }
        if (overlay.linear->A.rows() != spec.hidden_dims[l] ||
            overlay.linear->A.cols() != spec.hidden_dims[l]) {
            throw DataError("forward: linear overlay shape mismatch");
        }
    }
}

}  // namespace detail

// Intermediate values of one forward pass, kept for backprop.
struct ForwardTrace {
    std::vector<Matrix> inputs;        // input to each linear layer, a_0..a_L
    std::vector<Matrix> hidden_sigma;  // logistic output per hidden layer, before overlay scaling
    Matrix posteriors;                 // [frames x num_classes]
};

inline ForwardTrace forward_traced(const ModelSpec& spec, const ParameterVector& theta,
                                   const Matrix& features, const Overlay& overlay = {}) {
    detail::check_forward_inputs(spec, theta, features, overlay);
    ForwardTrace trace;
    trace.inputs.reserve(static_cast<std::size_t>(spec.num_layers()));
    trace.hidden_sigma.reserve(static_cast<std::size_t>(spec.num_hidden()));
    trace.inputs.push_back(features);
    for (int layer = 0; layer < spec.num_hidden(); ++layer) {
        const auto w = theta.matrix_at(static_cast<std::size_t>(2 * layer));
        const auto b = theta.matrix_at(static_cast<std::size_t>(2 * layer + 1));
        Matrix z = trace.inputs.back() * w.transpose();
        z.rowwise() += b.col(0).transpose();
        // Elementwise logistic. exp(-z) saturates to +inf for very negative z,
        // which still yields the correct limit 0.
        Matrix s = (1.0 + (-z.array()).exp()).inverse().matrix();
        trace.hidden_sigma.push_back(std::move(s));
        Matrix h;
        if (overlay.lhuc) {
            h = (trace.hidden_sigma.back().array().rowwise() *
                 overlay.lhuc->r[static_cast<std::size_t>(layer)].transpose().array())
                    .matrix();
        } else if (overlay.linear && overlay.linear->layer == layer) {
            h = trace.hidden_sigma.back() * overlay.linear->A.transpose();
        } else {
            h = trace.hidden_sigma.back();
        }
        trace.inputs.push_back(std::move(h));
    }
    const int out = spec.num_hidden();
    const auto w = theta.matrix_at(static_cast<std::size_t>(2 * out));
    const auto b = theta.matrix_at(static_cast<std::size_t>(2 * out + 1));
    Matrix logits = trace.inputs.back() * w.transpose();
    logits.rowwise() += b.col(0).transpose();
    softmax_rows(logits);
    trace.posteriors = std::move(logits);
    return trace;
}

// Class posteriors for every frame; rows sum to 1.
inline Matrix forward(const ModelSpec& spec, const ParameterVector& theta, const Matrix& features,
                      const Overlay& overlay = {}) {
    return forward_traced(spec, theta, features, overlay).posteriors;
}

// Summed (not averaged) cross-entropy over frames, with the posterior floor.
inline double cross_entropy_loss(const Matrix& posteriors, const std::vector<int>& labels) {
    if (labels.empty()) throw DataError("cross_entropy_loss: empty batch");
    if (static_cast<std::size_t>(posteriors.rows()) != labels.size()) {
        throw DataError("cross_entropy_loss: label count does not match posterior rows");
    }
    double loss = 0.0;
    for (std::size_t f = 0; f < labels.size(); ++f) {
        const int y = labels[f];
        if (y < 0 || y >= posteriors.cols()) {
            throw DataError("cross_entropy_loss: label out of range");
        }
        const double p = posteriors(static_cast<Eigen::Index>(f), y);
        loss -= std::log(p < kPosteriorFloor ? kPosteriorFloor : p);
    }
    return loss;
}

// Per-frame argmax, ties broken towards the lowest class index.
inline std::vector<int> predict_labels(const ModelSpec& spec, const ParameterVector& theta,
                                       const Matrix& features, const Overlay& overlay = {}) {
    const Matrix post = forward(spec, theta, features, overlay);
    std::vector<int> labels(static_cast<std::size_t>(post.rows()));
    for (Eigen::Index f = 0; f < post.rows(); ++f) {
        int best = 0;
        double best_p = post(f, 0);
        for (Eigen::Index k = 1; k < post.cols(); ++k) {
            if (post(f, k) > best_p) {
                best_p = post(f, k);
                best = static_cast<int>(k);
            }
        }
        labels[static_cast<std::size_t>(f)] = best;
    }
    return labels;
}

struct BackwardResult {
    double loss = 0.0;
    ParameterVector grad;            // dL/dtheta, same layout as theta
    std::vector<Vector> grad_lhuc;   // dL/dr per hidden layer (LHUC overlay only)
    Matrix grad_linear;              // dL/dA (linear overlay only)
};

namespace detail {

// Reverse-mode sweep shared by all gradient entry points. `want_theta`
// controls whether base-weight gradients are accumulated; overlay gradients
// are produced whenever the corresponding overlay is present.
inline BackwardResult backprop(const ModelSpec& spec, const ParameterVector& theta,
                               const FrameBatch& batch, const Overlay& overlay, bool want_theta) {
    batch.validate(spec.num_classes);
    if (batch.num_frames() == 0) throw DataError("backward: empty batch");
    ForwardTrace trace = forward_traced(spec, theta, batch.features, overlay);

    BackwardResult result;
    result.loss = cross_entropy_loss(trace.posteriors, batch.labels);
    if (want_theta) result.grad = theta.zeros_like();
    if (overlay.lhuc) {
        result.grad_lhuc.reserve(static_cast<std::size_t>(spec.num_hidden()));
        for (int d : spec.hidden_dims) result.grad_lhuc.push_back(Vector::Zero(d));
    }
    if (overlay.linear) {
        result.grad_linear = Matrix::Zero(overlay.linear->A.rows(), overlay.linear->A.cols());
    }

    // Softmax + clamped cross-entropy: frames whose floored posterior is in
    // the clamp region contribute a constant loss, hence zero gradient.
    Matrix delta = trace.posteriors;
    for (Eigen::Index f = 0; f < delta.rows(); ++f) {
        const int y = batch.labels[static_cast<std::size_t>(f)];
        if (trace.posteriors(f, y) < kPosteriorFloor) {
            delta.row(f).setZero();
        } else {
            delta(f, y) -= 1.0;
        }
    }

    for (int layer = spec.num_hidden(); layer >= 0; --layer) {
        const auto w = theta.matrix_at(static_cast<std::size_t>(2 * layer));
        if (want_theta) {
            auto gw = result.grad.matrix_at(static_cast<std::size_t>(2 * layer));
            gw = delta.transpose() * trace.inputs[static_cast<std::size_t>(layer)];
            auto gb = result.grad.matrix_at(static_cast<std::size_t>(2 * layer + 1));
            gb.col(0) = delta.colwise().sum().transpose();
        }
        if (layer == 0) break;
        Matrix dh = delta * w;  // gradient w.r.t. the scaled hidden output of layer-1
        const int hidden = layer - 1;
        const Matrix& s = trace.hidden_sigma[static_cast<std::size_t>(hidden)];
        Matrix ds;
        if (overlay.lhuc) {
            result.grad_lhuc[static_cast<std::size_t>(hidden)] =
                (dh.array() * s.array()).colwise().sum().transpose().matrix();
            ds = (dh.array().rowwise() *
                  overlay.lhuc->r[static_cast<std::size_t>(hidden)].transpose().array())
                     .matrix();
        } else if (overlay.linear && overlay.linear->layer == hidden) {
            result.grad_linear = dh.transpose() * s;
            ds = dh * overlay.linear->A;
        } else {
            ds = std::move(dh);
        }
        delta = (ds.array() * s.array() * (1.0 - s.array())).matrix();
    }
    return result;
}

}  // namespace detail

// Loss and exact gradient w.r.t. every base weight.
inline BackwardResult backward(const ModelSpec& spec, const ParameterVector& theta,
                               const FrameBatch& batch) {
    return detail::backprop(spec, theta, batch, {}, /*want_theta=*/true);
}

// Loss and gradient w.r.t. the overlay parameters only (base weights frozen).
inline BackwardResult backward_overlay(const ModelSpec& spec, const ParameterVector& theta,
                                       const FrameBatch& batch, const Overlay& overlay) {
    if (!overlay.any()) throw DataError("backward_overlay: no overlay present");
    return detail::backprop(spec, theta, batch, overlay, /*want_theta=*/false);
}

}  // namespace mlad
