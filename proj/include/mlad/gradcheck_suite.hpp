#pragma once

#include <string>
#include <vector>

#include "mlad/adaptation.hpp"
#include "mlad/gradcheck.hpp"
#include "mlad/meta_training.hpp"
#include "mlad/network.hpp"
#include "mlad/rng.hpp"

namespace mlad {

struct NamedGradCheck {
    std::string name;
    GradCheckReport report;
};

inline constexpr double kGradCheckEpsilon = 1e-4;
inline constexpr double kGradCheckTolerance = 1e-5;

namespace gradcheck_detail {

inline ParameterVector random_theta(const ModelSpec& spec, std::uint64_t seed,
                                    double scale = 0.6) {
    ParameterVector theta = zero_parameters(spec);
    Rng rng(seed);
    for (auto& v : theta.values) v = rng.uniform(-scale, scale);
    return theta;
}

inline FrameBatch random_batch(int frames, int dim, int classes, std::uint64_t seed) {
    FrameBatch batch;
    batch.features.resize(frames, dim);
    batch.labels.resize(static_cast<std::size_t>(frames));
    Rng rng(seed);
    for (int f = 0; f < frames; ++f) {
        for (int d = 0; d < dim; ++d) batch.features(f, d) = rng.normal();
        batch.labels[static_cast<std::size_t>(f)] = static_cast<int>(rng.bounded(classes));
    }
    return batch;
}

// Moderate random parameters keep every gradient path away from gate
// saturation, where central differences drown in rounding noise.
inline MetaParams random_meta(int hidden, InputVariant variant, std::uint64_t seed,
                              double scale = 0.5) {
    MetaParams mp;
    mp.hidden = hidden;
    mp.variant = variant;
    mp.phi = Vector::Zero(static_cast<Eigen::Index>(mp.layout().total()));
    Rng rng(seed);
    for (Eigen::Index k = 0; k < mp.phi.size(); ++k) mp.phi[k] = rng.uniform(-scale, scale);
    return mp;
}

inline Vector flat(const ParameterVector& pv) {
    return Eigen::Map<const Vector>(pv.values.data(),
                                    static_cast<Eigen::Index>(pv.values.size()));
}

inline NamedGradCheck check_am(const ModelSpec& spec, std::uint64_t seed,
                               const std::string& name) {
    const ParameterVector theta = random_theta(spec, seed);
    const FrameBatch batch = random_batch(8, spec.input_dim, spec.num_classes, seed + 1);
    const BackwardResult bw = backward(spec, theta, batch);
    auto loss_fn = [&](const Vector& p) {
        ParameterVector t = theta;
        Eigen::Map<Vector>(t.values.data(), p.size()) = p;
        return cross_entropy_loss(forward(spec, t, batch.features), batch.labels);
    };
    return {name, finite_diff_check(loss_fn, flat(bw.grad), flat(theta), kGradCheckEpsilon)};
}

inline NamedGradCheck check_lhuc(std::uint64_t seed) {
    ModelSpec spec;
    spec.input_dim = 5;
    spec.hidden_dims = {8, 6};
    spec.num_classes = 4;
    const ParameterVector theta = random_theta(spec, seed);
    const FrameBatch batch = random_batch(8, 5, 4, seed + 1);
    LhucParams lhuc = LhucParams::ones(spec);
    Rng rng(seed + 2);
    for (auto& r : lhuc.r) {
        for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = rng.uniform(0.5, 1.5);
    }
    Overlay overlay;
    overlay.lhuc = &lhuc;
    const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);

    Vector params(14);
    Vector analytic(14);
    params << lhuc.r[0], lhuc.r[1];
    analytic << bw.grad_lhuc[0], bw.grad_lhuc[1];
    auto loss_fn = [&](const Vector& p) {
        LhucParams trial = lhuc;
        trial.r[0] = p.head(8);
        trial.r[1] = p.tail(6);
        Overlay o;
        o.lhuc = &trial;
        return cross_entropy_loss(forward(spec, theta, batch.features, o), batch.labels);
    };
    return {"lhuc overlay", finite_diff_check(loss_fn, analytic, params, kGradCheckEpsilon)};
}

inline NamedGradCheck check_linear(std::uint64_t seed) {
    ModelSpec spec;
    spec.input_dim = 5;
    spec.hidden_dims = {7, 6};
    spec.num_classes = 4;
    const ParameterVector theta = random_theta(spec, seed);
    const FrameBatch batch = random_batch(8, 5, 4, seed + 1);
    LinearTransformParams lt = LinearTransformParams::identity(spec, 1);
    Rng rng(seed + 2);
    for (Eigen::Index r = 0; r < lt.A.rows(); ++r) {
        for (Eigen::Index c = 0; c < lt.A.cols(); ++c) lt.A(r, c) += rng.uniform(-0.3, 0.3);
    }
    Overlay overlay;
    overlay.linear = &lt;
    const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);

    const Eigen::Index d = lt.A.rows();
    Vector params(d * d);
    Vector analytic(d * d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            params[r * d + c] = lt.A(r, c);
            analytic[r * d + c] = bw.grad_linear(r, c);
        }
    }
    auto loss_fn = [&](const Vector& p) {
        LinearTransformParams trial = lt;
        for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) trial.A(r, c) = p[r * d + c];
        }
        Overlay o;
        o.linear = &trial;
        return cross_entropy_loss(forward(spec, theta, batch.features, o), batch.labels);
    };
    return {"linear overlay", finite_diff_check(loss_fn, analytic, params, kGradCheckEpsilon)};
}

// d(c . h)/dPhi for one LSTM step on a single coordinate.
inline NamedGradCheck check_meta_step(InputVariant variant, std::uint64_t seed) {
    const int H = 6;
    const MetaParams mp = random_meta(H, variant, seed);
    Rng rng(seed + 1);
    CoordinateStates states = CoordinateStates::initial(1, H);
    for (int k = 0; k < H; ++k) {
        states.h(0, k) = rng.uniform(-0.8, 0.8);
        states.cell(0, k) = rng.uniform(-0.8, 0.8);
    }
    states.prev_f[0] = rng.uniform();
    states.prev_i[0] = rng.uniform();
    const double theta0 = rng.uniform(-1.0, 1.0);
    const double loss0 = rng.uniform(0.1, 3.0);
    const double g0 = rng.uniform(-1.0, 1.0);
    const CoordinatePosition pos{1, 2, 4, 5};
    Vector c(H);
    for (int k = 0; k < H; ++k) c[k] = rng.uniform(-1.0, 1.0);

    ParameterVector theta;
    theta.layout = {{0, ParamKind::weight_matrix, 4, 5, 0}};
    theta.values.assign(20, 0.0);
    theta.values[7] = theta0;  // row 1, col 2
    ParameterVector grad = theta.zeros_like();
    grad.values[7] = g0;
    std::vector<CoordinatePosition> positions = coordinate_positions(theta);

    MetaStepRecord record;
    adapt_step_all(mp, CoordinateStates::initial(theta.size(), H), theta, loss0, grad,
                   &positions, &record);
    // Redo with the chosen nonzero state for coordinate 7.
    CoordinateStates full = CoordinateStates::initial(theta.size(), H);
    full.h.row(7) = states.h.row(0);
    full.cell.row(7) = states.cell.row(0);
    full.prev_f[7] = states.prev_f[0];
    full.prev_i[7] = states.prev_i[0];
    adapt_step_all(mp, full, theta, loss0, grad, &positions, &record);

    MetaStepAdjoint adj = MetaStepAdjoint::zero(theta.size(), H);
    adj.d_h.row(7) = c.transpose();
    Vector d_phi = Vector::Zero(mp.phi.size());
    adapt_step_backward(mp, record, full.h, full.cell, adj, d_phi);

    const CoordinateState state0 = full.at(7, theta0);
    auto loss_fn = [&](const Vector& phi) {
        MetaParams trial = mp;
        trial.phi = phi;
        const CoordinateInput in = build_input(variant, theta0, pos, loss0, g0, trial.pre);
        const LstmStepOutput out = lstm_layer1_step(trial, state0, in);
        return c.dot(out.h);
    };
    const std::string name =
        std::string("meta-LSTM step (") + (variant == InputVariant::value ? "value" : "position") +
        ")";
    return {name, finite_diff_check(loss_fn, d_phi, mp.phi, kGradCheckEpsilon)};
}

inline NamedGradCheck check_meta_loss(InputVariant variant, TargetRegime regime,
                                      std::uint64_t seed) {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden_dims = {4};
    spec.num_classes = 2;
    const ParameterVector theta = random_theta(spec, seed);
    ChunkPlan plan = make_chunks(random_batch(16, 3, 2, seed + 1), 8);
    pseudo_label_chunks(spec, theta, plan);
    const MetaParams meta = random_meta(4, variant, seed + 2);
    const MetaGradient mg = meta_gradient(spec, theta, meta, plan, plan.pairs.at(0), regime, 1);
    auto loss_fn = [&](const Vector& phi) {
        MetaParams trial = meta;
        trial.phi = phi;
        return meta_loss(spec, theta, trial, plan, regime, 1);
    };
    const std::string name = std::string("meta-gradient T=1 (") +
                             (variant == InputVariant::value ? "value" : "position") + ", " +
                             (regime == TargetRegime::supervised ? "sup" : "unsup") + ")";
    return {name, finite_diff_check(loss_fn, mg.d_phi, meta.phi, kGradCheckEpsilon)};
}

}  // namespace gradcheck_detail

// Seeded finite-difference suites behind the gradcheck CLI target names.
inline std::vector<NamedGradCheck> run_gradcheck_suite(const std::string& target,
                                                       std::uint64_t seed) {
    using namespace gradcheck_detail;
    std::vector<NamedGradCheck> checks;
    if (target == "am") {
        ModelSpec small;
        small.input_dim = 3;
        small.hidden_dims = {4};
        small.num_classes = 2;
        checks.push_back(check_am(small, seed, "am backward (3-4-2)"));
        ModelSpec large;
        large.input_dim = 10;
        large.hidden_dims = {64, 48, 32, 24};
        large.num_classes = 6;
        checks.push_back(check_am(large, seed + 10, "am backward (4 layers <= 64 units)"));
    } else if (target == "lhuc") {
        checks.push_back(check_lhuc(seed));
    } else if (target == "linear") {
        checks.push_back(check_linear(seed));
    } else if (target == "meta-step") {
        checks.push_back(check_meta_step(InputVariant::value, seed));
        checks.push_back(check_meta_step(InputVariant::position, seed + 1));
    } else if (target == "meta-loss") {
        checks.push_back(check_meta_loss(InputVariant::value, TargetRegime::supervised, seed));
        checks.push_back(check_meta_loss(InputVariant::position, TargetRegime::supervised,
                                         seed + 1));
        checks.push_back(check_meta_loss(InputVariant::value, TargetRegime::unsupervised,
                                         seed + 2));
        checks.push_back(check_meta_loss(InputVariant::position, TargetRegime::unsupervised,
                                         seed + 3));
    } else {
        throw UsageError("unknown gradcheck target '" + target +
                         "' (expected am|lhuc|linear|meta-step|meta-loss)");
    }
    return checks;
}

}  // namespace mlad
