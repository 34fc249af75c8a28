#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mlad/adam.hpp"
#include "mlad/adaptation.hpp"
#include "mlad/meta_learner.hpp"
#include "mlad/network.hpp"
#include "mlad/rng.hpp"

namespace mlad {

// Adapt-on-c, evaluate-on-c+1 chunk pairing over a speaker's frame stream.
struct ChunkPair {
    std::size_t adapt_chunk = 0;
    std::size_t eval_chunk = 0;
};

struct ChunkPlan {
    int chunk_len = 1000;
    std::vector<FrameBatch> chunks;
    std::vector<int> chunk_speaker;
    // Adaptation-role labels per chunk; empty = use the chunk's true labels.
    // Evaluation always uses true labels.
    std::vector<std::vector<int>> adapt_labels;
    std::vector<ChunkPair> pairs;

    void append(const ChunkPlan& other) {
        if (other.chunk_len != chunk_len) throw DataError("chunk plan: chunk_len mismatch");
        const std::size_t base = chunks.size();
        chunks.insert(chunks.end(), other.chunks.begin(), other.chunks.end());
        chunk_speaker.insert(chunk_speaker.end(), other.chunk_speaker.begin(),
                             other.chunk_speaker.end());
        adapt_labels.insert(adapt_labels.end(), other.adapt_labels.begin(),
                            other.adapt_labels.end());
        for (const auto& p : other.pairs) {
            pairs.push_back({p.adapt_chunk + base, p.eval_chunk + base});
        }
    }
};

// Splits each segment (chunks never cross a segment boundary, e.g. an
// utterance) into consecutive N-frame chunks, dropping the trailing partial
// chunk, and pairs consecutive chunks within a segment.
inline ChunkPlan make_chunks(const std::vector<FrameBatch>& segments, int chunk_len,
                             int speaker_id = 0) {
    if (chunk_len < 1) throw DataError("make_chunks: chunk length must be >= 1");
    ChunkPlan plan;
    plan.chunk_len = chunk_len;
    for (const auto& segment : segments) {
        const std::size_t count =
            static_cast<std::size_t>(segment.num_frames()) / static_cast<std::size_t>(chunk_len);
        const std::size_t first = plan.chunks.size();
        for (std::size_t c = 0; c < count; ++c) {
            FrameBatch chunk;
            const Eigen::Index begin = static_cast<Eigen::Index>(c) * chunk_len;
            chunk.features = segment.features.middleRows(begin, chunk_len);
            chunk.labels.assign(segment.labels.begin() + begin,
                                segment.labels.begin() + begin + chunk_len);
            if (!segment.is_silence.empty()) {
                chunk.is_silence.assign(segment.is_silence.begin() + begin,
                                        segment.is_silence.begin() + begin + chunk_len);
            }
            plan.chunks.push_back(std::move(chunk));
            plan.chunk_speaker.push_back(speaker_id);
            plan.adapt_labels.emplace_back();
            if (c > 0) plan.pairs.push_back({first + c - 1, first + c});
        }
    }
    return plan;
}

inline ChunkPlan make_chunks(const FrameBatch& frames, int chunk_len, int speaker_id = 0) {
    return make_chunks(std::vector<FrameBatch>{frames}, chunk_len, speaker_id);
}

enum class TargetRegime : std::uint8_t { supervised, unsupervised };

// Replaces the adaptation-role labels of every chunk that some pair adapts
// on with the frozen SI model's frame predictions. True labels (and thus the
// evaluation role) are untouched.
inline void pseudo_label_chunks(const ModelSpec& spec, const ParameterVector& theta_si,
                                ChunkPlan& plan) {
    for (const auto& pair : plan.pairs) {
        auto& pseudo = plan.adapt_labels[pair.adapt_chunk];
        if (!pseudo.empty()) continue;
        pseudo = predict_labels(spec, theta_si, plan.chunks[pair.adapt_chunk].features);
    }
}

namespace detail {

inline FrameBatch adaptation_batch(const ChunkPlan& plan, const ChunkPair& pair,
                                   TargetRegime regime) {
    FrameBatch batch = plan.chunks[pair.adapt_chunk];
    if (regime == TargetRegime::unsupervised) {
        const auto& pseudo = plan.adapt_labels[pair.adapt_chunk];
        if (pseudo.empty()) {
            throw DataError("meta training: pseudo labels missing; run pseudo_label_chunks");
        }
        batch.labels = pseudo;
    }
    return batch;
}

}  // namespace detail

// Meta-objective: for every pair, adapt from the same initial weights on
// chunk c and sum the adapted model's CE on chunk c+1 under true labels.
inline double meta_loss(const ModelSpec& spec, const ParameterVector& theta_si,
                        const MetaParams& meta, const ChunkPlan& plan, TargetRegime regime,
                        int steps, bool pin_identity_gates = false) {
    if (plan.pairs.empty()) throw DataError("no chunk pairs");
    std::vector<CoordinatePosition> positions;
    const std::vector<CoordinatePosition>* pos = nullptr;
    if (meta.variant == InputVariant::position) {
        positions = coordinate_positions(theta_si);
        pos = &positions;
    }
    double total = 0.0;
    for (const auto& pair : plan.pairs) {
        const FrameBatch batch = detail::adaptation_batch(plan, pair, regime);
        const AdaptResult adapted =
            meta_adapt(spec, theta_si, batch, meta, steps, pin_identity_gates, nullptr, pos);
        const auto& eval = plan.chunks[pair.eval_chunk];
        const Matrix post = forward(spec, adapted.adapted, eval.features);
        total += cross_entropy_loss(post, eval.labels);
    }
    return total;
}

struct MetaGradient {
    Vector d_phi;          // canonical meta-parameter layout
    double j_value = 0.0;  // the pair's contribution to the meta-objective
};

// Exact reverse-mode gradient of one pair's objective w.r.t. the meta
// parameters, backpropagating through the gates, the LSTM and the weight
// update. Inner losses and gradients are treated as constants: exact for a
// single step, the declared first-order approximation for more.
inline MetaGradient meta_gradient(const ModelSpec& spec, const ParameterVector& theta_si,
                                  const MetaParams& meta, const ChunkPlan& plan,
                                  const ChunkPair& pair, TargetRegime regime, int steps,
                                  const std::vector<CoordinatePosition>* positions = nullptr) {
    meta.validate();
    const MetaLayout lay = meta.layout();
    std::vector<CoordinatePosition> local_positions;
    if (meta.variant == InputVariant::position && positions == nullptr) {
        local_positions = coordinate_positions(theta_si);
        positions = &local_positions;
    }

    const FrameBatch batch = detail::adaptation_batch(plan, pair, regime);
    std::vector<MetaStepRecord> tape;
    const AdaptResult adapted =
        meta_adapt(spec, theta_si, batch, meta, steps, /*pin_identity_gates=*/false, &tape,
                   positions);

    const auto& eval = plan.chunks[pair.eval_chunk];
    FrameBatch eval_batch = eval;
    const BackwardResult eval_bw = backward(spec, adapted.adapted, eval_batch);
    if (!std::isfinite(eval_bw.loss)) {
        throw NumericError("meta_gradient: non-finite evaluation loss");
    }

    const Eigen::Index n = static_cast<Eigen::Index>(theta_si.size());
    MetaGradient out;
    out.j_value = eval_bw.loss;
    out.d_phi = Vector::Zero(static_cast<Eigen::Index>(lay.total()));

    MetaStepAdjoint adj = MetaStepAdjoint::zero(n, lay.hidden);
    adj.d_theta = Eigen::Map<const Vector>(eval_bw.grad.values.data(), n);

    const RowMatrix zero_state = RowMatrix::Zero(n, lay.hidden);
    for (int t = static_cast<int>(tape.size()) - 1; t >= 0; --t) {
        const RowMatrix& prev_h = t > 0 ? tape[static_cast<std::size_t>(t - 1)].h : zero_state;
        const RowMatrix& prev_cell =
            t > 0 ? tape[static_cast<std::size_t>(t - 1)].cell : zero_state;
        adapt_step_backward(meta, tape[static_cast<std::size_t>(t)], prev_h, prev_cell, adj,
                            out.d_phi);
        if (!adj.d_theta.allFinite()) {
            throw NumericError("meta_gradient: non-finite adjoint at step " + std::to_string(t + 1));
        }
    }
    return out;
}

// Replays the unrolled adaptation with the recorded per-step losses and
// gradients held fixed, then evaluates the final weights. Differentiating
// this function numerically reproduces the stop-gradient convention of
// meta_gradient; for a single step it coincides with meta_loss on the pair.
inline double meta_loss_frozen(const ModelSpec& spec, const ParameterVector& theta_si,
                               const MetaParams& meta, const std::vector<MetaStepRecord>& tape,
                               const FrameBatch& eval_chunk,
                               const std::vector<CoordinatePosition>* positions = nullptr) {
    meta.validate();
    std::vector<CoordinatePosition> local_positions;
    if (meta.variant == InputVariant::position && positions == nullptr) {
        local_positions = coordinate_positions(theta_si);
        positions = &local_positions;
    }
    ParameterVector theta = theta_si;
    CoordinateStates states = CoordinateStates::initial(theta.size(), meta.hidden);
    for (const auto& rec : tape) {
        ParameterVector grad = theta.zeros_like();
        Eigen::Map<Vector>(grad.values.data(), static_cast<Eigen::Index>(grad.values.size())) =
            rec.grad;
        AdaptStepOutput out = adapt_step_all(meta, states, theta, rec.loss, grad, positions);
        theta = std::move(out.theta);
        states = std::move(out.states);
    }
    const Matrix post = forward(spec, theta, eval_chunk.features);
    return cross_entropy_loss(post, eval_chunk.labels);
}

struct MetaTrainConfig {
    int hidden = 20;
    InputVariant variant = InputVariant::value;
    PreprocessConfig pre;
    int steps = 1;
    int epochs = 10;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
};

struct MetaTrainLogEntry {
    int epoch = 0;       // 0 = initialization (train_j repeats val_j there)
    double train_j = 0.0;
    double val_j = 0.0;
    long long wall_ms = 0;
};

// Meta-training loop: seeded pair shuffling, one Adam update per pair, and
// per-epoch validation selection. Returns the parameters with the best
// validation objective (never worse than the initialization).
inline MetaParams train_meta(const ModelSpec& spec, const ParameterVector& theta_si,
                             ChunkPlan& train_plan, ChunkPlan& val_plan, TargetRegime regime,
                             const MetaTrainConfig& cfg,
                             std::vector<MetaTrainLogEntry>* log = nullptr) {
    if (train_plan.pairs.empty() || val_plan.pairs.empty()) {
        throw DataError("train_meta: both plans need at least one chunk pair");
    }
    if (regime == TargetRegime::unsupervised) {
        pseudo_label_chunks(spec, theta_si, train_plan);
        pseudo_label_chunks(spec, theta_si, val_plan);
    }
    std::vector<CoordinatePosition> positions;
    const std::vector<CoordinatePosition>* pos = nullptr;
    if (cfg.variant == InputVariant::position) {
        positions = coordinate_positions(theta_si);
        pos = &positions;
    }

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed_ms = [&t0]() {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    MetaParams params = init_meta_params(cfg.hidden, cfg.variant,
                                         derive_seed(cfg.seed, 0x4d31u), cfg.pre);
    MetaParams best = params;
    double best_val =
        meta_loss(spec, theta_si, params, val_plan, regime, cfg.steps);
    if (log) log->push_back({0, best_val, best_val, elapsed_ms()});

    AdamState adam = AdamState::zero(params.phi.size());
    const AdamConfig adam_cfg{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
    Rng shuffle_rng(derive_seed(cfg.seed, 0x4d32u));
    std::vector<std::size_t> order(train_plan.pairs.size());
    std::iota(order.begin(), order.end(), 0u);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_j = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const auto& pair = train_plan.pairs[order[k]];
            const MetaGradient mg =
                meta_gradient(spec, theta_si, params, train_plan, pair, regime, cfg.steps, pos);
            if (!std::isfinite(mg.j_value) || !mg.d_phi.allFinite()) {
                throw NumericError("train_meta: divergence at epoch " + std::to_string(epoch) +
                                   ", pair " + std::to_string(order[k]));
            }
            train_j += mg.j_value;
            adam_step(adam, params.phi, mg.d_phi, adam_cfg);
        }
        const double val_j = meta_loss(spec, theta_si, params, val_plan, regime, cfg.steps);
        if (!std::isfinite(val_j)) {
            throw NumericError("train_meta: non-finite validation objective at epoch " +
                               std::to_string(epoch));
        }
        if (log) log->push_back({epoch, train_j, val_j, elapsed_ms()});
        if (val_j < best_val) {
            best_val = val_j;
            best = params;
        }
    }
    return best;
}

}  // namespace mlad
