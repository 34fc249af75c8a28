#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mlad/model.hpp"
#include "mlad/network.hpp"
#include "mlad/rng.hpp"

namespace mlad {

// Minibatch SGD settings for the speaker-independent model. The update uses
// the summed-CE gradient of each minibatch, so the useful learning-rate range
// scales with 1/minibatch_size; the defaults below are tuned together.
struct SiTrainConfig {
    int epochs = 20;
    double learning_rate = 2e-3;
    int minibatch_size = 200;
};

struct SiTrainLogEntry {
    int epoch = 0;          // 0 = initialization
    double val_ce = 0.0;    // mean per-frame validation CE
    double val_fer = 0.0;   // validation frame error rate (all frames)
};

namespace detail {

inline FrameBatch take_frames(const FrameBatch& batch, const std::vector<std::size_t>& idx,
                              std::size_t begin, std::size_t end) {
    FrameBatch out;
    out.features.resize(static_cast<Eigen::Index>(end - begin), batch.features.cols());
    out.labels.resize(end - begin);
    for (std::size_t k = begin; k < end; ++k) {
        out.features.row(static_cast<Eigen::Index>(k - begin)) =
            batch.features.row(static_cast<Eigen::Index>(idx[k]));
        out.labels[k - begin] = batch.labels[idx[k]];
    }
    return out;
}

inline double mean_val_ce(const ModelSpec& spec, const ParameterVector& theta,
                          const FrameBatch& val) {
    const Matrix post = forward(spec, theta, val.features);
    return cross_entropy_loss(post, val.labels) / static_cast<double>(val.num_frames());
}

}  // namespace detail

// Trains the frame classifier with seeded minibatch SGD and returns the
// weights with the lowest validation CE seen among the initialization and
// the per-epoch checkpoints. Bit-deterministic for a fixed seed.
inline ParameterVector train_si_model(const ModelSpec& spec, const FrameBatch& train,
                                      const FrameBatch& val, const SiTrainConfig& cfg,
                                      std::uint64_t seed,
                                      std::vector<SiTrainLogEntry>* log = nullptr) {
    spec.validate();
    train.validate(spec.num_classes);
    val.validate(spec.num_classes);
    if (train.num_frames() == 0) throw DataError("train_si_model: empty training data");
    if (cfg.minibatch_size < 1) throw DataError("train_si_model: minibatch_size must be >= 1");

    ParameterVector theta = init_parameters(spec, derive_seed(seed, 0x51u));
    Rng shuffle_rng(derive_seed(seed, 0x52u));

    // With no validation data, selection degenerates to the last epoch.
    const bool have_val = val.num_frames() > 0;

    auto evaluate_val = [&](const ParameterVector& t, int epoch) {
        if (!have_val) return 0.0;
        double ce = detail::mean_val_ce(spec, t, val);
        if (log) {
            const auto pred = predict_labels(spec, t, val.features);
            std::size_t errors = 0;
            for (std::size_t f = 0; f < pred.size(); ++f) {
                if (pred[f] != val.labels[f]) ++errors;
            }
            log->push_back({epoch, ce, static_cast<double>(errors) / static_cast<double>(pred.size())});
        }
        return ce;
    };

    ParameterVector best = theta;
    double best_ce = evaluate_val(theta, 0);

    std::vector<std::size_t> order(static_cast<std::size_t>(train.num_frames()));
    std::iota(order.begin(), order.end(), 0u);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        const std::size_t n = order.size();
        const std::size_t bs = static_cast<std::size_t>(cfg.minibatch_size);
        for (std::size_t begin = 0; begin < n; begin += bs) {
            const std::size_t end = std::min(begin + bs, n);
            const FrameBatch mb = detail::take_frames(train, order, begin, end);
            const BackwardResult bw = backward(spec, theta, mb);
            if (!std::isfinite(bw.loss)) {
                throw NumericError("train_si_model: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", minibatch offset " +
                                   std::to_string(begin));
            }
            for (std::size_t k = 0; k < theta.values.size(); ++k) {
                theta.values[k] -= cfg.learning_rate * bw.grad.values[k];
            }
        }
        const double ce = evaluate_val(theta, epoch);
        if (!std::isfinite(ce)) {
            throw NumericError("train_si_model: non-finite validation CE at epoch " +
                               std::to_string(epoch));
        }
        if (!have_val || ce < best_ce) {
            best_ce = ce;
            best = theta;
        }
    }
    return best;
}

}  // namespace mlad
