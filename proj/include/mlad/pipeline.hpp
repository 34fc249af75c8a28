#pragma once

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "mlad/adaptation.hpp"
#include "mlad/meta_training.hpp"
#include "mlad/report.hpp"
#include "mlad/speaker_sim.hpp"

namespace mlad {

// Ordered speaker ids of a split (utterances are stored in speaker order).
inline std::vector<int> split_speaker_ids(const std::vector<Utterance>& utts) {
    std::vector<int> ids;
    for (const auto& u : utts) {
        if (ids.empty() || ids.back() != u.speaker_id) ids.push_back(u.speaker_id);
    }
    return ids;
}

// All surviving frames of a split as one training batch.
inline FrameBatch gather_split_frames(const std::vector<Utterance>& utts, int context_width,
                                      const FilterConfig& filter, int fps) {
    return concat_batches(prepare_utterances(utts, context_width, filter, fps));
}

// Chunk plan over every speaker of a split: each speaker's filtered
// utterance streams are chunked separately and the per-speaker plans merged.
inline ChunkPlan build_chunk_plan(const std::vector<Utterance>& utts, int context_width,
                                  const FilterConfig& filter, int fps, int chunk_len) {
    ChunkPlan plan;
    plan.chunk_len = chunk_len;
    for (int speaker : split_speaker_ids(utts)) {
        std::vector<Utterance> mine;
        for (const auto& u : utts) {
            if (u.speaker_id == speaker) mine.push_back(u);
        }
        const auto segments = prepare_utterances(mine, context_width, filter, fps);
        plan.append(make_chunks(segments, chunk_len, speaker));
    }
    return plan;
}

// One row request for the adaptation/evaluation loop. `adapt` false means
// the unadapted model ("original").
struct EvalMethod {
    std::string name;
    bool adapt = false;
    AdaptMethodConfig cfg;
};

struct AdaptEvalConfig {
    double seconds = 10.0;
    TargetRegime mode = TargetRegime::supervised;
    int context_width = 7;
    int fps = 100;
    FilterConfig filter;
    int threads = 1;
};

struct SpeakerAdaptData {
    int speaker = 0;
    FrameBatch adapt_batch;  // labels follow the requested regime
    FrameBatch eval_batch;   // true labels
};

// Per-speaker adaptation batches (first `seconds` of the filtered stream)
// and evaluation remainders. In the unsupervised mode the adaptation labels
// are replaced by the frozen model's own predictions.
inline std::vector<SpeakerAdaptData> prepare_adapt_eval_data(
    const ModelSpec& spec, const ParameterVector& theta_si,
    const std::vector<Utterance>& test_utts, const AdaptEvalConfig& cfg) {
    std::vector<SpeakerAdaptData> out;
    for (int speaker : split_speaker_ids(test_utts)) {
        std::vector<Utterance> mine;
        for (const auto& u : test_utts) {
            if (u.speaker_id == speaker) mine.push_back(u);
        }
        const auto segments = prepare_utterances(mine, cfg.context_width, cfg.filter, cfg.fps);
        SpeakerAdaptData data;
        data.speaker = speaker;
        data.adapt_batch = take_adaptation_seconds(segments, cfg.seconds, cfg.fps);
        data.eval_batch = remaining_after_seconds(segments, cfg.seconds, cfg.fps);
        if (data.eval_batch.num_frames() == 0) {
            throw DataError("speaker " + std::to_string(speaker) + " has no evaluation frames");
        }
        if (cfg.mode == TargetRegime::unsupervised) {
            data.adapt_batch.labels = predict_labels(spec, theta_si, data.adapt_batch.features);
        }
        out.push_back(std::move(data));
    }
    return out;
}

struct SpeakerAdaptedModels {
    int speaker = 0;
    std::vector<std::pair<std::string, AdaptResult>> by_method;
};

// Adapts and evaluates every test speaker under every requested method.
// Speakers are independent and may be processed in parallel; rows are
// assembled in speaker order either way.
inline EvalReport run_adapt_eval(const ModelSpec& spec, const ParameterVector& theta_si,
                                 const std::vector<Utterance>& test_utts,
                                 const std::vector<EvalMethod>& methods,
                                 const AdaptEvalConfig& cfg,
                                 std::vector<SpeakerAdaptedModels>* adapted_out = nullptr) {
    const std::vector<SpeakerAdaptData> data =
        prepare_adapt_eval_data(spec, theta_si, test_utts, cfg);

    std::vector<std::vector<SpeakerEval>> cells(methods.size(),
                                                std::vector<SpeakerEval>(data.size()));
    std::vector<SpeakerAdaptedModels> adapted(data.size());

    auto process_speaker = [&](std::size_t s) {
        const SpeakerAdaptData& d = data[s];
        adapted[s].speaker = d.speaker;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const EvalMethod& method = methods[m];
            if (!method.adapt) {
                cells[m][s] = evaluate_frames(spec, theta_si, d.eval_batch, {}, d.speaker);
                continue;
            }
            AdaptResult result = mlad::adapt(spec, theta_si, d.adapt_batch, method.cfg);
            cells[m][s] =
                evaluate_frames(spec, result.adapted, d.eval_batch, result.overlay(), d.speaker);
            if (adapted_out != nullptr) {
                adapted[s].by_method.emplace_back(method.name, std::move(result));
            }
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || data.size() <= 1) {
        for (std::size_t s = 0; s < data.size(); ++s) process_speaker(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        const int use = std::min<int>(threads, static_cast<int>(data.size()));
        for (int t = 0; t < use; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t s = next.fetch_add(1);
                    if (s >= data.size()) return;
                    process_speaker(s);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    EvalReport report;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        MethodReport row;
        row.method = methods[m].name;
        row.speakers = std::move(cells[m]);
        report.rows.push_back(std::move(row));
    }
    if (adapted_out != nullptr) *adapted_out = std::move(adapted);
    return report;
}

}  // namespace mlad
