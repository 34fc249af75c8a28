#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mlad/model.hpp"
#include "mlad/numerics.hpp"
#include "mlad/rng.hpp"

namespace mlad {

// Synthetic corpus settings. Class 0 is silence. A "speaker" is a random
// invertible affine map on feature space plus additive noise, giving a
// controllable train/test mismatch; the severity knobs live here too.
struct CorpusConfig {
    int num_classes = 8;
    int feature_dim = 12;
    int frames_per_second = 100;
    int train_speakers = 13;
    int val_speakers = 5;
    int test_speakers = 10;
    int utterances_per_speaker = 1;
    int frames_per_utterance = 3800;
    double silence_fraction = 0.12;
    int context_width = 7;

    double class_spread = 1.5;            // scale of the class prototype means
    double class_sigma = 0.35;            // within-class noise before the speaker map
    double speaker_scale_jitter = 0.35;   // diagonal scales drawn from [1-j, 1+j]
    int speaker_rotations = 6;            // number of random plane rotations
    double speaker_rotation_angle = 0.5;  // max |angle| per rotation
    double speaker_bias_scale = 0.6;
    double noise_sigma = 0.25;

    std::uint64_t seed = 1;

    int total_speakers() const { return train_speakers + val_speakers + test_speakers; }

    void validate() const {
        if (num_classes < 2) throw DataError("corpus: num_classes must be >= 2 (incl. silence)");
        if (feature_dim < 1) throw DataError("corpus: feature_dim must be >= 1");
        if (frames_per_second < 1) throw DataError("corpus: frames_per_second must be >= 1");
        if (context_width < 1 || context_width % 2 == 0) {
            throw DataError("corpus: context_width must be odd and >= 1");
        }
        if (silence_fraction < 0.0 || silence_fraction >= 1.0) {
            throw DataError("corpus: silence_fraction must be in [0, 1)");
        }
        if (frames_per_utterance < 1) throw DataError("corpus: frames_per_utterance must be >= 1");
        if (utterances_per_speaker < 1) {
            throw DataError("corpus: utterances_per_speaker must be >= 1");
        }
        if (train_speakers < 0 || val_speakers < 0 || test_speakers < 0) {
            throw DataError("corpus: speaker counts must be non-negative");
        }
        if (speaker_scale_jitter < 0.0 || speaker_scale_jitter > 0.9) {
            throw DataError("corpus: speaker_scale_jitter must be in [0, 0.9]");
        }
    }
};

// Plane rotation between two feature axes.
struct PlaneRotation {
    int axis_a = 0;
    int axis_b = 1;
    double angle = 0.0;
};

struct SpeakerProfile {
    int speaker_id = 0;
    Vector scales;                         // diagonal, bounded away from zero
    std::vector<PlaneRotation> rotations;  // applied in order after scaling
    Vector bias;
    double noise_sigma = 0.0;

    // x -> R(Sx) + bias
    Vector apply(const Vector& x) const {
        Vector y = (x.array() * scales.array()).matrix();
        for (const auto& r : rotations) {
            const double c = std::cos(r.angle);
            const double s = std::sin(r.angle);
            const double a = y[r.axis_a];
            const double b = y[r.axis_b];
            y[r.axis_a] = c * a - s * b;
            y[r.axis_b] = s * a + c * b;
        }
        return y + bias;
    }
};

struct Utterance {
    int speaker_id = 0;
    FrameBatch frames;
};

inline std::size_t silence_count(const FrameBatch& frames) {
    std::size_t n = 0;
    for (auto s : frames.is_silence) n += s ? 1u : 0u;
    return n;
}

struct Corpus {
    CorpusConfig config;
    std::vector<SpeakerProfile> profiles;  // all speakers, id order
    std::vector<Utterance> train;
    std::vector<Utterance> val;
    std::vector<Utterance> test;

    const std::vector<Utterance>& split(const std::string& name) const {
        if (name == "train") return train;
        if (name == "val") return val;
        if (name == "test") return test;
        throw DataError("unknown split '" + name + "'");
    }

    std::vector<Utterance> speaker_utterances(const std::vector<Utterance>& split_utts,
                                              int speaker_id) const {
        std::vector<Utterance> out;
        for (const auto& u : split_utts) {
            if (u.speaker_id == speaker_id) out.push_back(u);
        }
        return out;
    }
};

// Class-conditional Gaussian prototype means, shared across speakers. Drawn
// from a stream derived only from the seed, so they do not depend on the
// speaker counts.
inline Matrix class_prototypes(const CorpusConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0x70726f74u));  // "prot"
    Matrix mu(cfg.num_classes, cfg.feature_dim);
    for (int k = 0; k < cfg.num_classes; ++k) {
        for (int d = 0; d < cfg.feature_dim; ++d) {
            mu(k, d) = cfg.class_spread * rng.normal();
        }
    }
    return mu;
}

inline SpeakerProfile make_speaker_profile(const CorpusConfig& cfg, int speaker_id) {
    Rng rng(derive_seed(cfg.seed, 0x73706bu, static_cast<std::uint64_t>(speaker_id)));  // "spk"
    SpeakerProfile p;
    p.speaker_id = speaker_id;
    p.scales.resize(cfg.feature_dim);
    for (int d = 0; d < cfg.feature_dim; ++d) {
        p.scales[d] = rng.uniform(1.0 - cfg.speaker_scale_jitter, 1.0 + cfg.speaker_scale_jitter);
    }
    p.rotations.reserve(static_cast<std::size_t>(cfg.speaker_rotations));
    for (int r = 0; r < cfg.speaker_rotations; ++r) {
        PlaneRotation rot;
        rot.axis_a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(cfg.feature_dim)));
        rot.axis_b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(cfg.feature_dim - 1)));
        if (rot.axis_b >= rot.axis_a) ++rot.axis_b;
        rot.angle = rng.uniform(-cfg.speaker_rotation_angle, cfg.speaker_rotation_angle);
        p.rotations.push_back(rot);
    }
    p.bias.resize(cfg.feature_dim);
    for (int d = 0; d < cfg.feature_dim; ++d) {
        p.bias[d] = rng.uniform(-cfg.speaker_bias_scale, cfg.speaker_bias_scale);
    }
    p.noise_sigma = cfg.noise_sigma;
    return p;
}

namespace detail {

// Label sequence: leading/trailing silence runs framing speech segments with
// interior pauses. The silence budget round(fraction * frames) is hit
// exactly; speech segments draw a class from 1..K-1.
inline std::vector<int> utterance_labels(const CorpusConfig& cfg, Rng& rng) {
    const int frames = cfg.frames_per_utterance;
    const int budget = static_cast<int>(std::llround(cfg.silence_fraction * frames));
    const int lead = budget * 3 / 10;
    const int trail = budget * 3 / 10;
    int interior = budget - lead - trail;
    int speech = frames - budget;

    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(frames));
    labels.insert(labels.end(), static_cast<std::size_t>(lead), 0);
    while (speech > 0) {
        const int seg = std::min<int>(speech, 5 + static_cast<int>(rng.bounded(11)));
        const int cls = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(
                                cfg.num_classes - 1)));
        labels.insert(labels.end(), static_cast<std::size_t>(seg), cls);
        speech -= seg;
        if (speech > 0 && interior > 0) {
            const int pause = std::min<int>(interior, 1 + static_cast<int>(rng.bounded(4)));
            labels.insert(labels.end(), static_cast<std::size_t>(pause), 0);
            interior -= pause;
        }
    }
    labels.insert(labels.end(), static_cast<std::size_t>(interior + trail), 0);
    return labels;
}

}  // namespace detail

inline Utterance generate_utterance(const CorpusConfig& cfg, const Matrix& prototypes,
                                    const SpeakerProfile& profile, int utterance_index) {
    Rng rng(derive_seed(cfg.seed, 0x757474u,  // "utt"
                        static_cast<std::uint64_t>(profile.speaker_id) * 0x10000u +
                            static_cast<std::uint64_t>(utterance_index)));
    Utterance utt;
    utt.speaker_id = profile.speaker_id;
    const std::vector<int> labels = detail::utterance_labels(cfg, rng);
    const int frames = static_cast<int>(labels.size());
    utt.frames.features.resize(frames, cfg.feature_dim);
    utt.frames.labels = labels;
    utt.frames.is_silence.resize(static_cast<std::size_t>(frames));

    Vector draw(cfg.feature_dim);
    for (int f = 0; f < frames; ++f) {
        const int cls = labels[static_cast<std::size_t>(f)];
        for (int d = 0; d < cfg.feature_dim; ++d) {
            draw[d] = prototypes(cls, d) + cfg.class_sigma * rng.normal();
        }
        Vector x = profile.apply(draw);
        for (int d = 0; d < cfg.feature_dim; ++d) {
            x[d] += profile.noise_sigma * rng.normal();
            // Quantize at generation so saved datasets reproduce the
            // in-memory corpus exactly.
            utt.frames.features(f, d) = static_cast<double>(static_cast<float>(x[d]));
        }
        utt.frames.is_silence[static_cast<std::size_t>(f)] = cls == 0 ? 1 : 0;
    }
    return utt;
}

// Deterministic per (config, seed); train/val/test speakers are disjoint by
// construction (global speaker ids).
inline Corpus generate_corpus(const CorpusConfig& cfg) {
    cfg.validate();
    Corpus corpus;
    corpus.config = cfg;
    const Matrix prototypes = class_prototypes(cfg);
    corpus.profiles.reserve(static_cast<std::size_t>(cfg.total_speakers()));
    for (int id = 0; id < cfg.total_speakers(); ++id) {
        corpus.profiles.push_back(make_speaker_profile(cfg, id));
    }
    auto fill = [&](std::vector<Utterance>& out, int first, int count) {
        for (int s = 0; s < count; ++s) {
            const auto& profile = corpus.profiles[static_cast<std::size_t>(first + s)];
            for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
                out.push_back(generate_utterance(cfg, prototypes, profile, u));
            }
        }
    };
    fill(corpus.train, 0, cfg.train_speakers);
    fill(corpus.val, cfg.train_speakers, cfg.val_speakers);
    fill(corpus.test, cfg.train_speakers + cfg.val_speakers, cfg.test_speakers);
    return corpus;
}

// Context splicing: frame t becomes the concatenation of frames
// t-(w-1)/2 .. t+(w-1)/2, with boundary frames repeated at the edges. Label
// and silence flag come from the centre frame.
inline FrameBatch splice_context(const FrameBatch& frames, int context_width) {
    if (context_width < 1 || context_width % 2 == 0) {
        throw DataError("splice_context: context width must be odd and >= 1");
    }
    const Eigen::Index n = frames.num_frames();
    const Eigen::Index d = frames.features.cols();
    const int half = (context_width - 1) / 2;
    FrameBatch out;
    out.features.resize(n, d * context_width);
    out.labels = frames.labels;
    out.is_silence = frames.is_silence;
    for (Eigen::Index t = 0; t < n; ++t) {
        for (int k = -half; k <= half; ++k) {
            Eigen::Index src = t + k;
            if (src < 0) src = 0;
            if (src >= n) src = n - 1;
            out.features.block(t, static_cast<Eigen::Index>(k + half) * d, 1, d) =
                frames.features.row(src);
        }
    }
    return out;
}

struct FilterConfig {
    double chunk_ms = 50.0;
    double silence_threshold = 0.10;

    void validate() const {
        if (!(chunk_ms > 0.0)) throw DataError("filter: chunk_ms must be positive");
        if (silence_threshold < 0.0 || silence_threshold > 1.0) {
            throw DataError("filter: silence_threshold must be in [0, 1]");
        }
    }
};

// Trims boundary silence runs, splits the remainder into chunk_ms pieces
// (the trailing partial piece included) and drops every piece whose silence
// fraction exceeds the threshold.
inline std::vector<FrameBatch> silence_filter(const FrameBatch& frames, const FilterConfig& cfg,
                                              int frames_per_second) {
    cfg.validate();
    if (frames_per_second < 1) throw DataError("silence_filter: fps must be >= 1");
    const Eigen::Index n = frames.num_frames();
    Eigen::Index begin = 0;
    Eigen::Index end = n;
    auto silent = [&](Eigen::Index t) {
        return !frames.is_silence.empty() && frames.is_silence[static_cast<std::size_t>(t)] != 0;
    };
    while (begin < end && silent(begin)) ++begin;
    while (end > begin && silent(end - 1)) --end;

    const Eigen::Index chunk_frames = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::llround(cfg.chunk_ms * frames_per_second / 1000.0)));
    std::vector<FrameBatch> out;
    for (Eigen::Index at = begin; at < end; at += chunk_frames) {
        const Eigen::Index len = std::min(chunk_frames, end - at);
        std::size_t silent_frames = 0;
        for (Eigen::Index t = at; t < at + len; ++t) {
            if (silent(t)) ++silent_frames;
        }
        if (static_cast<double>(silent_frames) > cfg.silence_threshold * static_cast<double>(len)) {
            continue;
        }
        FrameBatch chunk;
        chunk.features = frames.features.middleRows(at, len);
        chunk.labels.assign(frames.labels.begin() + at, frames.labels.begin() + at + len);
        if (!frames.is_silence.empty()) {
            chunk.is_silence.assign(frames.is_silence.begin() + at,
                                    frames.is_silence.begin() + at + len);
        }
        out.push_back(std::move(chunk));
    }
    return out;
}

// Splice, filter, and re-concatenate one utterance into its surviving frame
// stream (the unit that chunking never crosses).
inline FrameBatch prepare_utterance(const Utterance& utt, int context_width,
                                    const FilterConfig& filter, int frames_per_second) {
    const FrameBatch spliced = splice_context(utt.frames, context_width);
    return concat_batches(silence_filter(spliced, filter, frames_per_second));
}

inline std::vector<FrameBatch> prepare_utterances(const std::vector<Utterance>& utts,
                                                  int context_width, const FilterConfig& filter,
                                                  int frames_per_second) {
    std::vector<FrameBatch> out;
    out.reserve(utts.size());
    for (const auto& u : utts) {
        FrameBatch b = prepare_utterance(u, context_width, filter, frames_per_second);
        if (b.num_frames() > 0) out.push_back(std::move(b));
    }
    return out;
}

// First `seconds` of a speaker's filtered stream, concatenated across the
// prepared segments in temporal order; shorter speakers yield fewer frames.
inline FrameBatch take_adaptation_seconds(const std::vector<FrameBatch>& segments,
                                          double seconds, int frames_per_second) {
    if (!(seconds > 0.0)) throw DataError("take_adaptation_seconds: seconds must be positive");
    const Eigen::Index want =
        static_cast<Eigen::Index>(std::llround(seconds * frames_per_second));
    std::vector<FrameBatch> parts;
    Eigen::Index have = 0;
    for (const auto& seg : segments) {
        if (have >= want) break;
        const Eigen::Index take = std::min(seg.num_frames(), want - have);
        FrameBatch part;
        part.features = seg.features.topRows(take);
        part.labels.assign(seg.labels.begin(), seg.labels.begin() + take);
        if (!seg.is_silence.empty()) {
            part.is_silence.assign(seg.is_silence.begin(), seg.is_silence.begin() + take);
        }
        have += take;
        parts.push_back(std::move(part));
    }
    if (have == 0) throw DataError("no adaptation frames");
    return concat_batches(parts);
}

inline FrameBatch take_adaptation_seconds(const std::vector<Utterance>& utts, int context_width,
                                          const FilterConfig& filter, double seconds,
                                          int frames_per_second) {
    return take_adaptation_seconds(prepare_utterances(utts, context_width, filter,
                                                      frames_per_second),
                                   seconds, frames_per_second);
}

// Everything after the adaptation prefix, as one evaluation batch.
inline FrameBatch remaining_after_seconds(const std::vector<FrameBatch>& segments,
                                          double seconds, int frames_per_second) {
    const Eigen::Index skip =
        static_cast<Eigen::Index>(std::llround(seconds * frames_per_second));
    std::vector<FrameBatch> parts;
    Eigen::Index seen = 0;
    for (const auto& seg : segments) {
        const Eigen::Index n = seg.num_frames();
        if (seen + n <= skip) {
            seen += n;
            continue;
        }
        const Eigen::Index from = std::max<Eigen::Index>(0, skip - seen);
        FrameBatch part;
        part.features = seg.features.bottomRows(n - from);
        part.labels.assign(seg.labels.begin() + from, seg.labels.end());
        if (!seg.is_silence.empty()) {
            part.is_silence.assign(seg.is_silence.begin() + from, seg.is_silence.end());
        }
        parts.push_back(std::move(part));
        seen += n;
    }
    if (parts.empty()) {
        FrameBatch empty;
        empty.features.resize(0, segments.empty() ? 0 : segments.front().features.cols());
        return empty;
    }
    return concat_batches(parts);
}

}  // namespace mlad
