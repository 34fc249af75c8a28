#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "mlad/model_io.hpp"
#include "mlad/network.hpp"

namespace mlad {

// Per-speaker evaluation sums. Aggregates are recomputed from these rows in
// speaker order, so the summary always matches the breakdown exactly.
struct SpeakerEval {
    int speaker = 0;
    double ce_sum = 0.0;
    std::size_t frames = 0;
    std::size_t errors = 0;      // misclassified non-silence frames
    std::size_t nonsilence = 0;

    double mean_ce() const { return frames ? ce_sum / static_cast<double>(frames) : 0.0; }
    double fer() const {
        return nonsilence ? static_cast<double>(errors) / static_cast<double>(nonsilence) : 0.0;
    }
};

struct MethodReport {
    std::string method;
    std::vector<SpeakerEval> speakers;

    double total_ce() const {
        double s = 0.0;
        for (const auto& e : speakers) s += e.ce_sum;
        return s;
    }
    std::size_t total_frames() const {
        std::size_t s = 0;
        for (const auto& e : speakers) s += e.frames;
        return s;
    }
    std::size_t total_errors() const {
        std::size_t s = 0;
        for (const auto& e : speakers) s += e.errors;
        return s;
    }
    std::size_t total_nonsilence() const {
        std::size_t s = 0;
        for (const auto& e : speakers) s += e.nonsilence;
        return s;
    }
    double mean_ce() const {
        const std::size_t f = total_frames();
        return f ? total_ce() / static_cast<double>(f) : 0.0;
    }
    double fer() const {
        const std::size_t n = total_nonsilence();
        return n ? static_cast<double>(total_errors()) / static_cast<double>(n) : 0.0;
    }
};

struct EvalReport {
    int report_version = 1;
    std::uint64_t seed = 0;
    Json config_echo;
    std::vector<MethodReport> rows;

    const MethodReport* find(const std::string& method) const {
        for (const auto& r : rows) {
            if (r.method == method) return &r;
        }
        return nullptr;
    }
};

// CE sum over all frames plus error counts over non-silence frames.
inline SpeakerEval evaluate_frames(const ModelSpec& spec, const ParameterVector& theta,
                                   const FrameBatch& batch, const Overlay& overlay = {},
                                   int speaker = 0) {
    SpeakerEval eval;
    eval.speaker = speaker;
    if (batch.num_frames() == 0) return eval;
    const Matrix post = forward(spec, theta, batch.features, overlay);
    eval.ce_sum = cross_entropy_loss(post, batch.labels);
    eval.frames = static_cast<std::size_t>(batch.num_frames());
    for (Eigen::Index f = 0; f < post.rows(); ++f) {
        const std::size_t fi = static_cast<std::size_t>(f);
        if (!batch.is_silence.empty() && batch.is_silence[fi]) continue;
        ++eval.nonsilence;
        int best = 0;
        double best_p = post(f, 0);
        for (Eigen::Index k = 1; k < post.cols(); ++k) {
            if (post(f, k) > best_p) {
                best_p = post(f, k);
                best = static_cast<int>(k);
            }
        }
        if (best != batch.labels[fi]) ++eval.errors;
    }
    return eval;
}

inline Json report_to_json(const EvalReport& report) {
    Json j;
    j["report_version"] = report.report_version;
    j["seed"] = report.seed;
    if (!report.config_echo.is_null()) j["config"] = report.config_echo;
    Json rows = Json::array();
    for (const auto& row : report.rows) {
        Json r;
        r["method"] = row.method;
        r["mean_ce"] = row.mean_ce();
        r["fer"] = row.fer();
        r["num_speakers"] = row.speakers.size();
        r["num_frames"] = row.total_frames();
        r["num_nonsilence_frames"] = row.total_nonsilence();
        Json per = Json::array();
        for (const auto& s : row.speakers) {
            per.push_back({{"speaker", s.speaker},
                           {"ce_sum", s.ce_sum},
                           {"mean_ce", s.mean_ce()},
                           {"fer", s.fer()},
                           {"frames", s.frames},
                           {"errors", s.errors},
                           {"nonsilence_frames", s.nonsilence}});
        }
        r["per_speaker"] = std::move(per);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

// Fixed-width table with methods as rows, mirroring the usual adaptation
// result layout.
inline std::string report_table(const EvalReport& report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s %12s\n", "method", "mean_ce", "fer",
                  "speakers", "frames");
    out += line;
    out += std::string(57, '-');
    out += '\n';
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-12s %10.5f %10.5f %10zu %12zu\n", row.method.c_str(),
                      row.mean_ce(), row.fer(), row.speakers.size(), row.total_frames());
        out += line;
    }
    return out;
}

}  // namespace mlad
