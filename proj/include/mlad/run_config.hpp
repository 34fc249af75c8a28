#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "mlad/dataset_io.hpp"
#include "mlad/meta_training.hpp"
#include "mlad/si_training.hpp"
#include "mlad/speaker_sim.hpp"

namespace mlad {

// Per-method adaptation defaults carried by the run configuration.
struct AdaptationDefaults {
    double seconds = 10.0;
    double all_lr = 0.01;
    int all_epochs = 3;
    double lhuc_lr = 0.7;
    int lhuc_epochs = 3;
    double linear_lr = 0.01;
    int linear_epochs = 3;
    int linear_layer = -1;  // -1 = middle hidden layer
};

struct MetaDefaults {
    int hidden = 20;
    InputVariant variant = InputVariant::value;
    double p = 10.0;
    int steps = 1;
    double learning_rate = 0.001;
    int epochs = 10;
    int chunk_len = 1000;
};

// One config document for the whole pipeline; sections are optional but
// unknown keys anywhere are rejected.
struct RunConfig {
    CorpusConfig corpus;
    FilterConfig filter;
    std::vector<int> model_hidden_dims = {64, 64, 64, 64, 64, 64};
    SiTrainConfig si_train;
    AdaptationDefaults adaptation;
    MetaDefaults meta;
};

namespace config_detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object()) throw DataError("config: " + where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw DataError("config: unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void maybe(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace config_detail

inline InputVariant input_variant_from_string(const std::string& s) {
    if (s == "value") return InputVariant::value;
    if (s == "position") return InputVariant::position;
    throw DataError("unknown input variant '" + s + "' (expected value|position)");
}

inline std::string to_string(InputVariant v) {
    return v == InputVariant::value ? "value" : "position";
}

inline RunConfig run_config_from_json(const Json& j) {
    using config_detail::check_keys;
    using config_detail::maybe;
    check_keys(j, {"corpus", "filter", "model", "si_train", "adaptation", "meta"}, "document");
    RunConfig cfg;
    if (j.contains("corpus")) {
        const Json& c = j.at("corpus");
        check_keys(c,
                   {"num_classes", "feature_dim", "frames_per_second", "train_speakers",
                    "val_speakers", "test_speakers", "utterances_per_speaker",
                    "frames_per_utterance", "silence_fraction", "context_width", "class_spread",
                    "class_sigma", "speaker_scale_jitter", "speaker_rotations",
                    "speaker_rotation_angle", "speaker_bias_scale", "noise_sigma", "seed"},
                   "corpus");
        maybe(c, "num_classes", cfg.corpus.num_classes);
        maybe(c, "feature_dim", cfg.corpus.feature_dim);
        maybe(c, "frames_per_second", cfg.corpus.frames_per_second);
        maybe(c, "train_speakers", cfg.corpus.train_speakers);
        maybe(c, "val_speakers", cfg.corpus.val_speakers);
        maybe(c, "test_speakers", cfg.corpus.test_speakers);
        maybe(c, "utterances_per_speaker", cfg.corpus.utterances_per_speaker);
        maybe(c, "frames_per_utterance", cfg.corpus.frames_per_utterance);
        maybe(c, "silence_fraction", cfg.corpus.silence_fraction);
        maybe(c, "context_width", cfg.corpus.context_width);
        maybe(c, "class_spread", cfg.corpus.class_spread);
        maybe(c, "class_sigma", cfg.corpus.class_sigma);
        maybe(c, "speaker_scale_jitter", cfg.corpus.speaker_scale_jitter);
        maybe(c, "speaker_rotations", cfg.corpus.speaker_rotations);
        maybe(c, "speaker_rotation_angle", cfg.corpus.speaker_rotation_angle);
        maybe(c, "speaker_bias_scale", cfg.corpus.speaker_bias_scale);
        maybe(c, "noise_sigma", cfg.corpus.noise_sigma);
        maybe(c, "seed", cfg.corpus.seed);
    }
    if (j.contains("filter")) {
        const Json& f = j.at("filter");
        check_keys(f, {"chunk_ms", "silence_threshold"}, "filter");
        maybe(f, "chunk_ms", cfg.filter.chunk_ms);
        maybe(f, "silence_threshold", cfg.filter.silence_threshold);
    }
    if (j.contains("model")) {
        const Json& m = j.at("model");
        check_keys(m, {"hidden_dims"}, "model");
        maybe(m, "hidden_dims", cfg.model_hidden_dims);
    }
    if (j.contains("si_train")) {
        const Json& s = j.at("si_train");
        check_keys(s, {"epochs", "learning_rate", "minibatch_size"}, "si_train");
        maybe(s, "epochs", cfg.si_train.epochs);
        maybe(s, "learning_rate", cfg.si_train.learning_rate);
        maybe(s, "minibatch_size", cfg.si_train.minibatch_size);
    }
    if (j.contains("adaptation")) {
        const Json& a = j.at("adaptation");
        check_keys(a,
                   {"seconds", "all_lr", "all_epochs", "lhuc_lr", "lhuc_epochs", "linear_lr",
                    "linear_epochs", "linear_layer"},
                   "adaptation");
        maybe(a, "seconds", cfg.adaptation.seconds);
        maybe(a, "all_lr", cfg.adaptation.all_lr);
        maybe(a, "all_epochs", cfg.adaptation.all_epochs);
        maybe(a, "lhuc_lr", cfg.adaptation.lhuc_lr);
        maybe(a, "lhuc_epochs", cfg.adaptation.lhuc_epochs);
        maybe(a, "linear_lr", cfg.adaptation.linear_lr);
        maybe(a, "linear_epochs", cfg.adaptation.linear_epochs);
        maybe(a, "linear_layer", cfg.adaptation.linear_layer);
    }
    if (j.contains("meta")) {
        const Json& m = j.at("meta");
        check_keys(m,
                   {"hidden", "input_variant", "p", "steps", "learning_rate", "epochs",
                    "chunk_len"},
                   "meta");
        maybe(m, "hidden", cfg.meta.hidden);
        if (m.contains("input_variant")) {
            cfg.meta.variant = input_variant_from_string(m.at("input_variant").get<std::string>());
        }
        maybe(m, "p", cfg.meta.p);
        maybe(m, "steps", cfg.meta.steps);
        maybe(m, "learning_rate", cfg.meta.learning_rate);
        maybe(m, "epochs", cfg.meta.epochs);
        maybe(m, "chunk_len", cfg.meta.chunk_len);
    }
    return cfg;
}

inline Json run_config_to_json(const RunConfig& cfg) {
    Json j;
    j["corpus"] = corpus_config_to_json(cfg.corpus);
    j["filter"] = {{"chunk_ms", cfg.filter.chunk_ms},
                   {"silence_threshold", cfg.filter.silence_threshold}};
    j["model"] = {{"hidden_dims", cfg.model_hidden_dims}};
    j["si_train"] = {{"epochs", cfg.si_train.epochs},
                     {"learning_rate", cfg.si_train.learning_rate},
                     {"minibatch_size", cfg.si_train.minibatch_size}};
    j["adaptation"] = {{"seconds", cfg.adaptation.seconds},
                       {"all_lr", cfg.adaptation.all_lr},
                       {"all_epochs", cfg.adaptation.all_epochs},
                       {"lhuc_lr", cfg.adaptation.lhuc_lr},
                       {"lhuc_epochs", cfg.adaptation.lhuc_epochs},
                       {"linear_lr", cfg.adaptation.linear_lr},
                       {"linear_epochs", cfg.adaptation.linear_epochs},
                       {"linear_layer", cfg.adaptation.linear_layer}};
    j["meta"] = {{"hidden", cfg.meta.hidden},
                 {"input_variant", to_string(cfg.meta.variant)},
                 {"p", cfg.meta.p},
                 {"steps", cfg.meta.steps},
                 {"learning_rate", cfg.meta.learning_rate},
                 {"epochs", cfg.meta.epochs},
                 {"chunk_len", cfg.meta.chunk_len}};
    return j;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_json(io_detail::load_json(path));
}

// Run configuration as echoed into a dataset manifest, with defaults for
// older or absent sections.
inline RunConfig run_config_from_manifest(const Json& manifest) {
    RunConfig cfg;
    if (manifest.contains("run_config")) {
        cfg = run_config_from_json(manifest.at("run_config"));
    }
    cfg.corpus = corpus_config_from_json(manifest.at("config"));
    return cfg;
}

}  // namespace mlad
