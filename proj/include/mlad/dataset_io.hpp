#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mlad/model_io.hpp"
#include "mlad/speaker_sim.hpp"

namespace mlad {

// Dataset directory layout: manifest.json plus, per split subdirectory,
// frames.bin (f32), labels.bin (u32) and silence.bin (u8). Every binary file
// starts with the magic "MLAD", a little-endian u32 version and a u64
// element count.
namespace dataset_detail {

inline constexpr char kMagic[4] = {'M', 'L', 'A', 'D'};
inline constexpr std::uint32_t kVersion = 1;

inline void write_header(std::ofstream& out, std::uint64_t count) {
    out.write(kMagic, 4);
    std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
}

inline std::uint64_t read_header(std::ifstream& in, const std::filesystem::path& path) {
    char magic[4] = {};
    std::uint32_t version = 0;
    std::uint64_t count = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw DataError("bad magic in " + path.string());
    }
    if (version != kVersion) {
        throw DataError("unsupported dataset version in " + path.string());
    }
    return count;
}

template <typename T>
void write_array(const std::filesystem::path& path, const std::vector<T>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_header(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_array(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    const std::uint64_t count = read_header(in, path);
    std::vector<T> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(T)));
    if (static_cast<std::uint64_t>(in.gcount()) != count * sizeof(T)) {
        throw DataError("truncated file " + path.string());
    }
    return values;
}

inline Json profile_json(const SpeakerProfile& p) {
    Json j;
    j["speaker_id"] = p.speaker_id;
    j["scales"] = std::vector<double>(p.scales.data(), p.scales.data() + p.scales.size());
    Json rotations = Json::array();
    for (const auto& r : p.rotations) {
        rotations.push_back({{"axis_a", r.axis_a}, {"axis_b", r.axis_b}, {"angle", r.angle}});
    }
    j["rotations"] = std::move(rotations);
    j["bias"] = std::vector<double>(p.bias.data(), p.bias.data() + p.bias.size());
    j["noise_sigma"] = p.noise_sigma;
    return j;
}

inline SpeakerProfile profile_from_json(const Json& j) {
    SpeakerProfile p;
    p.speaker_id = j.at("speaker_id").get<int>();
    const auto scales = j.at("scales").get<std::vector<double>>();
    p.scales = Eigen::Map<const Vector>(scales.data(), static_cast<Eigen::Index>(scales.size()));
    for (const auto& r : j.at("rotations")) {
        p.rotations.push_back({r.at("axis_a").get<int>(), r.at("axis_b").get<int>(),
                               r.at("angle").get<double>()});
    }
    const auto bias = j.at("bias").get<std::vector<double>>();
    p.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(bias.size()));
    p.noise_sigma = j.at("noise_sigma").get<double>();
    return p;
}

inline void save_split(const std::filesystem::path& dir, const std::vector<Utterance>& utts,
                       int feature_dim) {
    std::filesystem::create_directories(dir);
    std::vector<float> frames;
    std::vector<std::uint32_t> labels;
    std::vector<std::uint8_t> silence;
    for (const auto& u : utts) {
        const auto& f = u.frames;
        for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
            for (int d = 0; d < feature_dim; ++d) {
                frames.push_back(static_cast<float>(f.features(t, d)));
            }
            labels.push_back(static_cast<std::uint32_t>(f.labels[static_cast<std::size_t>(t)]));
            silence.push_back(f.is_silence.empty()
                                  ? 0
                                  : f.is_silence[static_cast<std::size_t>(t)]);
        }
    }
    write_array(dir / "frames.bin", frames);
    write_array(dir / "labels.bin", labels);
    write_array(dir / "silence.bin", silence);
}

inline std::vector<Utterance> load_split(const std::filesystem::path& dir, const Json& split_json,
                                         int feature_dim) {
    const auto frames = read_array<float>(dir / "frames.bin");
    const auto labels = read_array<std::uint32_t>(dir / "labels.bin");
    const auto silence = read_array<std::uint8_t>(dir / "silence.bin");
    if (frames.size() != labels.size() * static_cast<std::size_t>(feature_dim) ||
        silence.size() != labels.size()) {
        throw DataError("dataset split arrays disagree in " + dir.string());
    }
    std::vector<Utterance> utts;
    std::size_t at = 0;
    for (const auto& uj : split_json.at("utterances")) {
        Utterance u;
        u.speaker_id = uj.at("speaker").get<int>();
        const std::size_t count = uj.at("frames").get<std::size_t>();
        if (at + count > labels.size()) throw DataError("dataset manifest frame counts overflow");
        u.frames.features.resize(static_cast<Eigen::Index>(count), feature_dim);
        u.frames.labels.resize(count);
        u.frames.is_silence.resize(count);
        for (std::size_t t = 0; t < count; ++t) {
            for (int d = 0; d < feature_dim; ++d) {
                u.frames.features(static_cast<Eigen::Index>(t), d) =
                    static_cast<double>(frames[(at + t) * feature_dim + d]);
            }
            u.frames.labels[t] = static_cast<int>(labels[at + t]);
            u.frames.is_silence[t] = silence[at + t];
        }
        at += count;
        utts.push_back(std::move(u));
    }
    if (at != labels.size()) throw DataError("dataset manifest frame counts disagree");
    return utts;
}

}  // namespace dataset_detail

inline Json corpus_config_to_json(const CorpusConfig& cfg) {
    Json j;
    j["num_classes"] = cfg.num_classes;
    j["feature_dim"] = cfg.feature_dim;
    j["frames_per_second"] = cfg.frames_per_second;
    j["train_speakers"] = cfg.train_speakers;
    j["val_speakers"] = cfg.val_speakers;
    j["test_speakers"] = cfg.test_speakers;
    j["utterances_per_speaker"] = cfg.utterances_per_speaker;
    j["frames_per_utterance"] = cfg.frames_per_utterance;
    j["silence_fraction"] = cfg.silence_fraction;
    j["context_width"] = cfg.context_width;
    j["class_spread"] = cfg.class_spread;
    j["class_sigma"] = cfg.class_sigma;
    j["speaker_scale_jitter"] = cfg.speaker_scale_jitter;
    j["speaker_rotations"] = cfg.speaker_rotations;
    j["speaker_rotation_angle"] = cfg.speaker_rotation_angle;
    j["speaker_bias_scale"] = cfg.speaker_bias_scale;
    j["noise_sigma"] = cfg.noise_sigma;
    j["seed"] = cfg.seed;
    return j;
}

inline CorpusConfig corpus_config_from_json(const Json& j) {
    CorpusConfig cfg;
    cfg.num_classes = j.at("num_classes").get<int>();
    cfg.feature_dim = j.at("feature_dim").get<int>();
    cfg.frames_per_second = j.at("frames_per_second").get<int>();
    cfg.train_speakers = j.at("train_speakers").get<int>();
    cfg.val_speakers = j.at("val_speakers").get<int>();
    cfg.test_speakers = j.at("test_speakers").get<int>();
    cfg.utterances_per_speaker = j.at("utterances_per_speaker").get<int>();
    cfg.frames_per_utterance = j.at("frames_per_utterance").get<int>();
    cfg.silence_fraction = j.at("silence_fraction").get<double>();
    cfg.context_width = j.at("context_width").get<int>();
    cfg.class_spread = j.at("class_spread").get<double>();
    cfg.class_sigma = j.at("class_sigma").get<double>();
    cfg.speaker_scale_jitter = j.at("speaker_scale_jitter").get<double>();
    cfg.speaker_rotations = j.at("speaker_rotations").get<int>();
    cfg.speaker_rotation_angle = j.at("speaker_rotation_angle").get<double>();
    cfg.speaker_bias_scale = j.at("speaker_bias_scale").get<double>();
    cfg.noise_sigma = j.at("noise_sigma").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

inline void save_dataset(const std::filesystem::path& dir, const Corpus& corpus,
                         const Json& config_echo = Json()) {
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = corpus_config_to_json(corpus.config);
    if (!config_echo.is_null()) manifest["run_config"] = config_echo;

    Json speakers = Json::array();
    for (const auto& p : corpus.profiles) speakers.push_back(dataset_detail::profile_json(p));
    manifest["speakers"] = std::move(speakers);

    Json splits;
    const std::pair<const char*, const std::vector<Utterance>*> split_list[] = {
        {"train", &corpus.train}, {"val", &corpus.val}, {"test", &corpus.test}};
    for (const auto& [name, utts] : split_list) {
        Json sj;
        std::vector<int> ids;
        Json uts = Json::array();
        for (const auto& u : *utts) {
            if (ids.empty() || ids.back() != u.speaker_id) ids.push_back(u.speaker_id);
            uts.push_back({{"speaker", u.speaker_id},
                           {"frames", static_cast<std::size_t>(u.frames.num_frames())},
                           {"silence_frames", silence_count(u.frames)}});
        }
        sj["speakers"] = ids;
        sj["utterances"] = std::move(uts);
        splits[name] = std::move(sj);
        dataset_detail::save_split(dir / name, *utts, corpus.config.feature_dim);
    }
    manifest["splits"] = std::move(splits);
    io_detail::save_json(dir / "manifest.json", manifest);
}

struct LoadedDataset {
    Corpus corpus;
    Json manifest;
};

inline LoadedDataset load_dataset(const std::filesystem::path& dir) {
    LoadedDataset out;
    out.manifest = io_detail::load_json(dir / "manifest.json");
    if (!out.manifest.contains("format_version") || out.manifest["format_version"] != 1) {
        throw DataError("dataset manifest: unsupported format_version");
    }
    out.corpus.config = corpus_config_from_json(out.manifest.at("config"));
    for (const auto& pj : out.manifest.at("speakers")) {
        out.corpus.profiles.push_back(dataset_detail::profile_from_json(pj));
    }
    const auto& splits = out.manifest.at("splits");
    out.corpus.train = dataset_detail::load_split(dir / "train", splits.at("train"),
                                                  out.corpus.config.feature_dim);
    out.corpus.val =
        dataset_detail::load_split(dir / "val", splits.at("val"), out.corpus.config.feature_dim);
    out.corpus.test = dataset_detail::load_split(dir / "test", splits.at("test"),
                                                 out.corpus.config.feature_dim);
    return out;
}

}  // namespace mlad
