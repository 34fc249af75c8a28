#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlad/meta_learner.hpp"
#include "mlad/model.hpp"
#include "mlad/network.hpp"

namespace mlad {

using Json = nlohmann::ordered_json;

namespace io_detail {

inline void write_f32(std::ofstream& out, const double* values, std::size_t count) {
    std::vector<float> buf(count);
    for (std::size_t k = 0; k < count; ++k) buf[k] = static_cast<float>(values[k]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(count * sizeof(float)));
}

inline std::vector<double> read_f32(const std::filesystem::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<float> buf(count);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float)) {
        throw DataError("truncated weights file " + path.string());
    }
    char extra;
    if (in.read(&extra, 1)) throw DataError("trailing bytes in weights file " + path.string());
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) values[k] = static_cast<double>(buf[k]);
    return values;
}

inline Json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return j;
}

inline void save_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace io_detail

// Model files: `<prefix>.json` manifest plus `<prefix>.bin` with the weights
// as little-endian f32 in layout order. Loading and re-saving reproduces the
// binary bit-exactly.
inline void save_model(const std::filesystem::path& prefix, const ModelSpec& spec,
                       const ParameterVector& theta) {
    check_layout_matches(spec, theta);
    const std::string stem = prefix.filename().string();
    Json manifest;
    manifest["format_version"] = 1;
    manifest["spec"] = {{"input_dim", spec.input_dim},
                        {"hidden_dims", spec.hidden_dims},
                        {"num_classes", spec.num_classes},
                        {"activation", "logistic"},
                        {"output", "softmax"}};
    Json layout = Json::array();
    for (const auto& e : theta.layout) {
        layout.push_back({{"layer", e.layer},
                          {"kind", e.kind == ParamKind::weight_matrix ? "weight_matrix" : "bias"},
                          {"rows", e.rows},
                          {"cols", e.cols},
                          {"offset", e.offset}});
    }
    manifest["layout"] = std::move(layout);
    manifest["weights_file"] = stem + ".bin";
    manifest["byte_order"] = "little";
    manifest["dtype"] = "f32";
    io_detail::save_json(prefix.string() + ".json", manifest);

    std::ofstream bin(prefix.string() + ".bin", std::ios::binary);
    if (!bin) throw DataError("cannot write " + prefix.string() + ".bin");
    io_detail::write_f32(bin, theta.values.data(), theta.values.size());
}

struct LoadedModel {
    ModelSpec spec;
    ParameterVector theta;
};

inline LoadedModel load_model(const std::filesystem::path& prefix) {
    const Json manifest = io_detail::load_json(prefix.string() + ".json");
    if (!manifest.contains("format_version") || manifest["format_version"] != 1) {
        throw DataError("model manifest: unsupported format_version");
    }
    if (manifest.value("byte_order", "") != "little" || manifest.value("dtype", "") != "f32") {
        throw DataError("model manifest: unsupported encoding");
    }
    LoadedModel m;
    const auto& s = manifest.at("spec");
    m.spec.input_dim = s.at("input_dim").get<int>();
    m.spec.hidden_dims = s.at("hidden_dims").get<std::vector<int>>();
    m.spec.num_classes = s.at("num_classes").get<int>();
    m.spec.validate();
    m.theta.layout = layout_for(m.spec);

    // The manifest layout must agree with the spec-derived one.
    const auto& layout_json = manifest.at("layout");
    if (layout_json.size() != m.theta.layout.size()) {
        throw DataError("model manifest: layout does not match spec");
    }
    for (std::size_t k = 0; k < m.theta.layout.size(); ++k) {
        const auto& e = m.theta.layout[k];
        const auto& j = layout_json[k];
        const std::string kind = e.kind == ParamKind::weight_matrix ? "weight_matrix" : "bias";
        if (j.at("layer") != e.layer || j.at("kind") != kind || j.at("rows") != e.rows ||
            j.at("cols") != e.cols || j.at("offset") != e.offset) {
            throw DataError("model manifest: layout does not match spec");
        }
    }
    const std::filesystem::path bin =
        prefix.parent_path() / manifest.at("weights_file").get<std::string>();
    m.theta.values = io_detail::read_f32(bin, total_parameters(m.theta.layout));
    return m;
}

// Meta-model files: `<prefix>.meta.json` manifest plus `<prefix>.meta.bin`
// (f32, little-endian) in the canonical parameter order: per gate (input,
// forget, output, candidate) W_x then W_h then bias, then W_F, b_F, W_I, b_I.
inline void save_meta_params(const std::filesystem::path& prefix, const MetaParams& params) {
    params.validate();
    const std::string stem = prefix.filename().string();
    Json manifest;
    manifest["format_version"] = 1;
    manifest["H"] = params.hidden;
    manifest["input_variant"] = params.variant == InputVariant::value ? "value" : "position";
    manifest["p"] = params.pre.p;
    manifest["weights_file"] = stem + ".meta.bin";
    io_detail::save_json(prefix.string() + ".meta.json", manifest);

    std::ofstream bin(prefix.string() + ".meta.bin", std::ios::binary);
    if (!bin) throw DataError("cannot write " + prefix.string() + ".meta.bin");
    io_detail::write_f32(bin, params.phi.data(), static_cast<std::size_t>(params.phi.size()));
}

inline MetaParams load_meta_params(const std::filesystem::path& prefix) {
    const Json manifest = io_detail::load_json(prefix.string() + ".meta.json");
    if (!manifest.contains("format_version") || manifest["format_version"] != 1) {
        throw DataError("meta manifest: unsupported format_version");
    }
    MetaParams params;
    params.hidden = manifest.at("H").get<int>();
    const std::string variant = manifest.at("input_variant").get<std::string>();
    if (variant == "value") {
        params.variant = InputVariant::value;
    } else if (variant == "position") {
        params.variant = InputVariant::position;
    } else {
        throw DataError("meta manifest: unknown input_variant '" + variant + "'");
    }
    params.pre.p = manifest.at("p").get<double>();
    const std::filesystem::path bin =
        prefix.parent_path() / manifest.at("weights_file").get<std::string>();
    const auto values = io_detail::read_f32(bin, params.layout().total());
    params.phi = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    params.validate();
    return params;
}

// Overlay files for LHUC / linear-transform adaptation results:
// `<prefix>.overlay.json` plus `<prefix>.overlay.bin` (f32, little-endian;
// LHUC vectors per layer in order, or the transform row-major).
inline void save_overlay(const std::filesystem::path& prefix, const LhucParams& lhuc) {
    const std::string stem = prefix.filename().string();
    Json manifest;
    manifest["format_version"] = 1;
    manifest["method"] = "lhuc";
    Json dims = Json::array();
    for (const auto& r : lhuc.r) dims.push_back(r.size());
    manifest["layer_dims"] = std::move(dims);
    manifest["weights_file"] = stem + ".overlay.bin";
    io_detail::save_json(prefix.string() + ".overlay.json", manifest);
    std::ofstream bin(prefix.string() + ".overlay.bin", std::ios::binary);
    if (!bin) throw DataError("cannot write " + prefix.string() + ".overlay.bin");
    for (const auto& r : lhuc.r) {
        io_detail::write_f32(bin, r.data(), static_cast<std::size_t>(r.size()));
    }
}

inline void save_overlay(const std::filesystem::path& prefix,
                         const LinearTransformParams& linear) {
    const std::string stem = prefix.filename().string();
    Json manifest;
    manifest["format_version"] = 1;
    manifest["method"] = "linear";
    manifest["layer"] = linear.layer;
    manifest["dim"] = linear.A.rows();
    manifest["weights_file"] = stem + ".overlay.bin";
    io_detail::save_json(prefix.string() + ".overlay.json", manifest);
    std::ofstream bin(prefix.string() + ".overlay.bin", std::ios::binary);
    if (!bin) throw DataError("cannot write " + prefix.string() + ".overlay.bin");
    const RowMatrix a = linear.A;  // row-major copy for a contiguous dump
    io_detail::write_f32(bin, a.data(), static_cast<std::size_t>(a.size()));
}

struct LoadedOverlay {
    std::optional<LhucParams> lhuc;
    std::optional<LinearTransformParams> linear;
};

inline LoadedOverlay load_overlay(const std::filesystem::path& prefix) {
    const Json manifest = io_detail::load_json(prefix.string() + ".overlay.json");
    if (!manifest.contains("format_version") || manifest["format_version"] != 1) {
        throw DataError("overlay manifest: unsupported format_version");
    }
    const std::filesystem::path bin =
        prefix.parent_path() / manifest.at("weights_file").get<std::string>();
    LoadedOverlay out;
    const std::string method = manifest.at("method").get<std::string>();
    if (method == "lhuc") {
        const auto dims = manifest.at("layer_dims").get<std::vector<int>>();
        std::size_t total = 0;
        for (int d : dims) total += static_cast<std::size_t>(d);
        const auto values = io_detail::read_f32(bin, total);
        LhucParams lhuc;
        std::size_t at = 0;
        for (int d : dims) {
            lhuc.r.push_back(
                Eigen::Map<const Vector>(values.data() + at, static_cast<Eigen::Index>(d)));
            at += static_cast<std::size_t>(d);
        }
        out.lhuc = std::move(lhuc);
    } else if (method == "linear") {
        const int dim = manifest.at("dim").get<int>();
        const auto values =
            io_detail::read_f32(bin, static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
        LinearTransformParams linear;
        linear.layer = manifest.at("layer").get<int>();
        linear.A = Eigen::Map<const RowMatrix>(values.data(), dim, dim);
        out.linear = std::move(linear);
    } else {
        throw DataError("overlay manifest: unknown method '" + method + "'");
    }
    return out;
}

}  // namespace mlad
