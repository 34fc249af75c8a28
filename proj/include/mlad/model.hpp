#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlad/numerics.hpp"
#include "mlad/rng.hpp"

namespace mlad {

// Feed-forward frame classifier: logistic hidden layers, softmax output.
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;

    int num_hidden() const { return static_cast<int>(hidden_dims.size()); }
    // Linear maps: one per hidden layer plus the output layer.
    int num_layers() const { return num_hidden() + 1; }

    int layer_in_dim(int layer) const { return layer == 0 ? input_dim : hidden_dims[layer - 1]; }
    int layer_out_dim(int layer) const {
        return layer == num_hidden() ? num_classes : hidden_dims[layer];
    }

    void validate() const {
        if (input_dim < 1) throw DataError("model spec: input_dim must be >= 1");
        if (num_classes < 1) throw DataError("model spec: num_classes must be >= 1");
        if (hidden_dims.empty()) throw DataError("model spec: hidden_dims must be non-empty");
        for (int d : hidden_dims) {
            if (d < 1) throw DataError("model spec: hidden dims must be >= 1");
        }
    }
};

enum class ParamKind : std::uint8_t { weight_matrix, bias };

struct LayoutEntry {
    int layer = 0;
    ParamKind kind = ParamKind::weight_matrix;
    int rows = 0;  // m: output dimension
    int cols = 0;  // n: input dimension (1 for biases)
    std::size_t offset = 0;
};

// Position of one coordinate inside its weight matrix, used to build the
// normalised-position inputs of the meta-learner.
struct CoordinatePosition {
    int i = 0;
    int j = 0;
    int m = 1;
    int n = 1;
};

// Flattened model weights plus per-layer shape metadata. Weight matrices are
// stored row-major; biases follow their matrix. One coordinate per entry.
struct ParameterVector {
    std::vector<double> values;
    std::vector<LayoutEntry> layout;

    std::size_t size() const { return values.size(); }

    bool same_layout(const ParameterVector& other) const {
        if (layout.size() != other.layout.size()) return false;
        for (std::size_t k = 0; k < layout.size(); ++k) {
            const auto& a = layout[k];
            const auto& b = other.layout[k];
            if (a.layer != b.layer || a.kind != b.kind || a.rows != b.rows || a.cols != b.cols ||
                a.offset != b.offset) {
                return false;
            }
        }
        return true;
    }

    // Zero-valued vector with the same layout.
    ParameterVector zeros_like() const {
        ParameterVector out;
        out.layout = layout;
        out.values.assign(values.size(), 0.0);
        return out;
    }

    // Row-major matrix view of one layout entry.
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> matrix_at(
        std::size_t entry) {
        const auto& e = layout[entry];
        return {values.data() + e.offset, e.rows, e.cols};
    }
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    matrix_at(std::size_t entry) const {
        const auto& e = layout[entry];
        return {values.data() + e.offset, e.rows, e.cols};
    }
};

inline std::vector<LayoutEntry> layout_for(const ModelSpec& spec) {
    spec.validate();
    std::vector<LayoutEntry> layout;
    layout.reserve(static_cast<std::size_t>(spec.num_layers()) * 2);
    std::size_t offset = 0;
    for (int layer = 0; layer < spec.num_layers(); ++layer) {
        const int m = spec.layer_out_dim(layer);
        const int n = spec.layer_in_dim(layer);
        layout.push_back({layer, ParamKind::weight_matrix, m, n, offset});
        offset += static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
        layout.push_back({layer, ParamKind::bias, m, 1, offset});
        offset += static_cast<std::size_t>(m);
    }
    return layout;
}

inline std::size_t total_parameters(const std::vector<LayoutEntry>& layout) {
    if (layout.empty()) return 0;
    const auto& last = layout.back();
    return last.offset + static_cast<std::size_t>(last.rows) * static_cast<std::size_t>(last.cols);
}

inline ParameterVector zero_parameters(const ModelSpec& spec) {
    ParameterVector theta;
    theta.layout = layout_for(spec);
    theta.values.assign(total_parameters(theta.layout), 0.0);
    return theta;
}

// Per-layer uniform init in [-a, a] with a = sqrt(6 / (m + n)); biases zero.
inline ParameterVector init_parameters(const ModelSpec& spec, std::uint64_t seed) {
    ParameterVector theta = zero_parameters(spec);
    Rng rng(seed);
    for (const auto& e : theta.layout) {
        if (e.kind != ParamKind::weight_matrix) continue;
        const double a = std::sqrt(6.0 / static_cast<double>(e.rows + e.cols));
        for (std::size_t k = 0; k < static_cast<std::size_t>(e.rows) * e.cols; ++k) {
            theta.values[e.offset + k] = rng.uniform(-a, a);
        }
    }
    return theta;
}

inline void check_layout_matches(const ModelSpec& spec, const ParameterVector& theta) {
    const auto expected = layout_for(spec);
    if (theta.layout.size() != expected.size() ||
        theta.values.size() != total_parameters(expected)) {
        throw DataError("parameter vector does not match model spec");
    }
    for (std::size_t k = 0; k < expected.size(); ++k) {
        const auto& a = expected[k];
        const auto& b = theta.layout[k];
        if (a.layer != b.layer || a.kind != b.kind || a.rows != b.rows || a.cols != b.cols ||
            a.offset != b.offset) {
            throw DataError("parameter vector does not match model spec");
        }
    }
}

// (i, j, m, n) for every coordinate, in layout order. Biases use j = 0, n = 1.
inline std::vector<CoordinatePosition> coordinate_positions(const ParameterVector& theta) {
    std::vector<CoordinatePosition> pos(theta.size());
    for (const auto& e : theta.layout) {
        std::size_t k = e.offset;
        for (int i = 0; i < e.rows; ++i) {
            for (int j = 0; j < e.cols; ++j) {
                pos[k++] = {i, j, e.rows, e.cols};
            }
        }
    }
    return pos;
}

// A batch of (possibly spliced) feature frames with aligned labels.
struct FrameBatch {
    Matrix features;                  // [num_frames x input_dim]
    std::vector<int> labels;          // class indices
    std::vector<std::uint8_t> is_silence;

    Eigen::Index num_frames() const { return features.rows(); }

    void validate(int num_classes) const {
        if (static_cast<std::size_t>(features.rows()) != labels.size()) {
            throw DataError("frame batch: label count does not match frame count");
        }
        if (!is_silence.empty() && is_silence.size() != labels.size()) {
            throw DataError("frame batch: silence flags do not match frame count");
        }
        for (int y : labels) {
            if (y < 0 || y >= num_classes) throw DataError("frame batch: label out of range");
        }
    }
};

// Concatenates batches in order (frame order preserved within and across).
inline FrameBatch concat_batches(const std::vector<FrameBatch>& parts) {
    FrameBatch out;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        rows += p.features.rows();
        if (p.features.rows() > 0) cols = p.features.cols();
    }
    out.features.resize(rows, cols);
    out.labels.reserve(static_cast<std::size_t>(rows));
    out.is_silence.reserve(static_cast<std::size_t>(rows));
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        if (p.features.rows() == 0) continue;
        out.features.middleRows(at, p.features.rows()) = p.features;
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
        if (p.is_silence.empty()) {
            out.is_silence.insert(out.is_silence.end(), static_cast<std::size_t>(p.features.rows()), 0);
        } else {
            out.is_silence.insert(out.is_silence.end(), p.is_silence.begin(), p.is_silence.end());
        }
        at += p.features.rows();
    }
    return out;
}

}  // namespace mlad
