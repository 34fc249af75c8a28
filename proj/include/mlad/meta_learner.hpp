#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mlad/model.hpp"
#include "mlad/numerics.hpp"
#include "mlad/rng.hpp"

namespace mlad {

// What the per-coordinate input vector contains besides loss and gradient:
// the raw weight value, or its normalised (i/m, j/n) position.
enum class InputVariant : std::uint8_t { value, position };

inline int meta_input_dim(InputVariant v) { return v == InputVariant::value ? 5 : 6; }

struct PreprocessConfig {
    double p = 10.0;
    // Switches the branch threshold from e^{-p} to e^{+p}. With e^{+p} the
    // small-magnitude branch scales ordinary values by e^{p}; kept only as a
    // comparison knob, never the default.
    bool use_exp_p_threshold = false;
};

// Log-magnitude encoding of a scalar: values with |x| >= e^{-p} map to
// (log|x|/p, sgn x), smaller ones to (-1, e^{p} x). Continuous at the
// threshold, where both branches give (-1, +-1).
inline std::pair<double, double> preprocess(double x, const PreprocessConfig& cfg) {
    if (!(cfg.p > 0.0)) throw DataError("preprocess: p must be positive");
    if (!std::isfinite(x)) throw NumericError("preprocess: non-finite input");
    const double threshold = std::exp(cfg.use_exp_p_threshold ? cfg.p : -cfg.p);
    if (std::abs(x) >= threshold) {
        return {std::log(std::abs(x)) / cfg.p, x > 0.0 ? 1.0 : -1.0};
    }
    return {-1.0, std::exp(cfg.p) * x};
}

// Canonical gate order of the first-layer LSTM blocks.
enum MetaGate : int { kGateInput = 0, kGateForget = 1, kGateOutput = 2, kGateCandidate = 3 };

// Offsets into the flat meta-parameter vector. Per gate (input, forget,
// output, candidate): W_x row-major [H x in], W_h row-major [H x H], bias [H].
// Then W_F [H+1] (hidden weights followed by the previous-gate weight), b_F,
// W_I [H+1], b_I.
struct MetaLayout {
    int hidden = 0;
    int input = 0;

    std::size_t gate_block() const {
        return static_cast<std::size_t>(hidden) * input + static_cast<std::size_t>(hidden) * hidden +
               static_cast<std::size_t>(hidden);
    }
    std::size_t wx_offset(int gate) const { return gate * gate_block(); }
    std::size_t wh_offset(int gate) const {
        return wx_offset(gate) + static_cast<std::size_t>(hidden) * input;
    }
    std::size_t b_offset(int gate) const {
        return wh_offset(gate) + static_cast<std::size_t>(hidden) * hidden;
    }
    std::size_t wf_offset() const { return 4 * gate_block(); }
    std::size_t bf_offset() const { return wf_offset() + hidden + 1; }
    std::size_t wi_offset() const { return bf_offset() + 1; }
    std::size_t bi_offset() const { return wi_offset() + hidden + 1; }
    std::size_t total() const { return bi_offset() + 1; }
};

// All meta-learner parameters, stored flat in the canonical layout above.
struct MetaParams {
    int hidden = 20;
    InputVariant variant = InputVariant::value;
    PreprocessConfig pre;
    Vector phi;

    MetaLayout layout() const { return {hidden, meta_input_dim(variant)}; }

    void validate() const {
        if (hidden < 1) throw DataError("meta params: hidden size must be >= 1");
        if (static_cast<std::size_t>(phi.size()) != layout().total()) {
            throw DataError("meta params: parameter vector has wrong length");
        }
    }

    double w_f(int k) const { return phi[static_cast<Eigen::Index>(layout().wf_offset()) + k]; }
    double b_f() const { return phi[static_cast<Eigen::Index>(layout().bf_offset())]; }
    double w_i(int k) const { return phi[static_cast<Eigen::Index>(layout().wi_offset()) + k]; }
    double b_i() const { return phi[static_cast<Eigen::Index>(layout().bi_offset())]; }
};

// Recurrent state of a single model weight between adaptation steps.
struct CoordinateState {
    Vector h;
    Vector cell;
    double prev_f = 1.0;
    double prev_i = 0.0;
    double theta = 0.0;

    // Zero LSTM state; the fictitious previous update is the identity
    // (forget 1, input 0).
    static CoordinateState initial(int hidden, double theta0) {
        CoordinateState s;
        s.h = Vector::Zero(hidden);
        s.cell = Vector::Zero(hidden);
        s.prev_f = 1.0;
        s.prev_i = 0.0;
        s.theta = theta0;
        return s;
    }
};

// The same state for every coordinate at once, stored struct-of-arrays.
struct CoordinateStates {
    RowMatrix h;     // [n x H]
    RowMatrix cell;  // [n x H]
    Vector prev_f;   // [n]
    Vector prev_i;   // [n]

    Eigen::Index size() const { return prev_f.size(); }

    static CoordinateStates initial(std::size_t n, int hidden) {
        CoordinateStates s;
        s.h = RowMatrix::Zero(static_cast<Eigen::Index>(n), hidden);
        s.cell = RowMatrix::Zero(static_cast<Eigen::Index>(n), hidden);
        s.prev_f = Vector::Ones(static_cast<Eigen::Index>(n));
        s.prev_i = Vector::Zero(static_cast<Eigen::Index>(n));
        return s;
    }

    CoordinateState at(Eigen::Index c, double theta) const {
        CoordinateState s;
        s.h = h.row(c).transpose();
        s.cell = cell.row(c).transpose();
        s.prev_f = prev_f[c];
        s.prev_i = prev_i[c];
        s.theta = theta;
        return s;
    }
};

// One coordinate's meta-learner input: the raw scalars and the expanded
// vector after log-magnitude encoding of loss and gradient. The weight value
// and the positions pass through unencoded.
struct CoordinateInput {
    std::array<double, 4> raw{};  // (theta, L, g) or (i/m, j/n, L, g)
    int raw_len = 0;
    Vector preprocessed;
};

inline CoordinateInput build_input(InputVariant variant, double theta,
                                   const CoordinatePosition& position, double loss, double grad,
                                   const PreprocessConfig& cfg) {
    CoordinateInput input;
    const auto [la, lb] = preprocess(loss, cfg);
    const auto [ga, gb] = preprocess(grad, cfg);
    if (variant == InputVariant::value) {
        input.raw = {theta, loss, grad, 0.0};
        input.raw_len = 3;
        input.preprocessed.resize(5);
        input.preprocessed << theta, la, lb, ga, gb;
    } else {
        if (position.i < 0 || position.i >= position.m || position.j < 0 ||
            position.j >= position.n) {
            throw DataError("build_input: coordinate position out of range");
        }
        const double pi = static_cast<double>(position.i) / position.m;
        const double pj = static_cast<double>(position.j) / position.n;
        input.raw = {pi, pj, loss, grad};
        input.raw_len = 4;
        input.preprocessed.resize(6);
        input.preprocessed << pi, pj, la, lb, ga, gb;
    }
    return input;
}

namespace detail {

// Gate activations of one LSTM step for one coordinate.
struct LstmCellValues {
    Vector gates;      // [4H]: sigma(i), sigma(f), sigma(o), tanh(cand)
    Vector cell;       // [H]
    Vector tanh_cell;  // [H]
    Vector h;          // [H]
};

// z = b + W_x x + W_h h_prev per gate, then the standard cell update
// cell' = f . cell + i . cand, h' = o . tanh(cell').
inline void lstm_cell_forward(const MetaLayout& lay, const double* phi, const double* x,
                              const double* h_prev, const double* cell_prev, double* gates,
                              double* cell_out, double* tanh_cell_out, double* h_out) {
    const int H = lay.hidden;
    const int in = lay.input;
    for (int g = 0; g < 4; ++g) {
        const double* wx = phi + lay.wx_offset(g);
        const double* wh = phi + lay.wh_offset(g);
        const double* b = phi + lay.b_offset(g);
        double* zg = gates + g * H;
        for (int r = 0; r < H; ++r) {
            double z = b[r];
            const double* wxr = wx + static_cast<std::size_t>(r) * in;
            for (int k = 0; k < in; ++k) z += wxr[k] * x[k];
            const double* whr = wh + static_cast<std::size_t>(r) * H;
            for (int k = 0; k < H; ++k) z += whr[k] * h_prev[k];
            zg[r] = z;
        }
    }
    for (int r = 0; r < H; ++r) {
        const double ig = logistic(gates[kGateInput * H + r]);
        const double fg = logistic(gates[kGateForget * H + r]);
        const double og = logistic(gates[kGateOutput * H + r]);
        const double cd = std::tanh(gates[kGateCandidate * H + r]);
        gates[kGateInput * H + r] = ig;
        gates[kGateForget * H + r] = fg;
        gates[kGateOutput * H + r] = og;
        gates[kGateCandidate * H + r] = cd;
        const double cell = fg * cell_prev[r] + ig * cd;
        const double tc = std::tanh(cell);
        cell_out[r] = cell;
        tanh_cell_out[r] = tc;
        h_out[r] = og * tc;
    }
}

inline double gate_forward(const double* w, double bias, const double* h, int hidden,
                           double prev_gate) {
    double a = bias;
    for (int k = 0; k < hidden; ++k) a += w[k] * h[k];
    a += w[hidden] * prev_gate;
    return logistic(a);
}

}  // namespace detail

// First-layer LSTM step for a single coordinate; no cross-coordinate state.
struct LstmStepOutput {
    Vector h;
    Vector cell;
};

inline LstmStepOutput lstm_layer1_step(const MetaParams& params, const CoordinateState& state,
                                       const CoordinateInput& input) {
    params.validate();
    const MetaLayout lay = params.layout();
    if (input.preprocessed.size() != lay.input || state.h.size() != lay.hidden ||
        state.cell.size() != lay.hidden) {
        throw DataError("lstm_layer1_step: dimension mismatch");
    }
    Vector gates(4 * lay.hidden);
    LstmStepOutput out;
    out.h.resize(lay.hidden);
    out.cell.resize(lay.hidden);
    Vector tanh_cell(lay.hidden);
    detail::lstm_cell_forward(lay, params.phi.data(), input.preprocessed.data(), state.h.data(),
                              state.cell.data(), gates.data(), out.cell.data(), tanh_cell.data(),
                              out.h.data());
    return out;
}

// Second layer: scalar forget and input gates conditioned on the hidden
// vector and the previous gate value.
inline std::pair<double, double> gate_step(const MetaParams& params, const Vector& h,
                                           double prev_f, double prev_i) {
    params.validate();
    const MetaLayout lay = params.layout();
    if (h.size() != lay.hidden) throw DataError("gate_step: hidden size mismatch");
    const double* phi = params.phi.data();
    const double f = detail::gate_forward(phi + lay.wf_offset(), phi[lay.bf_offset()], h.data(),
                                          lay.hidden, prev_f);
    const double i = detail::gate_forward(phi + lay.wi_offset(), phi[lay.bi_offset()], h.data(),
                                          lay.hidden, prev_i);
    return {f, i};
}

// Cell-as-weight update: the forget gate decays the weight, the input gate
// acts as a learning rate on the gradient.
inline double coordinate_update(double theta, double f_t, double i_t, double grad) {
    return f_t * theta - i_t * grad;
}

// Everything one adaptation step needs to be replayed or differentiated.
struct MetaStepRecord {
    double loss = 0.0;            // shared batch loss fed to every coordinate
    Vector grad;                  // [n] per-coordinate gradient (frozen)
    Vector theta_before;          // [n]
    Vector prev_f_before;         // [n]
    Vector prev_i_before;         // [n]
    RowMatrix inputs;             // [n x in]
    RowMatrix gates;              // [n x 4H], activated
    RowMatrix cell;               // [n x H]
    RowMatrix tanh_cell;          // [n x H]
    RowMatrix h;                  // [n x H]
    Vector f_t;                   // [n]
    Vector i_t;                   // [n]
};

struct AdaptStepOutput {
    ParameterVector theta;
    CoordinateStates states;
};

// Applies one meta-learner step to every coordinate of the model jointly.
// Each coordinate is processed independently with the shared parameters, so
// the result commutes with any permutation of coordinates.
//
// `positions` is required for the position input variant (pass
// coordinate_positions(theta)); `record`, when given, captures the values
// needed for reverse-mode differentiation; `pin_identity_gates` is a
// verification hook forcing f_t = 1, i_t = 0.
inline AdaptStepOutput adapt_step_all(const MetaParams& params, const CoordinateStates& states,
                                      const ParameterVector& theta, double loss,
                                      const ParameterVector& grad,
                                      const std::vector<CoordinatePosition>* positions = nullptr,
                                      MetaStepRecord* record = nullptr,
                                      bool pin_identity_gates = false) {
    params.validate();
    const MetaLayout lay = params.layout();
    const Eigen::Index n = static_cast<Eigen::Index>(theta.size());
    if (grad.size() != theta.size() || !theta.same_layout(grad)) {
        throw DataError("adapt_step_all: theta/grad layout mismatch");
    }
    if (states.size() != n || states.h.cols() != lay.hidden) {
        throw DataError("adapt_step_all: state size mismatch");
    }
    std::vector<CoordinatePosition> computed_positions;
    const std::vector<CoordinatePosition>* pos = positions;
    if (params.variant == InputVariant::position && pos == nullptr) {
        computed_positions = coordinate_positions(theta);
        pos = &computed_positions;
    }
    if (pos != nullptr && !pos->empty() && pos->size() != theta.size()) {
        throw DataError("adapt_step_all: position count mismatch");
    }

    const auto [la, lb] = preprocess(loss, params.pre);

    AdaptStepOutput out;
    out.theta = theta;
    out.states.h.resize(n, lay.hidden);
    out.states.cell.resize(n, lay.hidden);
    out.states.prev_f.resize(n);
    out.states.prev_i.resize(n);
    if (record != nullptr) {
        record->loss = loss;
        record->grad = Eigen::Map<const Vector>(grad.values.data(), n);
        record->theta_before = Eigen::Map<const Vector>(theta.values.data(), n);
        record->prev_f_before = states.prev_f;
        record->prev_i_before = states.prev_i;
        record->inputs.resize(n, lay.input);
        record->gates.resize(n, 4 * lay.hidden);
        record->f_t.resize(n);
        record->i_t.resize(n);
    }

    const double* phi = params.phi.data();
    std::vector<double> x(static_cast<std::size_t>(lay.input));
    std::vector<double> gates(static_cast<std::size_t>(4 * lay.hidden));
    std::vector<double> cell_buf(static_cast<std::size_t>(lay.hidden));
    std::vector<double> tanh_buf(static_cast<std::size_t>(lay.hidden));
    std::vector<double> h_buf(static_cast<std::size_t>(lay.hidden));

    for (Eigen::Index c = 0; c < n; ++c) {
        const double theta_c = theta.values[static_cast<std::size_t>(c)];
        const double g_c = grad.values[static_cast<std::size_t>(c)];
        const auto [ga, gb] = preprocess(g_c, params.pre);
        if (params.variant == InputVariant::value) {
            x[0] = theta_c;
            x[1] = la;
            x[2] = lb;
            x[3] = ga;
            x[4] = gb;
        } else {
            const auto& p = (*pos)[static_cast<std::size_t>(c)];
            x[0] = static_cast<double>(p.i) / p.m;
            x[1] = static_cast<double>(p.j) / p.n;
            x[2] = la;
            x[3] = lb;
            x[4] = ga;
            x[5] = gb;
        }
        detail::lstm_cell_forward(lay, phi, x.data(), states.h.row(c).data(),
                                  states.cell.row(c).data(), gates.data(), cell_buf.data(),
                                  tanh_buf.data(), h_buf.data());
        double f_t;
        double i_t;
        if (pin_identity_gates) {
            f_t = 1.0;
            i_t = 0.0;
        } else {
            f_t = detail::gate_forward(phi + lay.wf_offset(), phi[lay.bf_offset()], h_buf.data(),
                                       lay.hidden, states.prev_f[c]);
            i_t = detail::gate_forward(phi + lay.wi_offset(), phi[lay.bi_offset()], h_buf.data(),
                                       lay.hidden, states.prev_i[c]);
        }
        out.theta.values[static_cast<std::size_t>(c)] = coordinate_update(theta_c, f_t, i_t, g_c);
        for (int k = 0; k < lay.hidden; ++k) {
            out.states.h(c, k) = h_buf[static_cast<std::size_t>(k)];
            out.states.cell(c, k) = cell_buf[static_cast<std::size_t>(k)];
        }
        out.states.prev_f[c] = f_t;
        out.states.prev_i[c] = i_t;
        if (record != nullptr) {
            for (int k = 0; k < lay.input; ++k) record->inputs(c, k) = x[static_cast<std::size_t>(k)];
            for (int k = 0; k < 4 * lay.hidden; ++k) {
                record->gates(c, k) = gates[static_cast<std::size_t>(k)];
            }
            record->f_t[c] = f_t;
            record->i_t[c] = i_t;
        }
    }
    if (record != nullptr) {
        record->cell = out.states.cell;
        record->tanh_cell.resize(n, lay.hidden);
        for (Eigen::Index c = 0; c < n; ++c) {
            for (int k = 0; k < lay.hidden; ++k) {
                record->tanh_cell(c, k) = std::tanh(out.states.cell(c, k));
            }
        }
        record->h = out.states.h;
    }
    return out;
}

// Adjoints flowing backwards through the unrolled adaptation steps: after
// processing step t these hold the gradients w.r.t. step t-1's outputs.
struct MetaStepAdjoint {
    Vector d_theta;   // [n]
    RowMatrix d_h;    // [n x H]
    RowMatrix d_cell; // [n x H]
    Vector d_prev_f;  // [n] adjoint of the forget gate exported to the next step
    Vector d_prev_i;  // [n]

    static MetaStepAdjoint zero(Eigen::Index n, int hidden) {
        MetaStepAdjoint a;
        a.d_theta = Vector::Zero(n);
        a.d_h = RowMatrix::Zero(n, hidden);
        a.d_cell = RowMatrix::Zero(n, hidden);
        a.d_prev_f = Vector::Zero(n);
        a.d_prev_i = Vector::Zero(n);
        return a;
    }
};

// Reverse-mode sweep through one recorded step. `prev_h`/`prev_cell` are the
// states the step consumed (zero matrices at the first step). Accumulates
// into d_phi and rewrites `adj` in place to refer to the previous step's
// outputs. The recorded loss/gradient values are treated as constants.
inline void adapt_step_backward(const MetaParams& params, const MetaStepRecord& rec,
                                const RowMatrix& prev_h, const RowMatrix& prev_cell,
                                MetaStepAdjoint& adj, Vector& d_phi) {
    const MetaLayout lay = params.layout();
    const int H = lay.hidden;
    const int in = lay.input;
    const Eigen::Index n = rec.theta_before.size();
    const double* phi = params.phi.data();
    double* dphi = d_phi.data();

    Vector new_d_theta = Vector::Zero(n);
    RowMatrix new_d_h = RowMatrix::Zero(n, H);
    RowMatrix new_d_cell = RowMatrix::Zero(n, H);
    Vector new_d_prev_f = Vector::Zero(n);
    Vector new_d_prev_i = Vector::Zero(n);

    std::vector<double> dh(static_cast<std::size_t>(H));
    std::vector<double> dz(static_cast<std::size_t>(4 * H));

    for (Eigen::Index c = 0; c < n; ++c) {
        const double u = adj.d_theta[c];
        // theta_t = f_t * theta_{t-1} - i_t * g
        const double df_total = adj.d_prev_f[c] + u * rec.theta_before[c];
        const double di_total = adj.d_prev_i[c] - u * rec.grad[c];
        new_d_theta[c] = u * rec.f_t[c];

        // Second layer gates.
        const double daf = df_total * logistic_deriv_from_value(rec.f_t[c]);
        const double dai = di_total * logistic_deriv_from_value(rec.i_t[c]);
        const double* wf = phi + lay.wf_offset();
        const double* wi = phi + lay.wi_offset();
        double* dwf = dphi + lay.wf_offset();
        double* dwi = dphi + lay.wi_offset();
        for (int k = 0; k < H; ++k) {
            dh[static_cast<std::size_t>(k)] = adj.d_h(c, k) + daf * wf[k] + dai * wi[k];
            dwf[k] += daf * rec.h(c, k);
            dwi[k] += dai * rec.h(c, k);
        }
        dwf[H] += daf * rec.prev_f_before[c];
        dwi[H] += dai * rec.prev_i_before[c];
        dphi[lay.bf_offset()] += daf;
        dphi[lay.bi_offset()] += dai;
        new_d_prev_f[c] = daf * wf[H];
        new_d_prev_i[c] = dai * wi[H];

        // First layer LSTM cell.
        for (int k = 0; k < H; ++k) {
            const double og = rec.gates(c, kGateOutput * H + k);
            const double tc = rec.tanh_cell(c, k);
            const double dh_k = dh[static_cast<std::size_t>(k)];
            const double dcell = adj.d_cell(c, k) + dh_k * og * (1.0 - tc * tc);
            const double ig = rec.gates(c, kGateInput * H + k);
            const double fg = rec.gates(c, kGateForget * H + k);
            const double cd = rec.gates(c, kGateCandidate * H + k);
            dz[static_cast<std::size_t>(kGateInput * H + k)] =
                dcell * cd * logistic_deriv_from_value(ig);
            dz[static_cast<std::size_t>(kGateForget * H + k)] =
                dcell * prev_cell(c, k) * logistic_deriv_from_value(fg);
            dz[static_cast<std::size_t>(kGateOutput * H + k)] =
                dh_k * tc * logistic_deriv_from_value(og);
            dz[static_cast<std::size_t>(kGateCandidate * H + k)] = dcell * ig * (1.0 - cd * cd);
            new_d_cell(c, k) = dcell * fg;
        }

        double d_theta_via_input = 0.0;
        for (int g = 0; g < 4; ++g) {
            const double* wx = phi + lay.wx_offset(g);
            const double* wh = phi + lay.wh_offset(g);
            double* dwx = dphi + lay.wx_offset(g);
            double* dwh = dphi + lay.wh_offset(g);
            double* db = dphi + lay.b_offset(g);
            for (int r = 0; r < H; ++r) {
                const double dz_r = dz[static_cast<std::size_t>(g * H + r)];
                if (dz_r == 0.0) continue;
                double* dwxr = dwx + static_cast<std::size_t>(r) * in;
                const double* wxr = wx + static_cast<std::size_t>(r) * in;
                for (int k = 0; k < in; ++k) dwxr[k] += dz_r * rec.inputs(c, k);
                if (params.variant == InputVariant::value) {
                    d_theta_via_input += dz_r * wxr[0];
                }
                double* dwhr = dwh + static_cast<std::size_t>(r) * H;
                const double* whr = wh + static_cast<std::size_t>(r) * H;
                for (int k = 0; k < H; ++k) {
                    dwhr[k] += dz_r * prev_h(c, k);
                    new_d_h(c, k) += dz_r * whr[k];
                }
                db[r] += dz_r;
            }
        }
        // The raw weight value feeds the input vector in the value variant;
        // the encoded loss/gradient entries are frozen.
        new_d_theta[c] += d_theta_via_input;
    }

    adj.d_theta = std::move(new_d_theta);
    adj.d_h = std::move(new_d_h);
    adj.d_cell = std::move(new_d_cell);
    adj.d_prev_f = std::move(new_d_prev_f);
    adj.d_prev_i = std::move(new_d_prev_i);
}

// Seeded initialization: forget-gate bias high and input-gate bias low, so
// that the initial update rule behaves like SGD with a small learning rate
// and a mild decay. All other weights are small uniform; layer-1 biases zero.
// Draw order: per-gate W_x then W_h (row-major), then W_F, b_F, W_I, b_I.
inline MetaParams init_meta_params(int hidden, InputVariant variant, std::uint64_t seed,
                                   const PreprocessConfig& pre = {}) {
    if (hidden < 1) throw DataError("init_meta_params: hidden size must be >= 1");
    MetaParams params;
    params.hidden = hidden;
    params.variant = variant;
    params.pre = pre;
    const MetaLayout lay = params.layout();
    params.phi = Vector::Zero(static_cast<Eigen::Index>(lay.total()));
    Rng rng(seed);
    constexpr double kScale = 0.1;
    for (int g = 0; g < 4; ++g) {
        double* wx = params.phi.data() + lay.wx_offset(g);
        for (int k = 0; k < hidden * lay.input; ++k) wx[k] = rng.uniform(-kScale, kScale);
        double* wh = params.phi.data() + lay.wh_offset(g);
        for (int k = 0; k < hidden * hidden; ++k) wh[k] = rng.uniform(-kScale, kScale);
    }
    double* wf = params.phi.data() + lay.wf_offset();
    for (int k = 0; k <= hidden; ++k) wf[k] = rng.uniform(-kScale, kScale);
    params.phi[static_cast<Eigen::Index>(lay.bf_offset())] = rng.uniform(4.0, 5.0);
    double* wi = params.phi.data() + lay.wi_offset();
    for (int k = 0; k <= hidden; ++k) wi[k] = rng.uniform(-kScale, kScale);
    params.phi[static_cast<Eigen::Index>(lay.bi_offset())] = rng.uniform(-5.0, -4.0);
    return params;
}

}  // namespace mlad
