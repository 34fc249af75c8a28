#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlad/adaptation.hpp"
#include "mlad/gradcheck.hpp"
#include "mlad/rng.hpp"

using namespace mlad;

namespace {

ModelSpec toy_spec() {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden_dims = {4, 3};
    spec.num_classes = 2;
    return spec;
}

ParameterVector random_theta(const ModelSpec& spec, std::uint64_t seed) {
    ParameterVector theta = zero_parameters(spec);
    Rng rng(seed);
    for (auto& v : theta.values) v = rng.uniform(-0.6, 0.6);
    return theta;
}

FrameBatch random_batch(int frames, int dim, int classes, std::uint64_t seed) {
    FrameBatch batch;
    batch.features.resize(frames, dim);
    batch.labels.resize(static_cast<std::size_t>(frames));
    Rng rng(seed);
    for (int f = 0; f < frames; ++f) {
        for (int d = 0; d < dim; ++d) batch.features(f, d) = rng.normal();
        batch.labels[static_cast<std::size_t>(f)] = static_cast<int>(rng.bounded(classes));
    }
    return batch;
}

void zero_gate_weights(MetaParams& mp) {
    const MetaLayout lay = mp.layout();
    for (int k = 0; k <= mp.hidden; ++k) {
        mp.phi[static_cast<Eigen::Index>(lay.wf_offset()) + k] = 0.0;
        mp.phi[static_cast<Eigen::Index>(lay.wi_offset()) + k] = 0.0;
    }
}

}  // namespace

TEST_CASE("adapt: empty batch reports no adaptation frames") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 1);
    FrameBatch empty;
    empty.features.resize(0, 3);
    for (AdaptMethod m :
         {AdaptMethod::META, AdaptMethod::ALL, AdaptMethod::LHUC, AdaptMethod::LINEAR}) {
        AdaptMethodConfig cfg = default_adapt_config(m);
        const MetaParams meta = init_meta_params(4, InputVariant::value, 2);
        if (m == AdaptMethod::META) cfg.meta = &meta;
        try {
            adapt(spec, theta, empty, cfg);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()) == "no adaptation frames");
        }
    }
}

TEST_CASE("adapt: META without meta parameters is an error") {
    const ModelSpec spec = toy_spec();
    AdaptMethodConfig cfg = default_adapt_config(AdaptMethod::META);
    CHECK_THROWS_AS(adapt(spec, random_theta(spec, 1), random_batch(4, 3, 2, 2), cfg), DataError);
}

TEST_CASE("meta_adapt: pinned identity gates return theta unchanged") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 10);
    const FrameBatch batch = random_batch(6, 3, 2, 11);
    const MetaParams meta = init_meta_params(5, InputVariant::value, 12);

    AdaptMethodConfig cfg = default_adapt_config(AdaptMethod::META, &meta);
    cfg.pin_identity_gates = true;
    const AdaptResult result = adapt(spec, theta, batch, cfg);
    CHECK(result.adapted.values == theta.values);
    CHECK(result.step_losses.size() == 1);
}

TEST_CASE("meta_adapt: zeroed gate weights equal one SGD step with decay, exactly") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 20);
    const FrameBatch batch = random_batch(8, 3, 2, 21);
    for (const InputVariant variant : {InputVariant::value, InputVariant::position}) {
        MetaParams meta = init_meta_params(6, variant, 22);
        zero_gate_weights(meta);

        const AdaptResult result = meta_adapt(spec, theta, batch, meta, 1);
        const BackwardResult bw = backward(spec, theta, batch);
        const double decay = logistic(meta.b_f());
        const double lr = logistic(meta.b_i());
        for (std::size_t k = 0; k < theta.values.size(); ++k) {
            const double expected = decay * theta.values[k] - lr * bw.grad.values[k];
            CHECK(std::abs(result.adapted.values[k] - expected) <= 1e-15);
        }
        CHECK(result.step_losses[0] == bw.loss);
    }
}

TEST_CASE("meta_adapt: near-zero gradient leaves sigma(b_F)-scaled weights") {
    const ModelSpec spec = toy_spec();
    // Saturated output bias: posteriors are one-hot on the labels, so the
    // adaptation gradient is negligible.
    ParameterVector theta = zero_parameters(spec);
    theta.matrix_at(5)(0, 0) = 60.0;
    FrameBatch batch = random_batch(5, 3, 2, 30);
    batch.labels.assign(batch.labels.size(), 0);

    MetaParams meta = init_meta_params(6, InputVariant::value, 31);
    zero_gate_weights(meta);
    const AdaptResult result = meta_adapt(spec, theta, batch, meta, 1);
    const double decay = logistic(meta.b_f());
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        CHECK(std::abs(result.adapted.values[k] - decay * theta.values[k]) <= 1e-10);
    }
}

TEST_CASE("meta_adapt: diagnostics length equals the step count") {
    const ModelSpec spec = toy_spec();
    const MetaParams meta = init_meta_params(4, InputVariant::value, 41);
    const AdaptResult result =
        meta_adapt(spec, random_theta(spec, 40), random_batch(5, 3, 2, 42), meta, 3);
    CHECK(result.step_losses.size() == 3);
}

TEST_CASE("sgd_adapt_all: zero learning rate leaves theta unchanged") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 50);
    const AdaptResult result = sgd_adapt_all(spec, theta, random_batch(6, 3, 2, 51), 0.0, 3);
    CHECK(result.adapted.values == theta.values);
    CHECK(result.step_losses.size() == 3);
}

TEST_CASE("sgd_adapt_all: one epoch matches the hand-applied update") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 60);
    const FrameBatch batch = random_batch(7, 3, 2, 61);
    const double lr = 0.05;
    const AdaptResult result = sgd_adapt_all(spec, theta, batch, lr, 1);
    const BackwardResult bw = backward(spec, theta, batch);
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        CHECK(result.adapted.values[k] == theta.values[k] - lr * bw.grad.values[k]);
    }
}

TEST_CASE("sgd_adapt_all: three epochs compose the one-epoch map") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 70);
    const FrameBatch batch = random_batch(7, 3, 2, 71);
    const AdaptResult three = sgd_adapt_all(spec, theta, batch, 0.02, 3);
    ParameterVector chained = theta;
    for (int t = 0; t < 3; ++t) {
        chained = sgd_adapt_all(spec, chained, batch, 0.02, 1).adapted;
    }
    CHECK(three.adapted.values == chained.values);
}

TEST_CASE("sgd_adapt_all: already-minimizing batch stays put") {
    const ModelSpec spec = toy_spec();
    ParameterVector theta = zero_parameters(spec);
    theta.matrix_at(5)(1, 0) = 60.0;
    FrameBatch batch = random_batch(5, 3, 2, 80);
    batch.labels.assign(batch.labels.size(), 1);
    const AdaptResult result = sgd_adapt_all(spec, theta, batch, 0.01, 3);
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        CHECK(std::abs(result.adapted.values[k] - theta.values[k]) <= 1e-12);
    }
}

TEST_CASE("sgd_adapt_all: non-finite loss raises a numerical error with step index") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 90);
    FrameBatch batch = random_batch(5, 3, 2, 91);
    // A single infinite feature saturates the forward pass (step 1 stays
    // finite) but poisons the gradient, so step 2's loss is NaN.
    batch.features(2, 1) = std::numeric_limits<double>::infinity();
    try {
        sgd_adapt_all(spec, theta, batch, 0.01, 3);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step 2") != std::string::npos);
    }
}

TEST_CASE("lhuc_adapt: zero learning rate keeps all-ones multipliers") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 100);
    const FrameBatch batch = random_batch(6, 3, 2, 101);
    const AdaptResult result = lhuc_adapt(spec, theta, batch, 0.0, 3);
    REQUIRE(result.lhuc.has_value());
    for (const auto& r : result.lhuc->r) {
        CHECK(r == Vector::Ones(r.size()));
    }
    CHECK(result.adapted.values == theta.values);
    // Bit-identical behaviour to the unadapted model.
    const Matrix base = forward(spec, theta, batch.features);
    const Matrix scaled = forward(spec, theta, batch.features, result.overlay());
    CHECK(base == scaled);
}

TEST_CASE("lhuc: all-ones multipliers reproduce unadapted posteriors bit-exactly") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 110);
    const Matrix x = random_batch(9, 3, 2, 111).features;
    const LhucParams ones = LhucParams::ones(spec);
    Overlay overlay;
    overlay.lhuc = &ones;
    CHECK(forward(spec, theta, x) == forward(spec, theta, x, overlay));
}

TEST_CASE("lhuc: zeroing the last hidden layer collapses to the output-bias softmax") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 120);
    LhucParams lhuc = LhucParams::ones(spec);
    lhuc.r.back().setZero();
    Overlay overlay;
    overlay.lhuc = &lhuc;
    const Matrix post = forward(spec, theta, random_batch(4, 3, 2, 121).features, overlay);

    const auto bias = theta.matrix_at(5);
    const double e0 = std::exp(bias(0, 0));
    const double e1 = std::exp(bias(1, 0));
    for (Eigen::Index f = 0; f < post.rows(); ++f) {
        CHECK(post(f, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-14));
        CHECK(post(f, 1) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-14));
    }
}

TEST_CASE("lhuc: multiplier gradient matches finite differences") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 130);
    const FrameBatch batch = random_batch(6, 3, 2, 131);

    LhucParams lhuc = LhucParams::ones(spec);
    Rng rng(132);
    for (auto& r : lhuc.r) {
        for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = rng.uniform(0.5, 1.5);
    }
    Overlay overlay;
    overlay.lhuc = &lhuc;
    const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);

    const int total = 4 + 3;
    Vector flat(total);
    Vector analytic(total);
    flat << lhuc.r[0], lhuc.r[1];
    analytic << bw.grad_lhuc[0], bw.grad_lhuc[1];
    auto loss_fn = [&](const Vector& p) {
        LhucParams trial = lhuc;
        trial.r[0] = p.head(4);
        trial.r[1] = p.tail(3);
        Overlay o;
        o.lhuc = &trial;
        return cross_entropy_loss(forward(spec, theta, batch.features, o), batch.labels);
    };
    const GradCheckReport report = finite_diff_check(loss_fn, analytic, flat, 1e-4);
    CHECK(report.max_rel_error <= 1e-5);
}

TEST_CASE("linear: identity transform reproduces unadapted posteriors bit-exactly") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 140);
    const Matrix x = random_batch(5, 3, 2, 141).features;
    for (int layer = 0; layer < spec.num_hidden(); ++layer) {
        const LinearTransformParams id = LinearTransformParams::identity(spec, layer);
        Overlay overlay;
        overlay.linear = &id;
        CHECK(forward(spec, theta, x) == forward(spec, theta, x, overlay));
    }
}

TEST_CASE("linear: twice-identity equals LHUC with multipliers of two") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 150);
    const Matrix x = random_batch(5, 3, 2, 151).features;
    const int layer = 1;

    LinearTransformParams twice = LinearTransformParams::identity(spec, layer);
    twice.A *= 2.0;
    Overlay lin;
    lin.linear = &twice;

    LhucParams lhuc = LhucParams::ones(spec);
    lhuc.r[layer].setConstant(2.0);
    Overlay lh;
    lh.lhuc = &lhuc;

    CHECK(forward(spec, theta, x, lin) == forward(spec, theta, x, lh));
}

TEST_CASE("linear: transform gradient matches finite differences") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 160);
    const FrameBatch batch = random_batch(6, 3, 2, 161);
    const int layer = 1;

    LinearTransformParams lt = LinearTransformParams::identity(spec, layer);
    Rng rng(162);
    for (Eigen::Index r = 0; r < lt.A.rows(); ++r) {
        for (Eigen::Index c = 0; c < lt.A.cols(); ++c) lt.A(r, c) += rng.uniform(-0.3, 0.3);
    }
    Overlay overlay;
    overlay.linear = &lt;
    const BackwardResult bw = backward_overlay(spec, theta, batch, overlay);

    const Eigen::Index d = lt.A.rows();
    Vector flat(d * d);
    Vector analytic(d * d);
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
            flat[r * d + c] = lt.A(r, c);
            analytic[r * d + c] = bw.grad_linear(r, c);
        }
    }
    auto loss_fn = [&](const Vector& p) {
        LinearTransformParams trial = lt;
        for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) trial.A(r, c) = p[r * d + c];
        }
        Overlay o;
        o.linear = &trial;
        return cross_entropy_loss(forward(spec, theta, batch.features, o), batch.labels);
    };
    const GradCheckReport report = finite_diff_check(loss_fn, analytic, flat, 1e-4);
    CHECK(report.max_rel_error <= 1e-5);
}

TEST_CASE("adapt: overlay methods never touch the base weights") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 170);
    const FrameBatch batch = random_batch(8, 3, 2, 171);
    for (AdaptMethod m : {AdaptMethod::LHUC, AdaptMethod::LINEAR}) {
        const AdaptResult result = adapt(spec, theta, batch, default_adapt_config(m));
        CHECK(result.adapted.values == theta.values);
    }
}

TEST_CASE("adapt: repeated calls are pure") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 180);
    const FrameBatch batch = random_batch(8, 3, 2, 181);
    const MetaParams meta = init_meta_params(5, InputVariant::position, 182);
    for (AdaptMethod m :
         {AdaptMethod::META, AdaptMethod::ALL, AdaptMethod::LHUC, AdaptMethod::LINEAR}) {
        AdaptMethodConfig cfg = default_adapt_config(m, &meta);
        const AdaptResult a = adapt(spec, theta, batch, cfg);
        const AdaptResult b = adapt(spec, theta, batch, cfg);
        CHECK(a.adapted.values == b.adapted.values);
        CHECK(a.step_losses == b.step_losses);
        if (a.lhuc) {
            for (std::size_t l = 0; l < a.lhuc->r.size(); ++l) {
                CHECK(a.lhuc->r[l] == b.lhuc->r[l]);
            }
        }
        if (a.linear) CHECK(a.linear->A == b.linear->A);
    }
}

TEST_CASE("adapt: frame order inside the batch does not change the result") {
    const ModelSpec spec = toy_spec();
    const ParameterVector theta = random_theta(spec, 190);
    FrameBatch batch = random_batch(10, 3, 2, 191);

    FrameBatch reversed;
    reversed.features = batch.features.colwise().reverse();
    reversed.labels.assign(batch.labels.rbegin(), batch.labels.rend());

    const MetaParams meta = init_meta_params(5, InputVariant::value, 192);
    for (AdaptMethod m :
         {AdaptMethod::META, AdaptMethod::ALL, AdaptMethod::LHUC, AdaptMethod::LINEAR}) {
        AdaptMethodConfig cfg = default_adapt_config(m, &meta);
        const AdaptResult a = adapt(spec, theta, batch, cfg);
        const AdaptResult b = adapt(spec, theta, reversed, cfg);
        REQUIRE(a.adapted.values.size() == b.adapted.values.size());
        for (std::size_t k = 0; k < a.adapted.values.size(); ++k) {
            CHECK(a.adapted.values[k] == doctest::Approx(b.adapted.values[k]).epsilon(1e-12));
        }
    }
}
