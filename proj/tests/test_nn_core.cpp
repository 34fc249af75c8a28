#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mlad/gradcheck.hpp"
#include "mlad/model.hpp"
#include "mlad/model_io.hpp"
#include "mlad/network.hpp"
#include "mlad/rng.hpp"
#include "mlad/si_training.hpp"

using namespace mlad;

namespace {

ModelSpec small_spec() {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.hidden_dims = {4};
    spec.num_classes = 2;
    return spec;
}

ParameterVector random_theta(const ModelSpec& spec, std::uint64_t seed, double scale = 0.5) {
    ParameterVector theta = zero_parameters(spec);
    Rng rng(seed);
    for (auto& v : theta.values) v = rng.uniform(-scale, scale);
    return theta;
}

Matrix random_features(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Matrix x(rows, cols);
    Rng rng(seed);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = rng.normal();
    }
    return x;
}

// Flattens backward() into plain vectors for finite_diff_check.
Vector theta_gradient(const ModelSpec& spec, const ParameterVector& theta,
                      const FrameBatch& batch) {
    const BackwardResult bw = backward(spec, theta, batch);
    return Eigen::Map<const Vector>(bw.grad.values.data(),
                                    static_cast<Eigen::Index>(bw.grad.values.size()));
}

}  // namespace

TEST_CASE("forward: all-zero weights give uniform posteriors") {
    ModelSpec spec;
    spec.input_dim = 5;
    spec.hidden_dims = {7, 3};
    spec.num_classes = 4;
    const ParameterVector theta = zero_parameters(spec);
    const Matrix x = random_features(6, 5, 11);
    const Matrix post = forward(spec, theta, x);
    for (Eigen::Index r = 0; r < post.rows(); ++r) {
        for (Eigen::Index c = 0; c < post.cols(); ++c) {
            CHECK(post(r, c) == doctest::Approx(0.25).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward: hand-evaluated 2x2 single hidden layer") {
    ModelSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {2};
    spec.num_classes = 2;
    ParameterVector theta = zero_parameters(spec);
    // Hidden and output weight matrices are identity, biases zero.
    theta.matrix_at(0).setIdentity();
    theta.matrix_at(2).setIdentity();

    Matrix x(1, 2);
    x << 1.0, -1.0;
    const Matrix post = forward(spec, theta, x);

    // Independent direct evaluation of logistic + softmax.
    const double s0 = 1.0 / (1.0 + std::exp(-1.0));
    const double s1 = 1.0 / (1.0 + std::exp(1.0));
    const double e0 = std::exp(s0);
    const double e1 = std::exp(s1);
    CHECK(post(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-14));
    CHECK(post(0, 1) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-14));
}

TEST_CASE("forward: rows sum to one on random seeded inputs") {
    ModelSpec spec;
    spec.input_dim = 6;
    spec.hidden_dims = {9, 5};
    spec.num_classes = 7;
    const ParameterVector theta = random_theta(spec, 42, 1.5);
    const Matrix x = random_features(20, 6, 43);
    const Matrix post = forward(spec, theta, x);
    for (Eigen::Index r = 0; r < post.rows(); ++r) {
        CHECK(std::abs(post.row(r).sum() - 1.0) <= 1e-12);
        CHECK(post.row(r).minCoeff() >= 0.0);
    }
}

TEST_CASE("forward: dimension mismatch is a structural error") {
    const ModelSpec spec = small_spec();
    ModelSpec other = spec;
    other.hidden_dims = {5};
    const ParameterVector theta = zero_parameters(other);
    const Matrix x = random_features(2, 3, 1);
    CHECK_THROWS_AS(forward(spec, theta, x), DataError);
    CHECK_THROWS_AS(forward(spec, zero_parameters(spec), random_features(2, 4, 1), {}),
                    DataError);
}

TEST_CASE("cross_entropy_loss: exact posteriors give zero") {
    Matrix post(3, 2);
    post << 1.0, 0.0, 0.0, 1.0, 1.0, 0.0;
    CHECK(cross_entropy_loss(post, {0, 1, 0}) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cross_entropy_loss: uniform posteriors give F log K") {
    const int K = 5;
    const int F = 7;
    Matrix post = Matrix::Constant(F, K, 1.0 / K);
    std::vector<int> labels(F, 2);
    CHECK(cross_entropy_loss(post, labels) == doctest::Approx(F * std::log(double(K))).epsilon(1e-13));
}

TEST_CASE("cross_entropy_loss: zero posterior is floored") {
    Matrix post(2, 2);
    post << 0.0, 1.0, 0.0, 1.0;
    const double loss = cross_entropy_loss(post, {0, 0});
    CHECK(loss == doctest::Approx(2.0 * -std::log(1e-12)).epsilon(1e-13));
}

TEST_CASE("cross_entropy_loss: empty batch is a precondition error") {
    Matrix post(0, 2);
    CHECK_THROWS_AS(cross_entropy_loss(post, {}), DataError);
}

TEST_CASE("backward: saturated one-hot posteriors give near-zero gradient") {
    const ModelSpec spec = small_spec();
    ParameterVector theta = zero_parameters(spec);
    // Zero output weights, huge bias gap: posteriors are one-hot on class 0.
    theta.matrix_at(3)(0, 0) = 60.0;
    FrameBatch batch;
    batch.features = random_features(4, 3, 7);
    batch.labels = {0, 0, 0, 0};
    const BackwardResult bw = backward(spec, theta, batch);
    double max_abs = 0.0;
    for (double g : bw.grad.values) max_abs = std::max(max_abs, std::abs(g));
    CHECK(max_abs <= 1e-9);
}

TEST_CASE("backward: matches central finite differences on a seeded 3-4-2 net") {
    const ModelSpec spec = small_spec();
    const ParameterVector theta = random_theta(spec, 123);
    FrameBatch batch;
    batch.features = random_features(5, 3, 124);
    batch.labels = {0, 1, 1, 0, 1};

    const Vector analytic = theta_gradient(spec, theta, batch);
    const Vector params = Eigen::Map<const Vector>(theta.values.data(),
                                                   static_cast<Eigen::Index>(theta.values.size()));
    auto loss_fn = [&](const Vector& p) {
        ParameterVector t = theta;
        Eigen::Map<Vector>(t.values.data(), p.size()) = p;
        return cross_entropy_loss(forward(spec, t, batch.features), batch.labels);
    };
    const GradCheckReport report = finite_diff_check(loss_fn, analytic, params, 1e-4);
    CHECK(report.max_rel_error <= 1e-5);
}

TEST_CASE("backward: summed loss is additive over disjoint frame sets") {
    const ModelSpec spec = small_spec();
    const ParameterVector theta = random_theta(spec, 9);
    FrameBatch all;
    all.features = random_features(10, 3, 10);
    all.labels = {0, 1, 0, 1, 1, 0, 0, 1, 1, 0};
    FrameBatch first;
    first.features = all.features.topRows(6);
    first.labels.assign(all.labels.begin(), all.labels.begin() + 6);
    FrameBatch second;
    second.features = all.features.bottomRows(4);
    second.labels.assign(all.labels.begin() + 6, all.labels.end());

    const BackwardResult bw_all = backward(spec, theta, all);
    const BackwardResult bw_a = backward(spec, theta, first);
    const BackwardResult bw_b = backward(spec, theta, second);
    CHECK(bw_all.loss == doctest::Approx(bw_a.loss + bw_b.loss).epsilon(1e-13));
    for (std::size_t k = 0; k < bw_all.grad.values.size(); ++k) {
        CHECK(std::abs(bw_all.grad.values[k] - bw_a.grad.values[k] - bw_b.grad.values[k]) <=
              1e-12);
    }
}

TEST_CASE("predict_labels: one-hot posteriors pick that class") {
    const ModelSpec spec = small_spec();
    ParameterVector theta = zero_parameters(spec);
    theta.matrix_at(3)(1, 0) = 50.0;  // output bias forces class 1
    const Matrix x = random_features(3, 3, 5);
    const auto labels = predict_labels(spec, theta, x);
    for (int y : labels) CHECK(y == 1);
}

TEST_CASE("predict_labels: exact ties break to the lowest class index") {
    ModelSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {3};
    spec.num_classes = 4;
    ParameterVector theta = zero_parameters(spec);
    auto bias = theta.matrix_at(3);
    bias(0, 0) = -1.0;
    bias(1, 0) = 3.0;
    bias(2, 0) = 0.0;
    bias(3, 0) = 3.0;  // classes 1 and 3 tie
    const auto labels = predict_labels(spec, theta, random_features(4, 2, 3));
    for (int y : labels) CHECK(y == 1);
}

TEST_CASE("predict_labels: all-zero weights predict class 0") {
    const ModelSpec spec = small_spec();
    const auto labels = predict_labels(spec, zero_parameters(spec), random_features(5, 3, 8));
    for (int y : labels) CHECK(y == 0);
}

TEST_CASE("predict_labels: invariant under uniform monotone logit transforms") {
    const ModelSpec spec = small_spec();
    const ParameterVector theta = random_theta(spec, 77);
    const Matrix x = random_features(12, 3, 78);
    const auto base = predict_labels(spec, theta, x);
    // Scaling the output layer by a positive factor and shifting every output
    // bias equally is a strictly monotone transform of each frame's logits.
    for (double scale : {0.25, 3.0}) {
        ParameterVector t = theta;
        t.matrix_at(2) *= scale;
        auto b = t.matrix_at(3);
        b = (b * scale).eval();
        b.array() += 0.7;
        CHECK(predict_labels(spec, t, x) == base);
    }
}

TEST_CASE("finite_diff_check: exact for a quadratic") {
    Vector p(4);
    p << 0.3, -1.2, 2.0, 0.0;
    auto loss = [](const Vector& q) { return 0.5 * q.squaredNorm(); };
    const GradCheckReport report = finite_diff_check(loss, p, p, 1e-4);
    CHECK(report.max_rel_error <= 1e-9);
    CHECK(report.epsilon == 1e-4);
}

TEST_CASE("finite_diff_check: corrupted analytic gradient is caught") {
    Vector p(3);
    p << 1.0, -0.5, 0.25;
    auto loss = [](const Vector& q) { return 0.5 * q.squaredNorm(); };
    Vector corrupted = p;
    corrupted[1] += 0.1;
    const GradCheckReport report = finite_diff_check(loss, corrupted, p, 1e-4);
    CHECK(report.max_rel_error > 1e-2);
    CHECK(report.worst_coordinate == 1);
}

TEST_CASE("finite_diff_check: non-finite perturbed loss names the coordinate") {
    Vector p(2);
    p << 5e-5, 1.0;
    auto loss = [](const Vector& q) { return std::sqrt(q[0]) + q[1]; };
    Vector grad(2);
    grad << 0.5 / std::sqrt(p[0]), 1.0;
    try {
        finite_diff_check(loss, grad, p, 1e-4);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("coordinate 0") != std::string::npos);
    }
}

TEST_CASE("train_si_model: separable two-class toy reaches low training FER") {
    ModelSpec spec;
    spec.input_dim = 2;
    spec.hidden_dims = {4};
    spec.num_classes = 2;

    FrameBatch train;
    train.features.resize(120, 2);
    train.labels.resize(120);
    Rng rng(2024);
    for (int f = 0; f < 120; ++f) {
        const int y = f % 2;
        train.features(f, 0) = (y == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
        train.features(f, 1) = 0.3 * rng.normal();
        train.labels[static_cast<std::size_t>(f)] = y;
    }
    SiTrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 0.02;
    cfg.minibatch_size = 30;
    const ParameterVector theta = train_si_model(spec, train, train, cfg, 1);

    const auto pred = predict_labels(spec, theta, train.features);
    int errors = 0;
    for (std::size_t f = 0; f < pred.size(); ++f) {
        if (pred[f] != train.labels[f]) ++errors;
    }
    CHECK(static_cast<double>(errors) / 120.0 <= 0.05);
}

TEST_CASE("train_si_model: zero epochs returns the initialization unchanged") {
    const ModelSpec spec = small_spec();
    FrameBatch data;
    data.features = random_features(10, 3, 55);
    data.labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    FrameBatch other;
    other.features = random_features(10, 3, 56);
    other.labels = data.labels;

    SiTrainConfig cfg;
    cfg.epochs = 0;
    const ParameterVector a = train_si_model(spec, data, data, cfg, 3);
    cfg.learning_rate = 99.0;  // must not matter with zero epochs
    const ParameterVector b = train_si_model(spec, other, other, cfg, 3);
    CHECK(a.values == b.values);
}

TEST_CASE("train_si_model: same seed gives bit-identical weights") {
    const ModelSpec spec = small_spec();
    FrameBatch data;
    data.features = random_features(30, 3, 90);
    data.labels.resize(30);
    for (int f = 0; f < 30; ++f) data.labels[static_cast<std::size_t>(f)] = f % 2;
    SiTrainConfig cfg;
    cfg.epochs = 5;
    cfg.minibatch_size = 8;
    const ParameterVector a = train_si_model(spec, data, data, cfg, 7);
    const ParameterVector b = train_si_model(spec, data, data, cfg, 7);
    CHECK(a.values == b.values);
}

TEST_CASE("model files: save/load round trip is f32 bit-exact") {
    const ModelSpec spec = small_spec();
    const ParameterVector theta = random_theta(spec, 321);
    const auto dir = std::filesystem::temp_directory_path() / "mlad_model_io_test";
    std::filesystem::create_directories(dir);
    save_model(dir / "am", spec, theta);
    const LoadedModel loaded = load_model(dir / "am");
    CHECK(loaded.spec.input_dim == spec.input_dim);
    CHECK(loaded.spec.hidden_dims == spec.hidden_dims);
    CHECK(loaded.spec.num_classes == spec.num_classes);
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        CHECK(loaded.theta.values[k] == static_cast<double>(static_cast<float>(theta.values[k])));
    }
    // Re-saving the loaded model reproduces the binary bit-exactly.
    save_model(dir / "am2", loaded.spec, loaded.theta);
    std::ifstream f1(dir / "am.bin", std::ios::binary);
    std::ifstream f2(dir / "am2.bin", std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("model files: corrupt manifest or truncated weights fail") {
    const ModelSpec spec = small_spec();
    const auto dir = std::filesystem::temp_directory_path() / "mlad_model_io_bad";
    std::filesystem::create_directories(dir);
    save_model(dir / "am", spec, zero_parameters(spec));
    {
        std::ofstream bad(dir / "am.json");
        bad << "{\"format_version\": 2}\n";
    }
    CHECK_THROWS_AS(load_model(dir / "am"), DataError);
    save_model(dir / "am", spec, zero_parameters(spec));
    std::filesystem::resize_file(dir / "am.bin", 8);
    CHECK_THROWS_AS(load_model(dir / "am"), DataError);
    std::filesystem::remove_all(dir);
}
