#include "stagcn/gcn.hpp"
#include "stagcn/simulator.hpp"

#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

using namespace stagcn;

namespace {

GraphSnapshot random_snapshot(std::mt19937_64& rng, int nodes, int features, int label) {
    WindowSegment w;
    w.samples = testing::random_matrix(12, nodes, rng);
    if (nodes > 1) w.samples.col(1) = 0.9 * w.samples.col(0) + 0.1 * w.samples.col(1);
    w.label = label;
    GraphSnapshot s = build_snapshot(w);
    if (features != kNodeFeatureCount) s.features = testing::random_matrix(nodes, features, rng);
    return s;
}

GcnModel random_model(std::mt19937_64& rng, int f, int h, int c) {
    GcnModel m = init_model(f, h, c, rng());
    m.b1 = testing::random_matrix(h, 1, rng, 0.3);
    m.b2 = testing::random_matrix(h, 1, rng, 0.3);
    m.bout = testing::random_matrix(c, 1, rng, 0.3);
    return m;
}

double loss_of(const GcnModel& m, const GraphSnapshot& s) { return cross_entropy(forward(m, s).logits, s.label); }

/// Central differences over every entry of one parameter tensor.
template <typename Tensor>
Tensor numeric_gradient(GcnModel& m, Tensor GcnModel::*member, const GraphSnapshot& s, double eps) {
    Tensor& p = m.*member;
    Tensor g = Tensor::Zero(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double saved = p.data()[i];
        p.data()[i] = saved + eps;
        const double up = loss_of(m, s);
        p.data()[i] = saved - eps;
        const double down = loss_of(m, s);
        p.data()[i] = saved;
        g.data()[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

template <typename Tensor>
double relative_error(const Tensor& analytic, const Tensor& numeric) {
    const double diff = (analytic - numeric).norm();
    const double scale = analytic.norm() + numeric.norm();
    return scale < 1e-10 ? diff : diff / scale;
}

/// Plain two-hidden-layer perceptron written with loops.
std::vector<double> mlp_logits(const GcnModel& m, const std::vector<double>& x) {
    const int h = m.hidden();
    std::vector<double> a(h), b(h), out(m.classes());
    for (int j = 0; j < h; ++j) {
        double z = m.b1(j);
        for (int i = 0; i < m.features(); ++i) z += x[i] * m.w1(i, j);
        a[j] = z > 0 ? z : 0;
    }
    for (int j = 0; j < h; ++j) {
        double z = m.b2(j);
        for (int i = 0; i < h; ++i) z += a[i] * m.w2(i, j);
        b[j] = z > 0 ? z : 0;
    }
    for (int c = 0; c < m.classes(); ++c) {
        double z = m.bout(c);
        for (int i = 0; i < h; ++i) z += b[i] * m.wout(i, c);
        out[c] = z;
    }
    return out;
}

GcnModel zero_model(int f, int h, int c) {
    GcnModel m = init_model(f, h, c, 0);
    m.w1.setZero();
    m.w2.setZero();
    m.wout.setZero();
    return m;
}

}  // namespace

TEST_CASE("init_model") {
    const auto a = init_model(3, 4, 2, 42);
    const auto b = init_model(3, 4, 2, 42);
    const auto c = init_model(3, 4, 2, 43);
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
    CHECK(a.wout == b.wout);
    CHECK((a.w1 != c.w1 || a.w2 != c.w2 || a.wout != c.wout));
    const double s = std::sqrt(6.0 / 7.0);
    CHECK(a.w1.cwiseAbs().maxCoeff() <= s);
    CHECK(a.w2.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 8.0));
    CHECK(a.b1.isZero());
    CHECK(a.b2.isZero());
    CHECK(a.bout.isZero());
    CHECK(a.features() == 3);
    CHECK(a.hidden() == 4);
    CHECK(a.classes() == 2);
    CHECK_THROWS_AS(init_model(0, 4, 2, 1), DataError);
    CHECK_THROWS_AS(init_model(3, -1, 2, 1), DataError);
    CHECK_THROWS_AS(init_model(3, 4, 0, 1), DataError);
}

TEST_CASE("forward with zero parameters gives uniform probabilities") {
    std::mt19937_64 rng(1);
    const auto s = random_snapshot(rng, 5, 3, 0);
    const auto m = zero_model(3, 6, 3);
    const auto cache = forward(m, s);
    CHECK(cache.logits.isZero());
    const auto p = predict(m, s);
    for (int c = 0; c < 3; ++c) CHECK(p.probabilities(c) == doctest::Approx(1.0 / 3.0));
    CHECK(p.label == 0);
}

TEST_CASE("single node with identity adjacency reduces to an MLP") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = random_model(rng, 3, 5, 4);
        GraphSnapshot s;
        s.features = testing::random_matrix(1, 3, rng);
        s.adjacency_norm = Matrix::Identity(1, 1);
        const auto logits = forward(m, s).logits;
        const auto expected = mlp_logits(m, {s.features(0, 0), s.features(0, 1), s.features(0, 2)});
        for (int c = 0; c < 4; ++c) CHECK(logits(c) == doctest::Approx(expected[c]).epsilon(1e-12));
    }
}

TEST_CASE("forward rejects mismatched shapes") {
    std::mt19937_64 rng(3);
    const auto m = init_model(3, 4, 2, 0);
    auto s = random_snapshot(rng, 4, 5, 0);
    CHECK_THROWS_AS(forward(m, s), DataError);
    s = random_snapshot(rng, 4, 3, 0);
    s.adjacency_norm = Matrix::Identity(3, 3);
    CHECK_THROWS_AS(forward(m, s), DataError);
}

TEST_CASE("property: node permutation leaves logits unchanged") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const int v = static_cast<int>(rng() % 8 + 2);
        const auto m = random_model(rng, 3, 6, 3);
        const auto s = random_snapshot(rng, v, 3, 0);
        std::vector<int> perm(static_cast<std::size_t>(v));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::PermutationMatrix<Eigen::Dynamic> p(v);
        for (int i = 0; i < v; ++i) p.indices()(i) = perm[static_cast<std::size_t>(i)];
        GraphSnapshot q = s;
        q.features = p * s.features;
        q.adjacency_norm = p * s.adjacency_norm * p.transpose();
        CHECK((forward(m, s).logits - forward(m, q).logits).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("cross_entropy") {
    CHECK(cross_entropy(Vector::Zero(4), 2) == doctest::Approx(std::log(4.0)));
    CHECK(cross_entropy(Vector::Zero(4), 2) == doctest::Approx(1.3863).epsilon(1e-4));
    const double big = cross_entropy(Vector{{1000.0, 0.0}}, 0);
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(0.0));
    CHECK(std::isfinite(cross_entropy(Vector{{1000.0, 0.0}}, 1)));
    CHECK(cross_entropy(Vector{{0.0, 1.0}}, 0) == doctest::Approx(std::log(1.0 + std::exp(1.0))));
    CHECK(cross_entropy(Vector{{0.0, 1.0}}, 0) == doctest::Approx(1.3133).epsilon(1e-4));
    CHECK_THROWS_AS(cross_entropy(Vector::Zero(2), 2), DataError);
    CHECK_THROWS_AS(cross_entropy(Vector::Zero(2), -1), DataError);
}

TEST_CASE("backward on a zero model: output bias gradient is softmax minus one-hot") {
    std::mt19937_64 rng(5);
    const auto m = zero_model(3, 4, 3);
    const auto s = random_snapshot(rng, 4, 3, 1);
    const auto g = backward(m, forward(m, s), 1);
    CHECK(g.bout(0) == doctest::Approx(1.0 / 3.0));
    CHECK(g.bout(1) == doctest::Approx(1.0 / 3.0 - 1.0));
    CHECK(g.bout(2) == doctest::Approx(1.0 / 3.0));
    CHECK(g.wout.isZero());
}

TEST_CASE("backward matches central finite differences") {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int v = static_cast<int>(rng() % 6 + 1);
        const int h = static_cast<int>(rng() % 5 + 1);
        const int c = static_cast<int>(rng() % 2 + 2);
        auto m = random_model(rng, 3, h, c);
        const auto s = random_snapshot(rng, v, 3, static_cast<int>(rng() % static_cast<std::uint64_t>(c)));
        const auto g = backward(m, forward(m, s), s.label);
        constexpr double eps = 1e-5;
        worst = std::max(worst, relative_error(g.w1, numeric_gradient(m, &GcnModel::w1, s, eps)));
        worst = std::max(worst, relative_error(g.b1, numeric_gradient(m, &GcnModel::b1, s, eps)));
        worst = std::max(worst, relative_error(g.w2, numeric_gradient(m, &GcnModel::w2, s, eps)));
        worst = std::max(worst, relative_error(g.b2, numeric_gradient(m, &GcnModel::b2, s, eps)));
        worst = std::max(worst, relative_error(g.wout, numeric_gradient(m, &GcnModel::wout, s, eps)));
        worst = std::max(worst, relative_error(g.bout, numeric_gradient(m, &GcnModel::bout, s, eps)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("dead ReLU unit passes no gradient") {
    std::mt19937_64 rng(7);
    auto m = random_model(rng, 3, 4, 2);
    m.b1(2) = -1e6;  // unit 2 of layer 1 never fires
    m.b2(1) = -1e6;  // unit 1 of layer 2 never fires
    const auto s = random_snapshot(rng, 5, 3, 1);
    const auto g = backward(m, forward(m, s), 1);
    CHECK(g.w1.col(2).isZero());
    CHECK(g.b1(2) == 0.0);
    CHECK(g.w2.col(1).isZero());
    CHECK(g.w2.row(2).isZero());
    CHECK(g.b2(1) == 0.0);
    CHECK(g.wout.row(1).isZero());
}

TEST_CASE("backward rejects a stale cache") {
    std::mt19937_64 rng(8);
    auto m = random_model(rng, 3, 4, 2);
    const auto s = random_snapshot(rng, 3, 3, 0);
    const auto cache = forward(m, s);
    apply_step(m, GradientSet::zeros_like(m), -0.1);
    CHECK_THROWS_AS(backward(m, cache, 0), DataError);
    const auto other = init_model(3, 5, 2, 1);
    CHECK_THROWS_AS(backward(other, forward(m, s), 0), DataError);
}

TEST_CASE("predict") {
    GcnModel m = zero_model(3, 2, 2);
    m.bout = Vector{{2.0, 2.0}};
    GraphSnapshot s;
    s.features = Matrix::Ones(2, 3);
    s.adjacency_norm = Matrix::Identity(2, 2);
    CHECK(predict(m, s).label == 0);
    m.bout = Vector{{1.0, 2.0}};
    CHECK(predict(m, s).label == 1);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto model = random_model(rng, 3, 8, 5);
        const auto p = predict(model, random_snapshot(rng, 6, 3, 0));
        CHECK(std::abs(p.probabilities.sum() - 1.0) <= 1e-10);
        CHECK((p.probabilities.array() >= 0.0).all());
        CHECK((p.probabilities.array() <= 1.0).all());
    }
}

namespace {

/// Class 0: independent noise. Class 1: variables 0 and 1 coupled.
std::vector<GraphSnapshot> coupled_vs_uncoupled(std::mt19937_64& rng, int per_class) {
    std::vector<GraphSnapshot> out;
    for (int k = 0; k < per_class; ++k) {
        for (int label : {0, 1}) {
            WindowSegment w;
            w.samples = testing::random_matrix(20, 5, rng);
            if (label == 1) w.samples.col(1) = w.samples.col(0) + 0.1 * w.samples.col(1);
            w.label = label;
            out.push_back(build_snapshot(w));
        }
    }
    return out;
}

/// VAR(1) windows: class 1 has a persistent driver with two lagged
/// followers, class 0 has no cross-coupling.
std::vector<GraphSnapshot> var_coupled_vs_uncoupled(int windows_per_class) {
    std::vector<GraphSnapshot> out;
    for (int label : {0, 1}) {
        RegimeSpec spec;
        spec.name = label ? "coupled" : "uncoupled";
        spec.class_id = label;
        spec.coupling = Matrix::Identity(4, 4) * 0.2;
        spec.noise_std = Vector::Ones(4);
        if (label == 1) {
            spec.coupling(0, 0) = 0.95;
            for (int f : {1, 2}) {
                spec.coupling(f, f) = 0.0;
                spec.coupling(f, 0) = 1.0;
                spec.noise_std(f) = 0.3;
            }
        }
        spec.duration = static_cast<std::size_t>(20 * windows_per_class);
        spec.seed = 100 + static_cast<std::uint64_t>(label);
        const auto data = simulate(spec, {"uncoupled", "coupled"});
        for (const auto& w : segment_windows(data, 20, 20)) out.push_back(build_snapshot(w));
    }
    return out;
}

}  // namespace

TEST_CASE("fit separates coupled from uncoupled VAR windows") {
    const auto train = var_coupled_vs_uncoupled(40);
    auto model = init_model(3, 16, 2, 0);
    TrainingConfig config;
    config.epochs = 200;
    config.batch_size = 4;
    const auto log = fit(model, train, config);
    REQUIRE(log.epochs.size() == 200);
    double best = 0.0;
    for (const auto& e : log.epochs) best = std::max(best, e.train_accuracy);
    CHECK(best == 100.0);
    std::size_t correct = 0;
    for (const auto& s : train) correct += predict(model, s).label == s.label;
    CHECK(correct == train.size());
}

TEST_CASE("fit with zero learning rate leaves parameters unchanged") {
    std::mt19937_64 rng(11);
    const auto train = coupled_vs_uncoupled(rng, 5);
    auto model = init_model(3, 8, 2, 3);
    const auto before = model;
    TrainingConfig config;
    config.learning_rate = 0.0;
    config.epochs = 5;
    fit(model, train, config);
    CHECK(model.w1 == before.w1);
    CHECK(model.w2 == before.w2);
    CHECK(model.wout == before.wout);
    CHECK(model.b1 == before.b1);
    CHECK(model.bout == before.bout);
}

TEST_CASE("fit is deterministic per seed") {
    std::mt19937_64 rng(12);
    const auto train = coupled_vs_uncoupled(rng, 10);
    TrainingConfig config;
    config.epochs = 10;
    config.seed = 77;
    auto a = init_model(3, 8, 2, 5);
    auto b = init_model(3, 8, 2, 5);
    const auto la = fit(a, train, config);
    const auto lb = fit(b, train, config);
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
    CHECK(a.wout == b.wout);
    CHECK(a.bout == b.bout);
    for (std::size_t i = 0; i < la.epochs.size(); ++i) {
        CHECK(la.epochs[i].mean_loss == lb.epochs[i].mean_loss);
        CHECK(la.epochs[i].train_accuracy == lb.epochs[i].train_accuracy);
    }
}

TEST_CASE("full-batch steps with a small learning rate do not increase the loss") {
    std::mt19937_64 rng(13);
    const auto train = coupled_vs_uncoupled(rng, 10);
    auto model = init_model(3, 8, 2, 1);
    TrainingConfig config;
    config.learning_rate = 1e-3;
    config.epochs = 1;
    config.batch_size = static_cast<int>(train.size());
    auto full_loss = [&] {
        double sum = 0.0;
        for (const auto& s : train) sum += loss_of(model, s);
        return sum / static_cast<double>(train.size());
    };
    double previous = full_loss();
    // Each fit call restarts momentum, so these are plain gradient steps.
    for (int step = 0; step < 10; ++step) {
        fit(model, train, config);
        const double current = full_loss();
        CHECK(current <= previous + 1e-12);
        previous = current;
    }
}

TEST_CASE("fit error paths") {
    auto model = init_model(3, 4, 2, 0);
    CHECK_THROWS_AS(fit(model, {}, TrainingConfig{}), DataError);

    std::mt19937_64 rng(14);
    auto train = coupled_vs_uncoupled(rng, 2);
    train[1].features(0, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainingConfig config;
    config.epochs = 1;
    config.batch_size = 1;
    try {
        fit(model, train, config);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }

    train = coupled_vs_uncoupled(rng, 2);
    train[0].label = 5;
    CHECK_THROWS_AS(fit(model, train, config), DataError);
    config.momentum = 1.0;
    CHECK_THROWS_AS(fit(model, coupled_vs_uncoupled(rng, 2), config), DataError);
}

TEST_CASE("checkpoint round-trips bit-identically") {
    testing::TempDir dir("ckpt");
    std::mt19937_64 rng(15);
    Checkpoint cp;
    cp.model = random_model(rng, 3, 7, 3);
    cp.model.w1 /= 3.0;
    cp.class_names = {"normal", "f1", "f2"};
    cp.config.seed = 99;
    cp.log.epochs = {{1, 0.123456789012345, 50.0}, {2, 0.1, 66.66666666666667}};
    write_checkpoint(dir / "a.json", cp);
    const auto back = read_checkpoint(dir / "a.json");
    CHECK(back.model.w1 == cp.model.w1);
    CHECK(back.model.w2 == cp.model.w2);
    CHECK(back.model.wout == cp.model.wout);
    CHECK(back.model.b1 == cp.model.b1);
    CHECK(back.model.b2 == cp.model.b2);
    CHECK(back.model.bout == cp.model.bout);
    CHECK(back.config.seed == 99);
    CHECK(back.log.epochs[0].mean_loss == cp.log.epochs[0].mean_loss);
    write_checkpoint(dir / "b.json", back);
    std::ifstream a(dir / "a.json"), b(dir / "b.json");
    CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));

    std::ofstream(dir / "bad.json") << R"({"format":"other"})";
    CHECK_THROWS_AS(read_checkpoint(dir / "bad.json"), DataError);
}
