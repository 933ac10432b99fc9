#include "stagcn/gcn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace stagcn {

namespace {

Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

/// Derivative taken as 0 at exactly 0.
Matrix relu_mask(const Matrix& z) { return (z.array() > 0.0).cast<double>().matrix(); }

void fill_uniform(Matrix& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

nlohmann::json tensor_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

nlohmann::json tensor_json(const Vector& v) {
    return {{"rows", v.size()}, {"cols", 1}, {"data", std::vector<double>(v.data(), v.data() + v.size())}};
}

Matrix matrix_from(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("checkpoint tensor size mismatch");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

Vector vector_from(const nlohmann::json& j) {
    const Matrix m = matrix_from(j);
    if (m.cols() != 1) throw DataError("checkpoint bias tensor must have one column");
    return Eigen::Map<const Vector>(m.data(), m.rows());
}

}  // namespace

bool GcnModel::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() && wout.allFinite() &&
           bout.allFinite();
}

void GcnModel::check_shapes() const {
    const auto h = w1.cols();
    const auto c = wout.cols();
    if (w1.rows() < 1 || h < 1 || c < 1 || b1.size() != h || w2.rows() != h || w2.cols() != h ||
        b2.size() != h || wout.rows() != h || bout.size() != c) {
        throw DataError("GCN parameter shapes are inconsistent");
    }
}

GradientSet GradientSet::zeros_like(const GcnModel& model) {
    GradientSet g;
    g.w1 = Matrix::Zero(model.w1.rows(), model.w1.cols());
    g.b1 = Vector::Zero(model.b1.size());
    g.w2 = Matrix::Zero(model.w2.rows(), model.w2.cols());
    g.b2 = Vector::Zero(model.b2.size());
    g.wout = Matrix::Zero(model.wout.rows(), model.wout.cols());
    g.bout = Vector::Zero(model.bout.size());
    return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
    w1 += other.w1;
    b1 += other.b1;
    w2 += other.w2;
    b2 += other.b2;
    wout += other.wout;
    bout += other.bout;
    return *this;
}

GradientSet& GradientSet::operator*=(double scale) {
    w1 *= scale;
    b1 *= scale;
    w2 *= scale;
    b2 *= scale;
    wout *= scale;
    bout *= scale;
    return *this;
}

bool GradientSet::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() && wout.allFinite() &&
           bout.allFinite();
}

void TrainingConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw DataError("learning rate must be finite and >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DataError("momentum must lie in [0, 1)");
    if (epochs < 1) throw DataError("epochs must be at least 1");
    if (batch_size < 1) throw DataError("batch size must be at least 1");
}

GcnModel init_model(int features, int hidden, int classes, std::uint64_t seed) {
    if (features < 1 || hidden < 1 || classes < 1) {
        throw DataError("init_model: dimensions must be positive (F=" + std::to_string(features) +
                        ", H=" + std::to_string(hidden) + ", C=" + std::to_string(classes) + ")");
    }
    std::mt19937_64 rng(seed);
    GcnModel m;
    m.w1.resize(features, hidden);
    m.w2.resize(hidden, hidden);
    m.wout.resize(hidden, classes);
    fill_uniform(m.w1, std::sqrt(6.0 / (features + hidden)), rng);
    fill_uniform(m.w2, std::sqrt(6.0 / (hidden + hidden)), rng);
    fill_uniform(m.wout, std::sqrt(6.0 / (hidden + classes)), rng);
    m.b1 = Vector::Zero(hidden);
    m.b2 = Vector::Zero(hidden);
    m.bout = Vector::Zero(classes);
    return m;
}

ForwardCache forward(const GcnModel& model, const GraphSnapshot& snapshot) {
    const auto v = snapshot.features.rows();
    if (snapshot.features.cols() != model.w1.rows()) {
        throw DataError("forward: snapshot has " + std::to_string(snapshot.features.cols()) +
                        " features per node, model expects " + std::to_string(model.w1.rows()));
    }
    if (v < 1 || snapshot.adjacency_norm.rows() != v || snapshot.adjacency_norm.cols() != v) {
        throw DataError("forward: adjacency shape does not match node count");
    }
    ForwardCache c;
    c.model_revision = model.revision;
    c.features = model.features();
    c.hidden = model.hidden();
    c.classes = model.classes();
    c.adjacency = snapshot.adjacency_norm;
    c.ax = snapshot.adjacency_norm * snapshot.features;
    c.z1 = (c.ax * model.w1).rowwise() + model.b1.transpose();
    c.h1 = relu(c.z1);
    c.ah1 = snapshot.adjacency_norm * c.h1;
    c.z2 = (c.ah1 * model.w2).rowwise() + model.b2.transpose();
    c.h2 = relu(c.z2);
    c.pooled = c.h2.colwise().mean().transpose();
    c.logits = model.wout.transpose() * c.pooled + model.bout;
    return c;
}

Vector softmax(const Vector& logits) {
    const double top = logits.maxCoeff();
    Vector e = (logits.array() - top).exp();
    return e / e.sum();
}

double cross_entropy(const Vector& logits, int label) {
    if (label < 0 || label >= logits.size()) {
        throw DataError("label " + std::to_string(label) + " outside [0, " + std::to_string(logits.size()) + ")");
    }
    const double top = logits.maxCoeff();
    const double lse = top + std::log((logits.array() - top).exp().sum());
    return std::max(0.0, lse - logits(label));
}

GradientSet backward(const GcnModel& model, const ForwardCache& cache, int label) {
    if (cache.model_revision != model.revision || cache.features != model.features() ||
        cache.hidden != model.hidden() || cache.classes != model.classes()) {
        throw DataError("backward: forward cache does not belong to this model state");
    }
    if (label < 0 || label >= model.classes()) throw DataError("backward: label out of range");

    GradientSet g;
    Vector dlogits = softmax(cache.logits);
    dlogits(label) -= 1.0;

    g.wout = cache.pooled * dlogits.transpose();
    g.bout = dlogits;
    const Vector dpooled = model.wout * dlogits;

    const double inv_v = 1.0 / static_cast<double>(cache.h2.rows());
    // Each node receives dpooled / V through the mean readout.
    Matrix dz2 = relu_mask(cache.z2);
    dz2.array().rowwise() *= (dpooled.transpose() * inv_v).array();

    g.w2 = cache.ah1.transpose() * dz2;
    g.b2 = dz2.colwise().sum().transpose();
    const Matrix dh1 = cache.adjacency.transpose() * (dz2 * model.w2.transpose());
    const Matrix dz1 = dh1.cwiseProduct(relu_mask(cache.z1));

    g.w1 = cache.ax.transpose() * dz1;
    g.b1 = dz1.colwise().sum().transpose();
    return g;
}

void apply_step(GcnModel& model, const GradientSet& grads, double scale) {
    model.w1 += scale * grads.w1;
    model.b1 += scale * grads.b1;
    model.w2 += scale * grads.w2;
    model.b2 += scale * grads.b2;
    model.wout += scale * grads.wout;
    model.bout += scale * grads.bout;
    ++model.revision;
}

TrainingLog fit(GcnModel& model, const std::vector<GraphSnapshot>& train, const TrainingConfig& config) {
    config.validate();
    model.check_shapes();
    if (train.empty()) throw DataError("fit: empty training set");
    for (const auto& s : train) {
        if (s.features.cols() != model.features()) throw DataError("fit: snapshot feature count differs from model");
        if (s.label < 0 || s.label >= model.classes()) throw DataError("fit: snapshot label out of range");
    }

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    GradientSet velocity = GradientSet::zeros_like(model);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    TrainingLog log;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        int batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch, ++batch_index) {
            const std::size_t end = std::min(order.size(), begin + batch);
            GradientSet grads = GradientSet::zeros_like(model);
            double batch_loss = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const auto& s = train[order[k]];
                const ForwardCache cache = forward(model, s);
                batch_loss += cross_entropy(cache.logits, s.label);
                Eigen::Index best = 0;
                for (Eigen::Index c = 1; c < cache.logits.size(); ++c) {
                    if (cache.logits(c) > cache.logits(best)) best = c;
                }
                if (best == s.label) ++correct;
                grads += backward(model, cache, s.label);
            }
            if (!std::isfinite(batch_loss)) {
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            grads *= 1.0 / static_cast<double>(end - begin);
            if (!grads.all_finite()) {
                throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            velocity *= config.momentum;
            velocity += grads;
            apply_step(model, velocity, -config.learning_rate);
            if (!model.all_finite()) {
                throw NumericalError("non-finite parameters at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_index));
            }
            loss_sum += batch_loss;
        }
        const double n = static_cast<double>(train.size());
        log.epochs.push_back({epoch, loss_sum / n, 100.0 * static_cast<double>(correct) / n});
    }
    return log;
}

Prediction predict(const GcnModel& model, const GraphSnapshot& snapshot) {
    const ForwardCache cache = forward(model, snapshot);
    Prediction p;
    p.probabilities = softmax(cache.logits);
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < cache.logits.size(); ++c) {
        if (cache.logits(c) > cache.logits(best)) best = c;
    }
    p.label = static_cast<int>(best);
    return p;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    const auto& m = checkpoint.model;
    m.check_shapes();
    nlohmann::json doc;
    doc["format"] = "stagcn-checkpoint";
    doc["format_version"] = Checkpoint::kFormatVersion;
    doc["artifact_version"] = kArtifactVersion;
    doc["config"] = checkpoint.config.to_json();
    doc["seed"] = checkpoint.config.seed;
    doc["dims"] = {{"features", m.features()}, {"hidden", m.hidden()}, {"classes", m.classes()}};
    doc["class_names"] = checkpoint.class_names;
    doc["parameters"] = {{"w1", tensor_json(m.w1)},     {"b1", tensor_json(m.b1)},
                         {"w2", tensor_json(m.w2)},     {"b2", tensor_json(m.b2)},
                         {"wout", tensor_json(m.wout)}, {"bout", tensor_json(m.bout)}};
    auto& epochs = doc["training_log"] = nlohmann::json::array();
    for (const auto& e : checkpoint.log.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"train_accuracy", e.train_accuracy}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << doc.dump(1) << '\n';
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    Checkpoint cp;
    try {
        nlohmann::json doc;
        in >> doc;
        if (doc.at("format").get<std::string>() != "stagcn-checkpoint") {
            throw DataError(path.string() + ": not a checkpoint");
        }
        if (doc.at("format_version").get<int>() != Checkpoint::kFormatVersion) {
            throw DataError(path.string() + ": unsupported checkpoint version");
        }
        cp.config = RunConfig::from_json(doc.at("config"));
        cp.class_names = doc.at("class_names").get<std::vector<std::string>>();
        const auto& p = doc.at("parameters");
        cp.model.w1 = matrix_from(p.at("w1"));
        cp.model.b1 = vector_from(p.at("b1"));
        cp.model.w2 = matrix_from(p.at("w2"));
        cp.model.b2 = vector_from(p.at("b2"));
        cp.model.wout = matrix_from(p.at("wout"));
        cp.model.bout = vector_from(p.at("bout"));
        for (const auto& e : doc.at("training_log")) {
            cp.log.epochs.push_back({e.at("epoch").get<int>(), e.at("mean_loss").get<double>(),
                                     e.at("train_accuracy").get<double>()});
        }
        const auto& dims = doc.at("dims");
        if (dims.at("features").get<int>() != cp.model.features() || dims.at("hidden").get<int>() != cp.model.hidden() ||
            dims.at("classes").get<int>() != cp.model.classes()) {
            throw DataError(path.string() + ": declared dims disagree with parameter shapes");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed checkpoint: " + e.what());
    }
    cp.model.check_shapes();
    if (!cp.model.all_finite()) throw DataError(path.string() + ": checkpoint holds non-finite parameters");
    return cp;
}

}  // namespace stagcn
