#pragma once

#include "stagcn/snapshot.hpp"
#include "stagcn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stagcn {

/// Two graph-convolution layers, node-mean readout and a linear head:
///
///   H1 = relu(A X W1 + b1)
///   H2 = relu(A H1 W2 + b2)
///   logits = Wout^T mean_rows(H2) + bout
///
/// The readout makes the model independent of node count and order.
struct GcnModel {
    Matrix w1;    // F x H
    Vector b1;    // H
    Matrix w2;    // H x H
    Vector b2;    // H
    Matrix wout;  // H x C
    Vector bout;  // C
    /// Bumped on every parameter update; forward caches record it.
    std::uint64_t revision = 0;

    int features() const { return static_cast<int>(w1.rows()); }
    int hidden() const { return static_cast<int>(w1.cols()); }
    int classes() const { return static_cast<int>(wout.cols()); }

    bool all_finite() const;
    /// Throws DataError when tensor shapes disagree with (F, H, C).
    void check_shapes() const;
};

/// Same layout as GcnModel, one tensor per parameter.
struct GradientSet {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    Matrix wout;
    Vector bout;

    static GradientSet zeros_like(const GcnModel& model);
    GradientSet& operator+=(const GradientSet& other);
    GradientSet& operator*=(double scale);
    bool all_finite() const;
};

/// Intermediates of one forward pass, consumed by backward().
struct ForwardCache {
    std::uint64_t model_revision = 0;
    int features = 0, hidden = 0, classes = 0;
    Matrix adjacency;  // A
    Matrix ax;         // A X
    Matrix z1, h1;
    Matrix ah1;        // A H1
    Matrix z2, h2;
    Vector pooled;
    Vector logits;
};

struct TrainingConfig {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int epochs = 200;
    int batch_size = 8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_accuracy = 0.0;  // percent
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
};

struct Prediction {
    int label = 0;
    Vector probabilities;
};

/// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero biases.
GcnModel init_model(int features, int hidden, int classes, std::uint64_t seed);

ForwardCache forward(const GcnModel& model, const GraphSnapshot& snapshot);

/// Numerically stable softmax.
Vector softmax(const Vector& logits);

/// Cross-entropy via log-sum-exp.
double cross_entropy(const Vector& logits, int label);

GradientSet backward(const GcnModel& model, const ForwardCache& cache, int label);

/// Minibatch gradient descent with momentum, shuffled per epoch from the seed.
/// Throws NumericalError on a non-finite loss or gradient.
TrainingLog fit(GcnModel& model, const std::vector<GraphSnapshot>& train, const TrainingConfig& config);

/// Argmax of the logits, ties to the lowest class id.
Prediction predict(const GcnModel& model, const GraphSnapshot& snapshot);

/// Applies `scale * grads` as a plain step; used by tests and finite differences.
void apply_step(GcnModel& model, const GradientSet& grads, double scale);

struct Checkpoint {
    static constexpr int kFormatVersion = 1;

    GcnModel model;
    RunConfig config;
    std::vector<std::string> class_names;
    TrainingLog log;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace stagcn
