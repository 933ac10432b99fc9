#include "stagcn/snapshot.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace stagcn {

namespace {

bool is_constant(const Matrix& window, Eigen::Index column) {
    return window.col(column).maxCoeff() == window.col(column).minCoeff();
}

nlohmann::json matrix_to_json(const Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    const auto values = j.get<std::vector<double>>();
    if (values.size() != static_cast<std::size_t>(rows * cols)) {
        throw DataError("snapshot batch: tensor has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(rows * cols));
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

}  // namespace

Matrix PearsonAssociation::compute(const Matrix& window) const {
    const Eigen::Index len = window.rows();
    const Eigen::Index v = window.cols();
    if (len < 2) throw DataError("association needs at least two samples");

    const Matrix centered = window.rowwise() - window.colwise().mean();
    Vector norm(v);
    std::vector<bool> degenerate(static_cast<std::size_t>(v));
    for (Eigen::Index j = 0; j < v; ++j) {
        norm(j) = centered.col(j).norm();
        degenerate[static_cast<std::size_t>(j)] = is_constant(window, j) || norm(j) == 0.0;
    }

    // The (L-1) divisors of covariance and both variances cancel.
    Matrix r = Matrix::Identity(v, v);
    for (Eigen::Index i = 0; i < v; ++i) {
        for (Eigen::Index j = i + 1; j < v; ++j) {
            double value = 0.0;
            if (!degenerate[static_cast<std::size_t>(i)] && !degenerate[static_cast<std::size_t>(j)]) {
                value = centered.col(i).dot(centered.col(j)) / (norm(i) * norm(j));
                value = std::clamp(value, -1.0, 1.0);
            }
            r(i, j) = value;
            r(j, i) = value;
        }
    }
    return r;
}

Matrix node_features(const WindowSegment& window) {
    const Matrix& x = window.samples;
    const Eigen::Index len = x.rows();
    const Eigen::Index v = x.cols();
    if (len < 2) throw DataError("node features need at least two samples");

    Matrix features(v, kNodeFeatureCount);
    for (Eigen::Index j = 0; j < v; ++j) {
        const double mean = x.col(j).mean();
        features(j, 0) = mean;
        if (is_constant(x, j)) {
            features(j, 0) = x(0, j);
            features(j, 1) = 0.0;
            features(j, 2) = 0.0;
            continue;
        }
        const Vector d = x.col(j).array() - mean;
        const double sum_sq = d.squaredNorm();
        features(j, 1) = std::sqrt(sum_sq / static_cast<double>(len - 1));
        double lagged = 0.0;
        for (Eigen::Index t = 1; t < len; ++t) lagged += d(t) * d(t - 1);
        features(j, 2) = sum_sq > 0.0 ? lagged / sum_sq : 0.0;
    }
    return features;
}

Matrix association_matrix(const WindowSegment& window) {
    return PearsonAssociation{}.compute(window.samples);
}

Matrix threshold_adjacency(const Matrix& association, double threshold, bool weighted) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw DataError("threshold must lie in (0, 1], got " + std::to_string(threshold));
    }
    if (association.rows() != association.cols()) throw DataError("association matrix must be square");
    const Eigen::Index v = association.rows();
    Matrix a = Matrix::Identity(v, v);
    for (Eigen::Index i = 0; i < v; ++i) {
        for (Eigen::Index j = i + 1; j < v; ++j) {
            // Read one triangle so the result is symmetric by construction.
            const double magnitude = std::abs(association(i, j));
            if (magnitude >= threshold) {
                const double w = weighted ? magnitude : 1.0;
                a(i, j) = w;
                a(j, i) = w;
            }
        }
    }
    return a;
}

Matrix normalize_adjacency(const Matrix& adjacency) {
    if (adjacency.rows() != adjacency.cols()) throw DataError("adjacency must be square");
    const Vector degree = adjacency.rowwise().sum();
    if ((degree.array() <= 0.0).any()) {
        throw DataError("adjacency has a row without positive degree (missing self-loop)");
    }
    const Eigen::Index v = adjacency.rows();
    Matrix out(v, v);
    for (Eigen::Index i = 0; i < v; ++i) {
        for (Eigen::Index j = i; j < v; ++j) {
            const double value = adjacency(i, j) / std::sqrt(degree(i) * degree(j));
            out(i, j) = value;
            out(j, i) = value;
        }
    }
    return out;
}

GraphSnapshot build_snapshot(const WindowSegment& window, const SnapshotConfig& config) {
    if (window.samples.rows() < 2) throw DataError("window must hold at least two samples");
    GraphSnapshot snapshot;
    snapshot.features = node_features(window);
    const Matrix assoc = config.measure->compute(window.samples);
    snapshot.adjacency_norm =
        normalize_adjacency(threshold_adjacency(assoc, config.threshold, config.weighted_edges));
    snapshot.label = window.label;
    snapshot.start_index = window.start_index;
    return snapshot;
}

std::vector<GraphSnapshot> build_snapshots(const std::vector<WindowSegment>& windows,
                                           const SnapshotConfig& config) {
    std::vector<GraphSnapshot> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(build_snapshot(w, config));
    return out;
}

std::size_t SnapshotBatch::feature_count() const {
    return snapshots.empty() ? static_cast<std::size_t>(kNodeFeatureCount)
                             : static_cast<std::size_t>(snapshots.front().features.cols());
}

std::vector<std::size_t> SnapshotBatch::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : snapshots) {
        if (s.label >= 0 && static_cast<std::size_t>(s.label) < counts.size()) ++counts[static_cast<std::size_t>(s.label)];
    }
    return counts;
}

void write_snapshot_batch(const std::filesystem::path& path, const SnapshotBatch& batch) {
    nlohmann::json doc;
    doc["format"] = "stagcn-snapshots";
    doc["format_version"] = SnapshotBatch::kFormatVersion;
    doc["artifact_version"] = kArtifactVersion;
    doc["config"] = batch.config.to_json();
    doc["split"] = batch.split;
    doc["class_names"] = batch.class_names;
    doc["variable_names"] = batch.variable_names;
    doc["normalization"] = {
        {"mean", std::vector<double>(batch.normalization.mean.data(),
                                     batch.normalization.mean.data() + batch.normalization.mean.size())},
        {"std", std::vector<double>(batch.normalization.std.data(),
                                    batch.normalization.std.data() + batch.normalization.std.size())},
        {"constant", batch.normalization.constant},
    };
    doc["node_count"] = batch.variable_names.size();
    doc["feature_count"] = batch.feature_count();
    auto& list = doc["snapshots"] = nlohmann::json::array();
    for (const auto& s : batch.snapshots) {
        list.push_back({{"label", s.label},
                        {"start_index", s.start_index},
                        {"nodes", s.nodes()},
                        {"features", matrix_to_json(s.features)},
                        {"adjacency", matrix_to_json(s.adjacency_norm)}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write snapshot batch " + path.string());
    out << doc.dump() << '\n';
}

SnapshotBatch read_snapshot_batch(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open snapshot batch " + path.string());
    SnapshotBatch batch;
    try {
        nlohmann::json doc;
        in >> doc;
        if (doc.at("format").get<std::string>() != "stagcn-snapshots") {
            throw DataError(path.string() + ": not a snapshot batch");
        }
        const int version = doc.at("format_version").get<int>();
        if (version != SnapshotBatch::kFormatVersion) {
            throw DataError(path.string() + ": unsupported snapshot format version " + std::to_string(version));
        }
        batch.config = RunConfig::from_json(doc.at("config"));
        batch.split = doc.at("split").get<std::string>();
        batch.class_names = doc.at("class_names").get<std::vector<std::string>>();
        batch.variable_names = doc.at("variable_names").get<std::vector<std::string>>();
        const auto& norm = doc.at("normalization");
        const auto mean = norm.at("mean").get<std::vector<double>>();
        const auto std = norm.at("std").get<std::vector<double>>();
        batch.normalization.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        batch.normalization.std = Eigen::Map<const Vector>(std.data(), static_cast<Eigen::Index>(std.size()));
        batch.normalization.constant = norm.at("constant").get<std::vector<bool>>();
        const auto f = doc.at("feature_count").get<Eigen::Index>();
        for (const auto& s : doc.at("snapshots")) {
            GraphSnapshot snap;
            const auto v = s.at("nodes").get<Eigen::Index>();
            snap.label = s.at("label").get<int>();
            snap.start_index = s.at("start_index").get<std::size_t>();
            snap.features = matrix_from_json(s.at("features"), v, f);
            snap.adjacency_norm = matrix_from_json(s.at("adjacency"), v, v);
            if (snap.label < 0 || static_cast<std::size_t>(snap.label) >= batch.class_names.size()) {
                throw DataError(path.string() + ": snapshot label out of range");
            }
            batch.snapshots.push_back(std::move(snap));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed snapshot batch: " + e.what());
    }
    return batch;
}

}  // namespace stagcn
