#pragma once

#include "stagcn/config.hpp"
#include "stagcn/timeseries.hpp"
#include "stagcn/types.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace stagcn {

/// Per-node feature columns: window mean, window std (divisor L-1) and
/// lag-1 autocorrelation.
inline constexpr int kNodeFeatureCount = 3;

/// Static graph built from one window. Nodes are monitoring variables.
struct GraphSnapshot {
    Matrix features;        // V x F
    Matrix adjacency_norm;  // V x V, D^-1/2 A D^-1/2 with self-loops
    int label = 0;
    std::size_t start_index = 0;

    std::size_t nodes() const { return static_cast<std::size_t>(features.rows()); }
};

/// Pairwise association between window columns. Implementations return a
/// symmetric V x V matrix with entries in [-1, 1] and a unit diagonal.
class AssociationMeasure {
public:
    virtual ~AssociationMeasure() = default;
    virtual Matrix compute(const Matrix& window) const = 0;
    virtual std::string name() const = 0;
};

/// Pearson correlation with sample covariance. Pairs involving a
/// zero-variance column get 0 off the diagonal.
class PearsonAssociation final : public AssociationMeasure {
public:
    Matrix compute(const Matrix& window) const override;
    std::string name() const override { return "pearson"; }
};

struct SnapshotConfig {
    double threshold = 0.6;
    bool weighted_edges = false;
    std::shared_ptr<const AssociationMeasure> measure = std::make_shared<PearsonAssociation>();
};

Matrix node_features(const WindowSegment& window);
Matrix association_matrix(const WindowSegment& window);

/// A_ij = 1 iff i != j and |r_ij| >= threshold; A_ii = 1. With `weighted`
/// set, surviving edges keep |r_ij| instead of 1.
Matrix threshold_adjacency(const Matrix& association, double threshold, bool weighted = false);

/// D^-1/2 A D^-1/2 with D the row sums of A.
Matrix normalize_adjacency(const Matrix& adjacency);

GraphSnapshot build_snapshot(const WindowSegment& window, const SnapshotConfig& config = {});

std::vector<GraphSnapshot> build_snapshots(const std::vector<WindowSegment>& windows,
                                           const SnapshotConfig& config = {});

/// Versioned on-disk container for a list of snapshots.
struct SnapshotBatch {
    static constexpr int kFormatVersion = 1;

    std::string split;
    std::vector<std::string> class_names;
    std::vector<std::string> variable_names;
    RunConfig config;
    NormalizationStats normalization;
    std::vector<GraphSnapshot> snapshots;

    std::size_t feature_count() const;
    /// Number of snapshots per class id.
    std::vector<std::size_t> class_counts() const;
};

void write_snapshot_batch(const std::filesystem::path& path, const SnapshotBatch& batch);
SnapshotBatch read_snapshot_batch(const std::filesystem::path& path);

}  // namespace stagcn
