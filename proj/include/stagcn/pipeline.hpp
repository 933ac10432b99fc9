#pragma once

#include "stagcn/config.hpp"
#include "stagcn/evaluation.hpp"
#include "stagcn/gcn.hpp"
#include "stagcn/simulator.hpp"
#include "stagcn/snapshot.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stagcn {

/// Exclusive claim on an output directory, released on destruction.
class OutputLock {
public:
    explicit OutputLock(const std::filesystem::path& dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::filesystem::path path_;
};

struct SimulateOptions {
    int classes = 3;
    int variables = 16;
    std::size_t train_samples = 5000;
    std::size_t test_samples = 2000;
    std::uint64_t seed = 0;
};

BenchmarkSuite run_simulate(const std::filesystem::path& out_dir, const SimulateOptions& options);

struct SnapshotSummary {
    std::vector<std::string> class_names;
    std::vector<std::size_t> train_counts;
    std::vector<std::size_t> test_counts;  // empty when the manifest has no test split
};

inline constexpr const char* kTrainBatchFile = "train.snapshots.json";
inline constexpr const char* kTestBatchFile = "test.snapshots.json";

/// Standardizes with train statistics only, windows each split and writes
/// one snapshot batch per split.
SnapshotSummary run_snapshot(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                             const RunConfig& config);

/// Trains on a batch. Window settings come from the batch's config echo,
/// training settings from `config`. Refuses to overwrite without `force`.
Checkpoint run_train(const std::filesystem::path& train_batch, const std::filesystem::path& checkpoint_path,
                     const RunConfig& config, bool force);

/// Writes `<out_prefix>.txt` and `<out_prefix>.json`.
EvaluationReport run_eval(const std::filesystem::path& checkpoint_path, const std::filesystem::path& batch_path,
                          const std::filesystem::path& out_prefix);

struct PipelineResult {
    SnapshotSummary snapshots;
    Checkpoint checkpoint;
    EvaluationReport report;
    std::filesystem::path dir;
};

/// simulate -> snapshot -> train -> eval under `out_dir` with one config.
PipelineResult run_pipeline(const std::filesystem::path& out_dir, const SimulateOptions& sim, const RunConfig& config,
                            bool force = true);

/// Runs the pipeline for each class count and summarizes the accuracy trend
/// into `<out_dir>/scaling.txt` and `<out_dir>/scaling.json`.
ScalingResult run_scaling(const std::filesystem::path& out_dir, const std::vector<int>& class_counts,
                          const SimulateOptions& sim, const RunConfig& config);

}  // namespace stagcn
