#include "stagcn/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace stagcn {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

SnapshotBatch make_batch(const TimeSeriesDataset& data, const NormalizationStats& stats, const RunConfig& config,
                         Split split) {
    const int stride = split == Split::Train ? config.effective_train_stride() : config.effective_stride();
    const auto windows = segment_windows(apply_standardizer(data, stats), config.window_length, stride);
    SnapshotConfig snap_config;
    snap_config.threshold = config.threshold;
    snap_config.weighted_edges = config.weighted_edges;

    SnapshotBatch batch;
    batch.split = to_string(split);
    batch.class_names = data.class_names;
    batch.variable_names = data.variable_names;
    batch.config = config;
    batch.normalization = stats;
    batch.snapshots = build_snapshots(windows, snap_config);
    return batch;
}

TrainingConfig training_config(const RunConfig& c) {
    TrainingConfig t;
    t.learning_rate = c.learning_rate;
    t.momentum = c.momentum;
    t.epochs = c.epochs;
    t.batch_size = c.batch_size;
    t.seed = c.seed;
    return t;
}

bool same_graph_settings(const RunConfig& a, const RunConfig& b) {
    return a.window_length == b.window_length && a.effective_stride() == b.effective_stride() &&
           a.effective_train_stride() == b.effective_train_stride() && a.threshold == b.threshold &&
           a.weighted_edges == b.weighted_edges;
}

std::string training_log_text(const Checkpoint& cp) {
    std::ostringstream os;
    os << "# " << kArtifactVersion << " training log\n";
    os << "# config: " << cp.config.to_json().dump() << '\n';
    os << "epoch,mean_loss,train_acc\n";
    for (const auto& e : cp.log.epochs) {
        char line[128];
        std::snprintf(line, sizeof line, "%d,%.10f,%.4f\n", e.epoch, e.mean_loss, e.train_accuracy);
        os << line;
    }
    if (!cp.log.epochs.empty()) {
        char line[128];
        std::snprintf(line, sizeof line, "final train Acc: %.2f%%\n", cp.log.epochs.back().train_accuracy);
        os << line;
    }
    return os.str();
}

}  // namespace

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".stagcn.lock") {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw DataError("output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
        }
        throw DataError("cannot create lock file " + path_.string() + ": " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

BenchmarkSuite run_simulate(const fs::path& out_dir, const SimulateOptions& options) {
    const auto suite = make_benchmark_suite(options.classes, options.variables, options.train_samples, options.seed);
    OutputLock lock(out_dir);
    write_benchmark_files(out_dir, suite, options.train_samples, options.test_samples, options.seed);
    return suite;
}

SnapshotSummary run_snapshot(const fs::path& manifest_path, const fs::path& out_dir, const RunConfig& config) {
    config.validate();
    const Manifest manifest = read_manifest(manifest_path);
    bool has_test = false;
    for (const auto& e : manifest.entries) has_test = has_test || e.split == Split::Test;

    const auto train = load_dataset(manifest_path, Split::Train);
    const auto stats = fit_standardizer(train);

    OutputLock lock(out_dir);
    SnapshotSummary summary;
    summary.class_names = train.class_names;
    const auto train_batch = make_batch(train, stats, config, Split::Train);
    summary.train_counts = train_batch.class_counts();
    write_snapshot_batch(out_dir / kTrainBatchFile, train_batch);
    if (has_test) {
        const auto test = load_dataset(manifest_path, Split::Test);
        const auto test_batch = make_batch(test, stats, config, Split::Test);
        summary.test_counts = test_batch.class_counts();
        write_snapshot_batch(out_dir / kTestBatchFile, test_batch);
    }
    return summary;
}

Checkpoint run_train(const fs::path& train_batch, const fs::path& checkpoint_path, const RunConfig& config,
                     bool force) {
    config.validate();
    if (fs::exists(checkpoint_path) && !force) {
        throw DataError("checkpoint " + checkpoint_path.string() + " already exists (use --force to overwrite)");
    }
    const auto batch = read_snapshot_batch(train_batch);
    if (batch.snapshots.empty()) throw DataError(train_batch.string() + ": no training snapshots");

    Checkpoint cp;
    cp.config = batch.config;
    cp.config.hidden = config.hidden;
    cp.config.learning_rate = config.learning_rate;
    cp.config.momentum = config.momentum;
    cp.config.epochs = config.epochs;
    cp.config.batch_size = config.batch_size;
    cp.config.seed = config.seed;
    cp.class_names = batch.class_names;
    cp.model = init_model(static_cast<int>(batch.feature_count()), cp.config.hidden,
                          static_cast<int>(batch.class_names.size()), cp.config.seed);
    cp.log = fit(cp.model, batch.snapshots, training_config(cp.config));
    cp.model.revision = 0;

    const auto dir = checkpoint_path.parent_path();
    OutputLock lock(dir.empty() ? fs::path(".") : dir);
    write_checkpoint(checkpoint_path, cp);
    write_text(fs::path(checkpoint_path.string() + ".log"), training_log_text(cp));
    return cp;
}

EvaluationReport run_eval(const fs::path& checkpoint_path, const fs::path& batch_path, const fs::path& out_prefix) {
    const auto cp = read_checkpoint(checkpoint_path);
    const auto batch = read_snapshot_batch(batch_path);
    if (!same_graph_settings(cp.config, batch.config)) {
        throw DataError("snapshot batch " + batch_path.string() +
                        " was built with different window/threshold settings than the checkpoint");
    }
    if (batch.class_names != cp.class_names) {
        throw DataError("snapshot batch class names differ from the checkpoint's");
    }
    auto report = evaluate(cp.model, batch.snapshots, cp.class_names, cp.config);

    const auto dir = out_prefix.parent_path();
    OutputLock lock(dir.empty() ? fs::path(".") : dir);
    write_text(fs::path(out_prefix.string() + ".txt"), report.to_text());
    write_text(fs::path(out_prefix.string() + ".json"), report.to_json().dump(2) + "\n");
    return report;
}

PipelineResult run_pipeline(const fs::path& out_dir, const SimulateOptions& sim, const RunConfig& config, bool force) {
    config.validate();
    PipelineResult result;
    result.dir = out_dir;
    const auto data_dir = out_dir / "data";
    const auto snap_dir = out_dir / "snapshots";
    run_simulate(data_dir, sim);
    result.snapshots = run_snapshot(data_dir / "manifest.json", snap_dir, config);
    result.checkpoint = run_train(snap_dir / kTrainBatchFile, out_dir / "model.json", config, force);
    result.report = run_eval(out_dir / "model.json", snap_dir / kTestBatchFile, out_dir / "report");
    return result;
}

ScalingResult run_scaling(const fs::path& out_dir, const std::vector<int>& class_counts, const SimulateOptions& sim,
                          const RunConfig& config) {
    config.validate();
    if (class_counts.size() < 2) throw DataError("class scaling needs at least two class counts");
    std::vector<ScalingSetting> settings;
    for (int classes : class_counts) {
        SimulateOptions options = sim;
        options.classes = classes;
        const auto dir = out_dir / ("classes_" + std::to_string(classes));
        run_simulate(dir / "data", options);
        run_snapshot(dir / "data" / "manifest.json", dir / "snapshots", config);
        auto train = read_snapshot_batch(dir / "snapshots" / kTrainBatchFile);
        auto test = read_snapshot_batch(dir / "snapshots" / kTestBatchFile);
        settings.push_back({train.class_names, std::move(train.snapshots), std::move(test.snapshots)});
    }
    const auto factory = [&](const ScalingSetting& s) {
        GcnModel model = init_model(kNodeFeatureCount, config.hidden, static_cast<int>(s.class_names.size()), config.seed);
        fit(model, s.train, training_config(config));
        return model;
    };
    auto result = class_scaling_experiment(factory, settings, config);

    OutputLock lock(out_dir);
    nlohmann::json doc;
    doc["format"] = "stagcn-scaling";
    doc["artifact_version"] = kArtifactVersion;
    doc["config"] = config.to_json();
    doc["trend"] = result.trend;
    doc["reports"] = nlohmann::json::array();
    std::string text = "# " + std::string(kArtifactVersion) + " class-scaling report\n" + result.summary + "\n";
    for (const auto& r : result.reports) {
        doc["reports"].push_back(r.to_json());
        text += "== " + std::to_string(r.class_names.size()) + " classes ==\n" + r.to_text() + "\n";
    }
    write_text(out_dir / "scaling.txt", text);
    write_text(out_dir / "scaling.json", doc.dump(2) + "\n");
    return result;
}

}  // namespace stagcn
