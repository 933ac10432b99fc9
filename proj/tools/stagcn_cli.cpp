// stagcn: simulate -> snapshot -> train -> eval pipeline for graph-snapshot
// process monitoring.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure.

#include "stagcn/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace stagcn;

void add_graph_options(CLI::App& cmd, RunConfig& config, int& stride, int& train_stride) {
    cmd.add_option("-L,--window", config.window_length, "Samples per window (L)")->capture_default_str();
    cmd.add_option("--stride", stride, "Window advance for test snapshots (default: L)");
    cmd.add_option("--train-stride", train_stride, "Window advance for train snapshots (default: stride)");
    cmd.add_option("-T,--threshold", config.threshold, "Association threshold T_common in (0, 1]")
        ->capture_default_str();
    cmd.add_flag("--weighted", config.weighted_edges, "Keep |r| as edge weights instead of 1");
}

void add_training_options(CLI::App& cmd, RunConfig& config) {
    cmd.add_option("--hidden", config.hidden, "Hidden width H")->capture_default_str();
    cmd.add_option("--lr", config.learning_rate, "Learning rate")->capture_default_str();
    cmd.add_option("--momentum", config.momentum, "Momentum in [0, 1)")->capture_default_str();
    cmd.add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
    cmd.add_option("--batch-size", config.batch_size, "Minibatch size")->capture_default_str();
}

void add_simulation_options(CLI::App& cmd, SimulateOptions& sim) {
    cmd.add_option("--classes", sim.classes, "Number of classes (normal + faults)")->capture_default_str();
    cmd.add_option("--vars", sim.variables, "Number of monitoring variables")->capture_default_str();
    cmd.add_option("--train-samples", sim.train_samples, "Train samples per class")->capture_default_str();
    cmd.add_option("--test-samples", sim.test_samples, "Test samples per class")->capture_default_str();
}

std::string counts_line(const std::vector<std::string>& names, const std::vector<std::size_t>& counts) {
    std::ostringstream os;
    for (std::size_t i = 0; i < counts.size(); ++i) os << (i ? ", " : "") << names[i] << "=" << counts[i];
    return os.str();
}

void print_report_summary(const EvaluationReport& r) {
    for (std::size_t i = 0; i < r.class_names.size(); ++i) {
        std::cout << "  " << r.class_names[i] << ": " << r.per_class_acc[i] << "% (" << r.counts[i] << ")\n";
    }
    std::cout << "  Ave.: " << r.macro_average << "%\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-snapshot process monitoring with a graph convolutional network"};
    app.require_subcommand(1);

    RunConfig config;
    SimulateOptions sim;
    int stride = 0;
    int train_stride = 0;
    std::string out, manifest, snapshots, model;
    bool force = false;
    std::vector<int> class_counts{3, 6};

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic benchmark suite (CSV + manifest)");
    add_simulation_options(*simulate, sim);
    simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
    simulate->add_option("--out", out, "Output directory")->required();

    auto* snapshot = app.add_subcommand("snapshot", "Build graph snapshot batches from a manifest");
    snapshot->add_option("--manifest", manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
    snapshot->add_option("--out", out, "Output directory")->required();
    add_graph_options(*snapshot, config, stride, train_stride);

    auto* train = app.add_subcommand("train", "Train a GCN on a snapshot batch");
    train->add_option("--snapshots", snapshots, "Train snapshot batch")->required()->check(CLI::ExistingFile);
    train->add_option("--out", out, "Checkpoint path")->required();
    train->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    train->add_flag("--force", force, "Overwrite an existing checkpoint");
    add_training_options(*train, config);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a snapshot batch");
    eval->add_option("--model", model, "Checkpoint path")->required()->check(CLI::ExistingFile);
    eval->add_option("--snapshots", snapshots, "Snapshot batch")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", out, "Report path prefix (writes .txt and .json)")->required();

    auto* run = app.add_subcommand("run", "Full pipeline: simulate, snapshot, train, eval");
    run->add_option("--out", out, "Output directory")->required();
    run->add_option("--seed", config.seed, "Random seed for simulation and training")->capture_default_str();
    run->add_flag("--force", force, "Overwrite an existing checkpoint");
    add_simulation_options(*run, sim);
    add_graph_options(*run, config, stride, train_stride);
    add_training_options(*run, config);

    auto* scaling = app.add_subcommand("scaling", "Class-scaling experiment over nested class counts");
    scaling->add_option("--out", out, "Output directory")->required();
    scaling->add_option("--class-counts", class_counts, "Class counts, increasing")->delimiter(',')->capture_default_str();
    scaling->add_option("--seed", config.seed, "Random seed for simulation and training")->capture_default_str();
    scaling->add_option("--vars", sim.variables, "Number of monitoring variables")->capture_default_str();
    scaling->add_option("--train-samples", sim.train_samples, "Train samples per class")->capture_default_str();
    scaling->add_option("--test-samples", sim.test_samples, "Test samples per class")->capture_default_str();
    add_graph_options(*scaling, config, stride, train_stride);
    add_training_options(*scaling, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    if (stride > 0) config.stride = stride;
    if (train_stride > 0) config.train_stride = train_stride;

    try {
        if (stride < 0 || train_stride < 0) throw DataError("stride must be at least 1");
        if (simulate->parsed()) {
            const auto suite = run_simulate(out, sim);
            std::cout << "wrote " << suite.specs.size() << " classes x {train, test} to " << out << "\n"
                      << suite.separability_report;
        } else if (snapshot->parsed()) {
            const auto summary = run_snapshot(manifest, out, config);
            std::cout << "train snapshots: " << counts_line(summary.class_names, summary.train_counts) << '\n';
            if (!summary.test_counts.empty()) {
                std::cout << "test snapshots: " << counts_line(summary.class_names, summary.test_counts) << '\n';
            }
        } else if (train->parsed()) {
            const auto cp = run_train(snapshots, out, config, force);
            const auto& last = cp.log.epochs.back();
            std::cout << "epoch " << last.epoch << " loss " << last.mean_loss << " train Acc " << last.train_accuracy
                      << "%\nwrote " << out << '\n';
        } else if (eval->parsed()) {
            const auto report = run_eval(model, snapshots, out);
            print_report_summary(report);
        } else if (run->parsed()) {
            sim.seed = config.seed;
            const auto result = run_pipeline(out, sim, config, force);
            std::cout << "train snapshots: "
                      << counts_line(result.snapshots.class_names, result.snapshots.train_counts) << '\n';
            print_report_summary(result.report);
        } else if (scaling->parsed()) {
            sim.seed = config.seed;
            const auto result = run_scaling(out, class_counts, sim, config);
            std::cout << result.summary;
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
