#pragma once

#include "stagcn/config.hpp"
#include "stagcn/gcn.hpp"
#include "stagcn/snapshot.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace stagcn {

/// Per-class diagnosis accuracy. Acc[c] is class recall in percent,
/// confusion rows are true classes and columns predicted classes, and the
/// average is the unweighted mean over classes that have test samples.
struct EvaluationReport {
    std::vector<std::string> class_names;
    std::vector<double> per_class_acc;            // percent, 0 for empty classes
    std::vector<std::size_t> counts;
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<bool> excluded;                   // classes without samples
    double macro_average = 0.0;
    std::size_t total = 0;
    RunConfig config;
    int features = 0, hidden = 0, classes = 0;

    /// Aligned text table: one row per class plus an "Ave." row, then the
    /// confusion matrix.
    std::string to_text() const;
    nlohmann::json to_json() const;
};

EvaluationReport evaluate(const GcnModel& model, const std::vector<GraphSnapshot>& snapshots,
                          std::vector<std::string> class_names = {}, const RunConfig& config = {});

/// Builds a report straight from (true, predicted) pairs.
EvaluationReport report_from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                         std::vector<std::string> class_names);

/// Throws DataError naming the first missing or mistyped field.
void validate_report_json(const nlohmann::json& doc);

struct ScalingSetting {
    std::vector<std::string> class_names;
    std::vector<GraphSnapshot> train;
    std::vector<GraphSnapshot> test;
};

/// Trains a fresh model for one setting.
using ModelFactory = std::function<GcnModel(const ScalingSetting&)>;

struct ScalingResult {
    std::vector<EvaluationReport> reports;
    /// "decreasing", "increasing", "flat" or "mixed" across settings.
    std::string trend;
    std::string summary;
};

/// Evaluates settings of strictly increasing, nested class sets. The trend
/// of the average accuracy is reported only.
ScalingResult class_scaling_experiment(const ModelFactory& factory, const std::vector<ScalingSetting>& settings,
                                       const RunConfig& config = {});

}  // namespace stagcn
