#include "stagcn/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace stagcn {

namespace {

std::string fixed1(double value) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << value;
    return os.str();
}

std::string config_line(const RunConfig& c) {
    std::ostringstream os;
    os << "L=" << c.window_length << " stride=" << c.effective_stride() << " train_stride=" << c.effective_train_stride()
       << " T_common=" << c.threshold << " weighted=" << (c.weighted_edges ? "on" : "off") << " H=" << c.hidden
       << " lr=" << c.learning_rate << " momentum=" << c.momentum << " epochs=" << c.epochs
       << " batch=" << c.batch_size << " seed=" << c.seed;
    return os.str();
}

void finalize(EvaluationReport& r) {
    const auto c = r.class_names.size();
    r.per_class_acc.assign(c, 0.0);
    r.excluded.assign(c, false);
    r.counts.assign(c, 0);
    double sum = 0.0;
    std::size_t included = 0;
    r.total = 0;
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) r.counts[i] += r.confusion[i][j];
        r.total += r.counts[i];
        if (r.counts[i] == 0) {
            r.excluded[i] = true;
            continue;
        }
        r.per_class_acc[i] = 100.0 * static_cast<double>(r.confusion[i][i]) / static_cast<double>(r.counts[i]);
        sum += r.per_class_acc[i];
        ++included;
    }
    r.macro_average = included ? sum / static_cast<double>(included) : 0.0;
}

std::vector<std::string> default_names(std::size_t c) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < c; ++i) names.push_back("class_" + std::to_string(i));
    return names;
}

}  // namespace

EvaluationReport report_from_predictions(const std::vector<int>& truth, const std::vector<int>& predicted,
                                         std::vector<std::string> class_names) {
    if (truth.empty()) throw DataError("evaluate: empty snapshot list");
    if (truth.size() != predicted.size()) throw DataError("evaluate: truth and prediction lengths differ");
    EvaluationReport r;
    r.class_names = std::move(class_names);
    const auto c = r.class_names.size();
    r.classes = static_cast<int>(c);
    r.confusion.assign(c, std::vector<std::size_t>(c, 0));
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (truth[k] < 0 || static_cast<std::size_t>(truth[k]) >= c) {
            throw DataError("evaluate: label " + std::to_string(truth[k]) + " out of range");
        }
        if (predicted[k] < 0 || static_cast<std::size_t>(predicted[k]) >= c) {
            throw DataError("evaluate: prediction out of range");
        }
        ++r.confusion[static_cast<std::size_t>(truth[k])][static_cast<std::size_t>(predicted[k])];
    }
    finalize(r);
    return r;
}

EvaluationReport evaluate(const GcnModel& model, const std::vector<GraphSnapshot>& snapshots,
                          std::vector<std::string> class_names, const RunConfig& config) {
    if (snapshots.empty()) throw DataError("evaluate: empty snapshot list");
    if (class_names.empty()) class_names = default_names(static_cast<std::size_t>(model.classes()));
    if (class_names.size() != static_cast<std::size_t>(model.classes())) {
        throw DataError("evaluate: model has " + std::to_string(model.classes()) + " classes but " +
                        std::to_string(class_names.size()) + " class names were given");
    }
    std::vector<int> truth, predicted;
    truth.reserve(snapshots.size());
    predicted.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        if (s.label < 0 || s.label >= model.classes()) {
            throw DataError("evaluate: label " + std::to_string(s.label) + " out of range");
        }
        truth.push_back(s.label);
        predicted.push_back(predict(model, s).label);
    }
    EvaluationReport r = report_from_predictions(truth, predicted, std::move(class_names));
    r.config = config;
    r.features = model.features();
    r.hidden = model.hidden();
    return r;
}

std::string EvaluationReport::to_text() const {
    std::size_t name_width = 5;
    for (const auto& n : class_names) name_width = std::max(name_width, n.size());
    name_width += 2;

    std::ostringstream os;
    os << "# " << kArtifactVersion << " evaluation report\n";
    os << "# Acc = correct-in-class / class size (%); Ave. = unweighted mean over classes with samples\n";
    os << "# config: " << config_line(config) << '\n';
    os << "# model: F=" << features << " H=" << hidden << " C=" << classes << '\n';
    os << '\n';
    os << std::left << std::setw(static_cast<int>(name_width)) << "Class" << std::right << std::setw(8) << "Count"
       << std::setw(10) << "Acc (%)" << '\n';
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(name_width)) << class_names[i] << std::right << std::setw(8)
           << counts[i] << std::setw(10) << (excluded[i] ? std::string("n/a") : fixed1(per_class_acc[i]));
        if (excluded[i]) os << "  (no samples, excluded from Ave.)";
        os << '\n';
    }
    os << std::left << std::setw(static_cast<int>(name_width)) << "Ave." << std::right << std::setw(8) << total
       << std::setw(10) << fixed1(macro_average) << "\n\n";

    // Single-row layout: one column per class followed by Ave.
    std::vector<std::size_t> widths;
    os << std::left << std::setw(14) << "Method";
    for (const auto& n : class_names) {
        widths.push_back(std::max<std::size_t>(n.size(), 6) + 2);
        os << std::right << std::setw(static_cast<int>(widths.back())) << n;
    }
    os << std::right << std::setw(8) << "Ave." << '\n';
    os << std::left << std::setw(14) << "This method";
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        os << std::right << std::setw(static_cast<int>(widths[i]))
           << (excluded[i] ? std::string("n/a") : fixed1(per_class_acc[i]));
    }
    os << std::right << std::setw(8) << fixed1(macro_average) << "\n\n";

    os << "Confusion matrix (rows = true, columns = predicted)\n";
    os << std::left << std::setw(static_cast<int>(name_width)) << "";
    for (std::size_t j = 0; j < class_names.size(); ++j) {
        os << std::right << std::setw(static_cast<int>(widths[j])) << class_names[j];
    }
    os << '\n';
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        os << std::left << std::setw(static_cast<int>(name_width)) << class_names[i];
        for (std::size_t j = 0; j < class_names.size(); ++j) {
            os << std::right << std::setw(static_cast<int>(widths[j])) << confusion[i][j];
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::json EvaluationReport::to_json() const {
    nlohmann::json doc;
    doc["format"] = "stagcn-report";
    doc["format_version"] = 1;
    doc["artifact_version"] = kArtifactVersion;
    doc["metric"] = "per-class recall (%), macro average over classes with samples";
    doc["config"] = config.to_json();
    doc["model"] = {{"features", features}, {"hidden", hidden}, {"classes", classes}};
    doc["class_names"] = class_names;
    doc["counts"] = counts;
    doc["per_class_acc"] = per_class_acc;
    doc["excluded"] = excluded;
    doc["macro_average"] = macro_average;
    doc["total"] = total;
    doc["confusion"] = confusion;
    return doc;
}

void validate_report_json(const nlohmann::json& doc) {
    auto require = [&](const char* key, auto check, const char* type) {
        if (!doc.contains(key)) throw DataError(std::string("report: missing field '") + key + "'");
        if (!check(doc.at(key))) throw DataError(std::string("report: field '") + key + "' must be " + type);
    };
    auto is_string = [](const nlohmann::json& j) { return j.is_string(); };
    auto is_number = [](const nlohmann::json& j) { return j.is_number(); };
    auto is_object = [](const nlohmann::json& j) { return j.is_object(); };
    auto is_array = [](const nlohmann::json& j) { return j.is_array(); };
    require("format", is_string, "a string");
    require("format_version", is_number, "a number");
    require("artifact_version", is_string, "a string");
    require("config", is_object, "an object");
    require("model", is_object, "an object");
    require("class_names", is_array, "an array");
    require("counts", is_array, "an array");
    require("per_class_acc", is_array, "an array");
    require("excluded", is_array, "an array");
    require("macro_average", is_number, "a number");
    require("total", is_number, "a number");
    require("confusion", is_array, "an array");
    if (doc.at("format") != "stagcn-report") throw DataError("report: wrong format tag");
    RunConfig::from_json(doc.at("config"));

    const auto c = doc.at("class_names").size();
    for (const char* key : {"counts", "per_class_acc", "excluded", "confusion"}) {
        if (doc.at(key).size() != c) throw DataError(std::string("report: '") + key + "' length differs from class count");
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < c; ++i) {
        const auto& row = doc.at("confusion")[i];
        if (!row.is_array() || row.size() != c) throw DataError("report: confusion matrix must be C x C");
        std::size_t row_sum = 0;
        for (const auto& cell : row) {
            if (!cell.is_number_unsigned()) throw DataError("report: confusion cells must be non-negative integers");
            row_sum += cell.get<std::size_t>();
        }
        if (row_sum != doc.at("counts")[i].get<std::size_t>()) throw DataError("report: confusion row sum != count");
        const double acc = doc.at("per_class_acc")[i].get<double>();
        if (acc < 0.0 || acc > 100.0) throw DataError("report: accuracy outside [0, 100]");
        total += row_sum;
    }
    if (total != doc.at("total").get<std::size_t>()) throw DataError("report: total differs from confusion sum");
}

ScalingResult class_scaling_experiment(const ModelFactory& factory, const std::vector<ScalingSetting>& settings,
                                       const RunConfig& config) {
    if (settings.size() < 2) throw DataError("class scaling needs at least two class-count settings");
    for (std::size_t i = 1; i < settings.size(); ++i) {
        const auto& smaller = settings[i - 1].class_names;
        const auto& larger = settings[i].class_names;
        if (larger.size() <= smaller.size() || !std::equal(smaller.begin(), smaller.end(), larger.begin())) {
            throw DataError("class scaling settings must be nested with strictly increasing class counts");
        }
    }
    ScalingResult result;
    for (const auto& setting : settings) {
        const GcnModel model = factory(setting);
        result.reports.push_back(evaluate(model, setting.test, setting.class_names, config));
    }

    bool up = false, down = false;
    for (std::size_t i = 1; i < result.reports.size(); ++i) {
        const double delta = result.reports[i].macro_average - result.reports[i - 1].macro_average;
        if (delta > 0.0) up = true;
        if (delta < 0.0) down = true;
    }
    result.trend = up && down ? "mixed" : up ? "increasing" : down ? "decreasing" : "flat";

    std::ostringstream os;
    os << "Classes   Ave. Acc (%)\n";
    for (const auto& r : result.reports) {
        os << std::left << std::setw(10) << r.class_names.size() << fixed1(r.macro_average) << '\n';
    }
    os << "trend with increasing class count: " << result.trend << '\n';
    result.summary = os.str();
    return result;
}

}  // namespace stagcn
