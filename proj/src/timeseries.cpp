#include "stagcn/timeseries.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stagcn {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(begin, end - begin + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (comma == std::string::npos) {
            cells.push_back(trim(std::string_view(line).substr(pos)));
            break;
        }
        cells.push_back(trim(std::string_view(line).substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return cells;
}

std::string where(const fs::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t line) {
    std::string_view view = cell;
    if (!view.empty() && view.front() == '+') view.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
    if (view.empty() || ec != std::errc() || ptr != view.data() + view.size()) {
        throw DataError(where(path, line) + ": non-numeric cell '" + cell + "'");
    }
    if (!std::isfinite(value)) {
        throw DataError(where(path, line) + ": non-finite value '" + cell + "'");
    }
    return value;
}

void append_number(std::string& out, double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    out.append(buffer, ptr);
}

}  // namespace

const char* to_string(Split split) { return split == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& text) {
    if (text == "train") return Split::Train;
    if (text == "test") return Split::Test;
    throw DataError("unknown split '" + text + "' (expected train or test)");
}

void TimeSeriesDataset::validate() const {
    const auto n = rows();
    if (labels.size() != n) throw DataError("labels length differs from sample count");
    if (!run_ids.empty() && run_ids.size() != n) throw DataError("run_ids length differs from sample count");
    if (variable_names.size() != variables()) throw DataError("variable_names length differs from column count");
    std::set<std::string> unique(variable_names.begin(), variable_names.end());
    if (unique.size() != variable_names.size()) throw DataError("variable names are not unique");
    for (int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= classes()) {
            throw DataError("label " + std::to_string(label) + " out of range");
        }
    }
    if (!samples.allFinite()) throw DataError("dataset contains non-finite samples");
}

std::vector<std::string> Manifest::class_names() const {
    std::vector<std::string> names;
    for (const auto& entry : entries) {
        if (std::find(names.begin(), names.end(), entry.class_name) == names.end()) {
            names.push_back(entry.class_name);
        }
    }
    return names;
}

Manifest read_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest " + manifest_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest_path.string() + ": malformed manifest: " + e.what());
    }
    Manifest manifest;
    try {
        manifest.sampling_period = doc.value("sampling_period", 1.0);
        const auto& entries = doc.at("entries");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            ManifestEntry entry;
            entry.path = e.at("path").get<std::string>();
            entry.class_name = e.at("class_name").get<std::string>();
            entry.split = parse_split(e.value("split", std::string("train")));
            if (entry.class_name.empty()) {
                throw DataError(manifest_path.string() + ": entry " + std::to_string(i) +
                                " has an empty class_name");
            }
            manifest.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest_path.string() + ": invalid manifest: " + e.what());
    }
    if (manifest.entries.empty()) throw DataError(manifest_path.string() + ": manifest lists no files");
    return manifest;
}

void write_manifest(const fs::path& manifest_path, const Manifest& manifest) {
    nlohmann::json doc;
    doc["format"] = "stagcn-manifest";
    doc["version"] = 1;
    doc["sampling_period"] = manifest.sampling_period;
    doc["entries"] = nlohmann::json::array();
    for (const auto& entry : manifest.entries) {
        doc["entries"].push_back({{"path", entry.path.generic_string()},
                                  {"class_name", entry.class_name},
                                  {"split", to_string(entry.split)}});
    }
    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot write manifest " + manifest_path.string());
    out << doc.dump(2) << '\n';
}

Matrix read_csv(const fs::path& path, std::vector<std::string>& header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(where(path, 1) + ": missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    header = split_csv_line(line);

    std::vector<double> values;
    std::size_t line_no = 1;
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError(where(path, line_no) + ": expected " + std::to_string(header.size()) +
                            " cells, found " + std::to_string(cells.size()));
        }
        for (const auto& cell : cells) values.push_back(parse_cell(cell, path, line_no));
        ++n_rows;
    }
    Matrix samples(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(header.size()));
    std::copy(values.begin(), values.end(), samples.data());
    return samples;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& samples) {
    if (header.size() != static_cast<std::size_t>(samples.cols())) {
        throw DataError("header width differs from sample columns");
    }
    std::string text;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) text += ',';
        text += header[j];
    }
    text += '\n';
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            if (j) text += ',';
            append_number(text, samples(i, j));
        }
        text += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write data file " + path.string());
    out << text;
}

TimeSeriesDataset load_dataset(const fs::path& manifest_path, std::optional<Split> split) {
    const Manifest manifest = read_manifest(manifest_path);
    const auto base = manifest_path.parent_path();

    TimeSeriesDataset dataset;
    dataset.class_names = manifest.class_names();
    dataset.sampling_period = manifest.sampling_period;

    std::set<std::string> train_classes;
    bool has_train = false;
    for (const auto& entry : manifest.entries) {
        if (entry.split == Split::Train) {
            has_train = true;
            train_classes.insert(entry.class_name);
        }
    }

    std::vector<Matrix> blocks;
    std::size_t total_rows = 0;
    int run = 0;
    for (const auto& entry : manifest.entries) {
        if (split && entry.split != *split) continue;
        if (has_train && entry.split == Split::Test && !train_classes.contains(entry.class_name)) {
            throw DataError(manifest_path.string() + ": unknown class name '" + entry.class_name +
                            "' (no train entry for " + entry.path.generic_string() + ")");
        }
        const fs::path file = entry.path.is_absolute() ? entry.path : base / entry.path;
        std::vector<std::string> header;
        Matrix block = read_csv(file, header);
        if (dataset.variable_names.empty() && blocks.empty()) {
            dataset.variable_names = header;
        } else if (header != dataset.variable_names) {
            throw DataError(where(file, 1) + ": header differs from the first data file");
        }
        const auto label = static_cast<int>(
            std::find(dataset.class_names.begin(), dataset.class_names.end(), entry.class_name) -
            dataset.class_names.begin());
        dataset.labels.insert(dataset.labels.end(), static_cast<std::size_t>(block.rows()), label);
        dataset.run_ids.insert(dataset.run_ids.end(), static_cast<std::size_t>(block.rows()), run++);
        total_rows += static_cast<std::size_t>(block.rows());
        blocks.push_back(std::move(block));
    }
    if (blocks.empty()) {
        throw DataError(manifest_path.string() + ": no files for split " +
                        (split ? to_string(*split) : "any"));
    }

    dataset.samples.resize(static_cast<Eigen::Index>(total_rows),
                           static_cast<Eigen::Index>(dataset.variable_names.size()));
    Eigen::Index offset = 0;
    for (const auto& block : blocks) {
        dataset.samples.middleRows(offset, block.rows()) = block;
        offset += block.rows();
    }
    dataset.validate();
    return dataset;
}

NormalizationStats fit_standardizer(const TimeSeriesDataset& dataset,
                                    std::span<const std::size_t> train_rows) {
    if (train_rows.empty()) throw DataError("fit_standardizer: empty training row set");
    const auto v = static_cast<Eigen::Index>(dataset.variables());
    NormalizationStats stats;
    stats.mean = Vector::Zero(v);
    stats.std = Vector::Zero(v);
    stats.constant.assign(static_cast<std::size_t>(v), false);

    const double n = static_cast<double>(train_rows.size());
    for (auto row : train_rows) {
        if (row >= dataset.rows()) throw DataError("fit_standardizer: row index out of range");
        stats.mean += dataset.samples.row(static_cast<Eigen::Index>(row)).transpose();
    }
    stats.mean /= n;
    for (auto row : train_rows) {
        Vector d = dataset.samples.row(static_cast<Eigen::Index>(row)).transpose() - stats.mean;
        stats.std += d.cwiseProduct(d);
    }
    // Population std (divisor n).
    stats.std = (stats.std / n).cwiseSqrt();
    for (Eigen::Index j = 0; j < v; ++j) {
        if (stats.std(j) < 1e-12) {
            stats.std(j) = 1.0;
            stats.constant[static_cast<std::size_t>(j)] = true;
        }
    }
    return stats;
}

NormalizationStats fit_standardizer(const TimeSeriesDataset& dataset) {
    std::vector<std::size_t> rows(dataset.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return fit_standardizer(dataset, rows);
}

TimeSeriesDataset apply_standardizer(const TimeSeriesDataset& dataset, const NormalizationStats& stats) {
    if (stats.variables() != dataset.variables()) {
        throw DataError("apply_standardizer: stats cover " + std::to_string(stats.variables()) +
                        " variables, dataset has " + std::to_string(dataset.variables()));
    }
    TimeSeriesDataset out = dataset;
    out.samples = ((dataset.samples.rowwise() - stats.mean.transpose()).array().rowwise() /
                   stats.std.transpose().array())
                      .matrix();
    return out;
}

TimeSeriesDataset invert_standardizer(const TimeSeriesDataset& dataset, const NormalizationStats& stats) {
    if (stats.variables() != dataset.variables()) {
        throw DataError("invert_standardizer: dimension mismatch");
    }
    TimeSeriesDataset out = dataset;
    out.samples = ((dataset.samples.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
                   stats.mean.transpose());
    return out;
}

std::vector<WindowSegment> segment_windows(const TimeSeriesDataset& dataset, int window_length,
                                           int stride) {
    if (window_length < 2) throw DataError("window length must be at least 2");
    if (stride < 1) throw DataError("stride must be at least 1");
    const auto n = dataset.rows();
    const auto len = static_cast<std::size_t>(window_length);
    std::vector<WindowSegment> windows;
    if (len > n) return windows;

    // Length of the constant-label (and constant-run) stretch ending at each row.
    std::vector<std::size_t> run_length(n, 1);
    for (std::size_t i = 1; i < n; ++i) {
        const bool same_run = dataset.run_ids.empty() || dataset.run_ids[i] == dataset.run_ids[i - 1];
        if (same_run && dataset.labels[i] == dataset.labels[i - 1]) run_length[i] = run_length[i - 1] + 1;
    }
    for (std::size_t start = 0; start + len <= n; start += static_cast<std::size_t>(stride)) {
        if (run_length[start + len - 1] < len) continue;
        WindowSegment window;
        window.samples = dataset.samples.middleRows(static_cast<Eigen::Index>(start),
                                                    static_cast<Eigen::Index>(len));
        window.label = dataset.labels[start];
        window.start_index = start;
        windows.push_back(std::move(window));
    }
    return windows;
}

}  // namespace stagcn
