#pragma once

#include "stagcn/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stagcn {

enum class Split { Train, Test };

const char* to_string(Split split);
Split parse_split(const std::string& text);

/// Labeled multivariate samples: rows are time instants, columns are
/// monitoring variables.
struct TimeSeriesDataset {
    std::vector<std::string> variable_names;
    Matrix samples;                  // N x V
    std::vector<int> labels;         // length N, each < class_names.size()
    std::vector<std::string> class_names;
    double sampling_period = 1.0;    // minutes per sample
    /// Source run (file) index per row. Windows never span two runs.
    std::vector<int> run_ids;

    std::size_t rows() const { return static_cast<std::size_t>(samples.rows()); }
    std::size_t variables() const { return static_cast<std::size_t>(samples.cols()); }
    std::size_t classes() const { return class_names.size(); }

    /// Throws DataError if any invariant is broken.
    void validate() const;
};

struct NormalizationStats {
    Vector mean;
    Vector std;
    std::vector<bool> constant;

    std::size_t variables() const { return static_cast<std::size_t>(mean.size()); }
};

struct WindowSegment {
    Matrix samples;  // L x V
    int label = 0;
    std::size_t start_index = 0;
};

struct ManifestEntry {
    std::filesystem::path path;  // relative to the manifest directory unless absolute
    std::string class_name;
    Split split = Split::Train;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    double sampling_period = 1.0;

    /// Class names in order of first appearance; index is the class id.
    std::vector<std::string> class_names() const;
};

Manifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const Manifest& manifest);

/// Loads every CSV listed in the manifest, or only those of `split`.
/// Class ids come from the whole manifest so train and test agree.
TimeSeriesDataset load_dataset(const std::filesystem::path& manifest_path,
                               std::optional<Split> split = std::nullopt);

/// Reads one CSV run. Errors name the file and the 1-based line.
Matrix read_csv(const std::filesystem::path& path, std::vector<std::string>& header);

/// Writes shortest round-trip decimal representations (17 significant digits max).
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Matrix& samples);

NormalizationStats fit_standardizer(const TimeSeriesDataset& dataset,
                                    std::span<const std::size_t> train_rows);
/// Convenience overload using every row.
NormalizationStats fit_standardizer(const TimeSeriesDataset& dataset);

TimeSeriesDataset apply_standardizer(const TimeSeriesDataset& dataset,
                                     const NormalizationStats& stats);
TimeSeriesDataset invert_standardizer(const TimeSeriesDataset& dataset,
                                      const NormalizationStats& stats);

/// Label-pure windows of length L starting at 0, stride, 2*stride, ...
std::vector<WindowSegment> segment_windows(const TimeSeriesDataset& dataset, int window_length,
                                           int stride);

}  // namespace stagcn
