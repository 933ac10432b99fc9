#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace stagcn {

/// Hyper-parameters shared by every pipeline stage. Each artifact written by
/// the pipeline carries a copy of this record so stages cannot silently be
/// chained with mismatched settings.
struct RunConfig {
    int window_length = 20;           // L
    std::optional<int> stride;        // test/eval stride, defaults to L
    std::optional<int> train_stride;  // defaults to stride
    double threshold = 0.6;           // T_common
    bool weighted_edges = false;
    int hidden = 64;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int epochs = 200;
    int batch_size = 8;
    std::uint64_t seed = 0;

    int effective_stride() const { return stride.value_or(window_length); }
    int effective_train_stride() const { return train_stride.value_or(effective_stride()); }

    /// Throws DataError on out-of-range values.
    void validate() const;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
};

}  // namespace stagcn
