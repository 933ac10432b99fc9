#pragma once

#include "stagcn/timeseries.hpp"
#include "stagcn/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stagcn {

enum class FaultKind { StepBias, VarianceShift, StuckSensor };

const char* to_string(FaultKind kind);
FaultKind parse_fault_kind(const std::string& text);

/// step_bias adds `magnitude` to the observed target from onset on;
/// variance_shift scales the target's process noise by `magnitude`;
/// stuck_sensor holds the observed target at its onset value.
struct FaultSpec {
    FaultKind kind = FaultKind::StepBias;
    int target = 0;
    double magnitude = 0.0;
    std::size_t onset = 0;
};

/// One operating regime of a VAR(1) process x_t = coupling x_{t-1} + eps_t,
/// eps_t ~ N(0, diag(noise_std^2)).
struct RegimeSpec {
    std::string name;
    int class_id = 0;
    Matrix coupling;   // V x V, spectral radius < 1
    Vector noise_std;  // V
    std::vector<FaultSpec> faults;
    std::size_t duration = 0;
    std::uint64_t seed = 0;

    int variables() const { return static_cast<int>(coupling.rows()); }

    /// Throws DataError for unstable coupling, bad shapes or invalid faults.
    void validate() const;
    nlohmann::json to_json() const;
};

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Matrix& m);

/// Samples the regime. `class_names` defaults to placeholders with the
/// regime's own name at its class id.
TimeSeriesDataset simulate(const RegimeSpec& spec, std::vector<std::string> class_names = {});

struct BenchmarkSuite {
    std::vector<RegimeSpec> specs;
    /// Edge set of each regime at T_common = 0.6 on a long preview run.
    std::vector<std::vector<std::pair<int, int>>> preview_edges;
    /// True when every pair of regimes has a different preview edge set.
    bool separable = false;
    std::string separability_report;
};

/// Class 0 is a baseline coupling; each fault class changes the coupling
/// structure and injects one fault, cycling through the three fault kinds.
BenchmarkSuite make_benchmark_suite(int class_count, int variables, std::size_t duration, std::uint64_t seed);

/// Writes one CSV per regime and split plus `manifest.json` and
/// `generation.json` into `out_dir`. Train and test runs use derived seeds.
void write_benchmark_files(const std::filesystem::path& out_dir, const BenchmarkSuite& suite,
                           std::size_t train_samples, std::size_t test_samples, std::uint64_t seed);

}  // namespace stagcn
