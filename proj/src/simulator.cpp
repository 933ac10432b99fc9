#include "stagcn/simulator.hpp"

#include "stagcn/snapshot.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace stagcn {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBurnIn = 200;
constexpr std::size_t kPreviewSamples = 5000;
constexpr double kPreviewThreshold = 0.6;

// Regime building blocks.
constexpr double kBackgroundPersistence = 0.2;
constexpr double kDriverPersistence = 0.95;
constexpr double kFollowerGain = 1.0;
constexpr double kFollowerNoise = 0.3;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t class_id, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64((class_id << 8) | stream));
}

/// Couples followers to a persistent driver: f_t = gain * d_{t-1} + small noise.
void add_star(Matrix& a, Vector& noise, int driver, int first_follower, int followers) {
    const int v = static_cast<int>(a.rows());
    if (driver >= v) return;
    a(driver, driver) = kDriverPersistence;
    for (int k = 0; k < followers; ++k) {
        const int f = first_follower + k;
        if (f >= v || f == driver) continue;
        a(f, f) = 0.0;
        a(f, driver) = kFollowerGain;
        noise(f) = kFollowerNoise;
    }
}

void remove_coupling(Matrix& a, Vector& noise, int driver, int follower) {
    const int v = static_cast<int>(a.rows());
    if (driver >= v || follower >= v) return;
    a(driver, driver) = kBackgroundPersistence;
    a(follower, follower) = kBackgroundPersistence;
    a(follower, driver) = 0.0;
    noise(follower) = 1.0;
}

std::vector<std::pair<int, int>> edge_set(const Matrix& samples, double threshold) {
    const Matrix r = PearsonAssociation{}.compute(samples);
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < r.cols(); ++j) {
            if (std::abs(r(i, j)) >= threshold) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return edges;
}

}  // namespace

const char* to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::StepBias: return "step_bias";
        case FaultKind::VarianceShift: return "variance_shift";
        case FaultKind::StuckSensor: return "stuck_sensor";
    }
    return "unknown";
}

FaultKind parse_fault_kind(const std::string& text) {
    if (text == "step_bias") return FaultKind::StepBias;
    if (text == "variance_shift") return FaultKind::VarianceShift;
    if (text == "stuck_sensor") return FaultKind::StuckSensor;
    throw DataError("unknown fault kind '" + text + "'");
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw DataError("spectral radius of a non-square matrix");
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void RegimeSpec::validate() const {
    const auto v = coupling.rows();
    if (v < 1 || coupling.cols() != v) throw DataError("regime '" + name + "': coupling must be square and non-empty");
    if (noise_std.size() != v) throw DataError("regime '" + name + "': noise_std length differs from V");
    if (!coupling.allFinite() || !noise_std.allFinite() || (noise_std.array() < 0.0).any()) {
        throw DataError("regime '" + name + "': coupling and noise must be finite, noise non-negative");
    }
    if (class_id < 0) throw DataError("regime '" + name + "': negative class id");
    const double rho = spectral_radius(coupling);
    if (!(rho < 1.0)) {
        throw DataError("regime '" + name + "': coupling spectral radius " + std::to_string(rho) +
                        " is not below 1 (non-stationary)");
    }
    for (const auto& f : faults) {
        if (f.target < 0 || f.target >= v) {
            throw DataError("regime '" + name + "': fault target " + std::to_string(f.target) + " out of range");
        }
        if (f.onset >= duration) throw DataError("regime '" + name + "': fault onset must precede duration");
        if (!std::isfinite(f.magnitude)) throw DataError("regime '" + name + "': non-finite fault magnitude");
        if (f.kind == FaultKind::VarianceShift && f.magnitude < 0.0) {
            throw DataError("regime '" + name + "': variance_shift magnitude must be non-negative");
        }
    }
}

nlohmann::json RegimeSpec::to_json() const {
    nlohmann::json faults_json = nlohmann::json::array();
    for (const auto& f : faults) {
        faults_json.push_back(
            {{"kind", to_string(f.kind)}, {"target", f.target}, {"magnitude", f.magnitude}, {"onset", f.onset}});
    }
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
        rows.emplace_back(coupling.row(i).data(), coupling.row(i).data() + coupling.cols());
    }
    return {{"name", name},
            {"class_id", class_id},
            {"variables", variables()},
            {"coupling", rows},
            {"noise_std", std::vector<double>(noise_std.data(), noise_std.data() + noise_std.size())},
            {"faults", faults_json},
            {"duration", duration},
            {"seed", seed}};
}

TimeSeriesDataset simulate(const RegimeSpec& spec, std::vector<std::string> class_names) {
    spec.validate();
    const auto v = spec.coupling.rows();
    const auto n = static_cast<Eigen::Index>(spec.duration);

    TimeSeriesDataset out;
    for (Eigen::Index j = 0; j < v; ++j) out.variable_names.push_back("v" + std::to_string(j + 1));
    if (class_names.empty()) {
        for (int c = 0; c <= spec.class_id; ++c) class_names.push_back("class_" + std::to_string(c));
        class_names[static_cast<std::size_t>(spec.class_id)] = spec.name;
    }
    if (static_cast<std::size_t>(spec.class_id) >= class_names.size()) {
        throw DataError("simulate: class id has no class name");
    }
    out.class_names = std::move(class_names);
    out.labels.assign(spec.duration, spec.class_id);
    out.run_ids.assign(spec.duration, 0);
    out.samples.resize(n, v);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector state = Vector::Zero(v);
    Vector z(v);
    auto draw = [&] {
        for (Eigen::Index j = 0; j < v; ++j) z(j) = normal(rng);
    };
    for (std::size_t t = 0; t < kBurnIn; ++t) {
        draw();
        state = spec.coupling * state + spec.noise_std.cwiseProduct(z);
    }
    for (Eigen::Index t = 0; t < n; ++t) {
        draw();
        Vector scale = spec.noise_std;
        for (const auto& f : spec.faults) {
            if (f.kind == FaultKind::VarianceShift && static_cast<std::size_t>(t) >= f.onset) scale(f.target) *= f.magnitude;
        }
        state = spec.coupling * state + scale.cwiseProduct(z);
        out.samples.row(t) = state.transpose();
    }
    // Sensor-level faults act on observations only; the process keeps running.
    for (const auto& f : spec.faults) {
        const auto onset = static_cast<Eigen::Index>(f.onset);
        if (f.kind == FaultKind::StepBias) {
            out.samples.col(f.target).tail(n - onset).array() += f.magnitude;
        } else if (f.kind == FaultKind::StuckSensor) {
            out.samples.col(f.target).tail(n - onset).setConstant(out.samples(onset, f.target));
        }
    }
    return out;
}

BenchmarkSuite make_benchmark_suite(int class_count, int variables, std::size_t duration, std::uint64_t seed) {
    if (class_count < 2) throw DataError("benchmark suite needs at least 2 classes, got " + std::to_string(class_count));
    if (variables < 2) throw DataError("benchmark suite needs at least 2 variables");
    if (duration < 1) throw DataError("benchmark suite needs a positive duration");
    const int v = variables;

    Matrix base = Matrix::Zero(v, v);
    base.diagonal().setConstant(kBackgroundPersistence);
    Vector base_noise = Vector::Ones(v);
    add_star(base, base_noise, 0, 1, 1);
    if (v >= 4) add_star(base, base_noise, 2, 3, 1);

    BenchmarkSuite suite;
    for (int k = 0; k < class_count; ++k) {
        RegimeSpec spec;
        spec.class_id = k;
        spec.duration = duration;
        spec.seed = derive_seed(seed, static_cast<std::uint64_t>(k), 0);
        spec.coupling = base;
        spec.noise_std = base_noise;
        if (k == 0) {
            spec.name = "normal";
        } else {
            spec.name = "fault_" + std::to_string(k);
            // Structural motif on the block after the baseline pairs.
            const int block = std::min(4, v);
            const int cycle = (k - 1) / 6;
            switch ((k - 1) % 6) {
                case 0:  // baseline couplings disappear
                    remove_coupling(spec.coupling, spec.noise_std, 0, 1);
                    remove_coupling(spec.coupling, spec.noise_std, 2, 3);
                    break;
                case 1: add_star(spec.coupling, spec.noise_std, block, block + 1, 3 + cycle); break;
                case 2: add_star(spec.coupling, spec.noise_std, block, block + 1, 1); break;
                case 3: add_star(spec.coupling, spec.noise_std, block, block + 1, 5 + cycle); break;
                case 4:
                    add_star(spec.coupling, spec.noise_std, block, block + 1, 1);
                    add_star(spec.coupling, spec.noise_std, block + 2, block + 3, 1 + cycle);
                    break;
                case 5:
                    remove_coupling(spec.coupling, spec.noise_std, 0, 1);
                    add_star(spec.coupling, spec.noise_std, block, block + 1, 2 + cycle);
                    break;
            }
            FaultSpec fault;
            fault.target = v - 1 - ((k - 1) / 3) % std::max(1, v - 4);
            fault.target = std::clamp(fault.target, 0, v - 1);
            switch ((k - 1) % 3) {
                case 0: fault.kind = FaultKind::StepBias; fault.magnitude = 3.0; break;
                case 1: fault.kind = FaultKind::VarianceShift; fault.magnitude = 3.0; break;
                case 2: fault.kind = FaultKind::StuckSensor; fault.magnitude = 0.0; break;
            }
            spec.faults.push_back(fault);
        }
        spec.validate();
        suite.specs.push_back(std::move(spec));
    }

    // Empirical separability check on a long seeded preview of each regime.
    for (const auto& spec : suite.specs) {
        RegimeSpec preview = spec;
        preview.duration = kPreviewSamples;
        preview.seed = derive_seed(seed, static_cast<std::uint64_t>(spec.class_id), 2);
        suite.preview_edges.push_back(edge_set(simulate(preview).samples, kPreviewThreshold));
    }
    std::ostringstream report;
    suite.separable = true;
    for (std::size_t i = 0; i < suite.specs.size(); ++i) {
        report << suite.specs[i].name << ": " << suite.preview_edges[i].size() << " edges at T=0.6\n";
        for (std::size_t j = 0; j < i; ++j) {
            if (suite.preview_edges[i] == suite.preview_edges[j]) {
                suite.separable = false;
                report << "  identical edge set to " << suite.specs[j].name << '\n';
            }
        }
    }
    report << (suite.separable ? "all regimes have pairwise-distinct edge sets\n"
                               : "WARNING: some regimes share an edge set\n");
    suite.separability_report = report.str();
    return suite;
}

void write_benchmark_files(const fs::path& out_dir, const BenchmarkSuite& suite, std::size_t train_samples,
                           std::size_t test_samples, std::uint64_t seed) {
    if (train_samples < 1 || test_samples < 1) throw DataError("sample counts must be positive");
    fs::create_directories(out_dir);
    std::vector<std::string> class_names;
    for (const auto& s : suite.specs) class_names.push_back(s.name);

    Manifest manifest;
    nlohmann::json record;
    record["format"] = "stagcn-generation";
    record["artifact_version"] = kArtifactVersion;
    record["seed"] = seed;
    record["separable"] = suite.separable;
    record["separability_report"] = suite.separability_report;
    record["runs"] = nlohmann::json::array();

    for (const auto& spec : suite.specs) {
        for (Split split : {Split::Train, Split::Test}) {
            RegimeSpec run = spec;
            run.duration = split == Split::Train ? train_samples : test_samples;
            run.seed = derive_seed(seed, static_cast<std::uint64_t>(spec.class_id), split == Split::Train ? 0 : 1);
            for (auto& f : run.faults) f.onset = std::min(f.onset, run.duration - 1);
            const auto data = simulate(run, class_names);
            const std::string file = std::string(to_string(split)) + "_" + spec.name + ".csv";
            write_csv(out_dir / file, data.variable_names, data.samples);
            manifest.entries.push_back({file, spec.name, split});
            auto echo = run.to_json();
            echo["split"] = to_string(split);
            echo["file"] = file;
            record["runs"].push_back(std::move(echo));
        }
    }
    write_manifest(out_dir / "manifest.json", manifest);
    std::ofstream out(out_dir / "generation.json", std::ios::binary);
    if (!out) throw DataError("cannot write generation record in " + out_dir.string());
    out << record.dump(2) << '\n';
}

}  // namespace stagcn
