#pragma once

#include "uniest/quantizer.hpp"
#include "uniest/sampler.hpp"
#include "uniest/sources.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace uniest {

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

enum class ColumnType { Integer, Real, Text };

struct Column {
    std::string name;
    ColumnType type;
    friend bool operator==(const Column&, const Column&) = default;
};

/// Empty cells are std::monostate.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
    friend bool operator==(const Table&, const Table&) = default;
};

/// Reals use 9 significant digits.
std::string format_cell(const Cell& cell);
std::string to_csv(const Table& table);
/// Parses CSV text against a known schema; the header must match it.
Table parse_csv(const std::string& text, const std::vector<Column>& schema);

/// Writes `path` and `path`.meta.json. Throws std::invalid_argument for an
/// empty table (nothing is written) and IoError when the file cannot be
/// created.
void emit_csv(const Table& table, const std::filesystem::path& path, const nlohmann::json& metadata);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ExperimentKind { CsRecovery, LossyCompression, DenoiseScalar };

std::string to_string(ExperimentKind kind);

struct GridConfig {
    GridKind kind = GridKind::Fixed;
    std::size_t levels = 32;  // initial size of an adaptive grid
    double log_base = 2.718281828459045;
};

struct FistaSweep {
    std::size_t lambda_count = 16;
    double lambda_min_ratio = 1e-3;  // smallest lambda relative to ||J^T y||_inf
    std::size_t max_iterations = 5000;
    double tolerance = 1e-8;
};

struct LossyBaselines {
    std::vector<double> ecsq_steps;
    std::vector<double> ba_slopes;
    double ba_half_width = 14.0;
    std::size_t ba_bins = 1401;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::CsRecovery;
    SourceSpec source;
    std::vector<double> measurement_ratios;  // cs: M / N
    std::vector<double> snr_db;              // cs, denoise; +inf allowed
    std::vector<double> lambdas;             // lossy: rate-distortion slopes
    double noiseless_variance = 0.1;         // model variance at infinite SNR, relative to signal power
    GridConfig grid;
    SamplerConfig sampler;
    FistaSweep fista;
    LossyBaselines lossy;
    std::uint64_t seed = 1;  // run r uses seed + r
    std::size_t runs = 1;
    std::size_t threads = 1;
    std::filesystem::path output_dir = "results";
    bool write_traces = false;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Desk-scale defaults for each experiment.
ExperimentConfig default_config(ExperimentKind kind);

/// Overlays a YAML document on default_config(kind). Unknown keys, wrong
/// types and inconsistent values raise ConfigError.
ExperimentConfig parse_config(const std::string& yaml, ExperimentKind kind);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind);

nlohmann::json to_json(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct NamedTrace {
    std::string name;
    std::vector<TracePoint> trace;
};

struct ExperimentOutput {
    Table table;
    std::vector<NamedTrace> traces;  // filled when cfg.write_traces
};

/// Mixes a run seed with a tag sequence into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

/// Runs f(0..count-1) on `threads` workers; each index runs exactly once.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& f);

std::vector<Column> cs_columns();
std::vector<Column> lossy_columns();
std::vector<Column> denoise_columns();
std::vector<Column> columns_for(ExperimentKind kind);

ExperimentOutput run_cs_experiment(const ExperimentConfig& cfg);
ExperimentOutput run_lossy_experiment(const ExperimentConfig& cfg);
ExperimentOutput run_denoise_experiment(const ExperimentConfig& cfg);
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Sidecar metadata: config, seeds, library version.
nlohmann::json experiment_metadata(const ExperimentConfig& cfg);

/// Writes <out>/<kind>.csv, its sidecar and any traces; returns the CSV path.
std::filesystem::path write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& out);

std::string library_version();

} // namespace uniest
