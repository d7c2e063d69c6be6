#include "uniest/errors.hpp"
#include "uniest/harness.hpp"

#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

using namespace uniest;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("uniest_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string field_of(const std::string& yaml, ExperimentKind kind) {
    try {
        parse_config(yaml, kind);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

double real(const Cell& c) { return std::get<double>(c); }

std::size_t column(const Table& t, const std::string& name) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        if (t.columns[i].name == name) return i;
    FAIL("missing column " << name);
    return 0;
}

} // namespace

TEST_CASE("cells use nine significant digits") {
    CHECK(format_cell(Cell{1.0 / 3.0}) == "0.333333333");
    CHECK(format_cell(Cell{std::int64_t{-42}}) == "-42");
    CHECK(format_cell(Cell{std::string("fista")}) == "fista");
    CHECK(format_cell(Cell{}) == "");
    CHECK(format_cell(Cell{std::numeric_limits<double>::infinity()}) == "inf");
}

TEST_CASE("csv round-trip") {
    Table t;
    t.columns = {{"n", ColumnType::Integer}, {"x", ColumnType::Real}, {"name", ColumnType::Text}};
    t.add_row({std::int64_t{3}, 0.125, std::string("mcmc")});
    t.add_row({std::int64_t{-1}, 1e-12, std::string("fista")});
    t.add_row({std::int64_t{0}, Cell{}, std::string("ba")});
    const auto text = to_csv(t);
    CHECK(text.rfind("n,x,name\n", 0) == 0);
    CHECK(parse_csv(text, t.columns) == t);
    CHECK(to_csv(parse_csv(text, t.columns)) == text);
    CHECK_THROWS_AS(t.add_row({std::int64_t{1}}), std::invalid_argument);
    CHECK_THROWS(parse_csv("a,b,c\n", t.columns));
}

TEST_CASE("emit_csv writes the table and its sidecar") {
    const auto dir = scratch_dir("emit");
    Table t;
    t.columns = {{"v", ColumnType::Real}};
    t.add_row({2.5});
    emit_csv(t, dir / "out.csv", nlohmann::json{{"seed", 7}});
    CHECK(slurp(dir / "out.csv") == "v\n2.5\n");
    const auto meta = nlohmann::json::parse(slurp(dir / "out.csv.meta.json"));
    CHECK(meta["seed"] == 7);

    Table empty;
    empty.columns = t.columns;
    CHECK_THROWS_AS(emit_csv(empty, dir / "empty.csv", {}), std::invalid_argument);
    CHECK_FALSE(fs::exists(dir / "empty.csv"));
    CHECK_FALSE(fs::exists(dir / "empty.csv.meta.json"));

    CHECK_THROWS_AS(emit_csv(t, dir / "out.csv" / "nested.csv", {}), IoError);
    fs::remove_all(dir);
}

TEST_CASE("config defaults are valid and explicit") {
    for (auto kind : {ExperimentKind::CsRecovery, ExperimentKind::LossyCompression, ExperimentKind::DenoiseScalar}) {
        const auto cfg = default_config(kind);
        CHECK_NOTHROW(cfg.validate());
        CHECK(parse_config("", kind).seed == cfg.seed);
        CHECK(to_json(parse_config("", kind)) == to_json(cfg));
    }
    CHECK(default_config(ExperimentKind::CsRecovery).source.length == 256);
    CHECK(default_config(ExperimentKind::LossyCompression).source.length == 2000);
}

TEST_CASE("config overlays") {
    const auto cfg = parse_config(R"(
seed: 99
runs: 2
source: {length: 64, p: 0.1}
channel: {measurement_ratios: [0.5, 1.0], snr_db: [inf]}
estimator: {order: auto, restarts: 1, schedule: {rho: 1.2, sweeps: 50}}
)",
                                  ExperimentKind::CsRecovery);
    CHECK(cfg.seed == 99);
    CHECK(cfg.runs == 2);
    CHECK(cfg.source.length == 64);
    CHECK(cfg.measurement_ratios == std::vector<double>{0.5, 1.0});
    CHECK(std::isinf(cfg.snr_db[0]));
    CHECK_FALSE(cfg.sampler.order.has_value());
    CHECK(cfg.sampler.restarts == 1);
    CHECK(cfg.sampler.schedule.rho == 1.2);
    CHECK(cfg.sampler.schedule.total_sweeps == 50);
}

TEST_CASE("config errors name the offending field") {
    const auto cs = ExperimentKind::CsRecovery;
    CHECK(field_of("sed: 3", cs) == "sed");
    CHECK(field_of("estimator: {schedule: {rh0: 2}}", cs) == "estimator.schedule.rh0");
    CHECK(field_of("seed: -3", cs) == "seed");
    CHECK(field_of("source: {p: lots}", cs) == "source.p");
    CHECK(field_of("channel: {measurement_ratios: []}", cs) == "channel.measurement_ratios");
    CHECK(field_of("channel: {snr_db: []}", cs) == "channel.snr_db");
    CHECK(field_of("channel: {lambdas: []}", ExperimentKind::LossyCompression) == "channel.lambdas");
    CHECK(field_of("estimator: {grid: wobbly}", cs) == "estimator.grid");
    CHECK(field_of("experiment: lossy", cs) == "experiment");
    CHECK(field_of("runs: 0", cs) == "runs");
    CHECK(field_of("[1, 2", cs) == "<root>");
    CHECK_THROWS_AS(load_config("/nonexistent/uniest.yaml", cs), ConfigError);
}

TEST_CASE("derived seeds") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
}

TEST_CASE("parallel_for runs every index once and rethrows") {
    for (std::size_t threads : {1, 2, 4, 16}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 6) throw NumericError("boom");
                                 }),
                    NumericError);
}

TEST_CASE("noiseless invertible cs reaches the quantization floor") {
    const auto cfg = parse_config(R"(
runs: 2
source: {length: 64}
channel: {measurement_ratios: [1.0], snr_db: [inf]}
estimator: {schedule: {sweeps: 400}}
)",
                                  ExperimentKind::CsRecovery);
    const auto out = run_cs_experiment(cfg);
    const auto& t = out.table;
    CHECK(t.columns == cs_columns());
    REQUIRE(t.rows.size() == 4);
    const double step = 1.0 / std::ceil(std::log(64.0));
    const auto mse = column(t, "mse");
    for (const auto& row : t.rows) CHECK(real(row[mse]) <= step * step / 12.0);
}

TEST_CASE("denoise: posterior mean beats MAP on a markov source at moderate noise") {
    const auto cfg = parse_config("runs: 10\nchannel: {snr_db: [5]}\n", ExperimentKind::DenoiseScalar);
    const auto t = run_denoise_experiment(cfg).table;
    REQUIRE(t.rows.size() == 10);
    const auto map = column(t, "mse_map"), mmse = column(t, "mse_mmse"), ratio = column(t, "ratio");
    int wins = 0;
    for (const auto& row : t.rows) {
        wins += real(row[mmse]) <= real(row[map]);
        CHECK(real(row[ratio]) == doctest::Approx(real(row[map]) / real(row[mmse])));
    }
    CHECK(wins >= 8);
}

TEST_CASE("denoise: nearly noiseless and constant sources") {
    SUBCASE("high snr") {
        const auto cfg = parse_config("runs: 2\nchannel: {snr_db: [40]}\n", ExperimentKind::DenoiseScalar);
        const auto t = run_denoise_experiment(cfg).table;
        for (const auto& row : t.rows) {
            CHECK(real(row[column(t, "mse_map")]) <= 1e-3);
            CHECK(real(row[column(t, "mse_mmse")]) <= 1e-3);
        }
    }
    SUBCASE("constant source") {
        // noise well below half a grid step
        const auto cfg = parse_config(
            "runs: 3\nsource: {stay: [1, 1], levels: [0.7, 0.7]}\nchannel: {snr_db: [20]}\nestimator: {grid: fixed}\n",
            ExperimentKind::DenoiseScalar);
        const auto t = run_denoise_experiment(cfg).table;
        const double half = 0.5 / std::ceil(std::log(256.0));
        for (const auto& row : t.rows) {
            CHECK(real(row[column(t, "sigma2")]) == doctest::Approx(0.49 / 100.0));
            CHECK(real(row[column(t, "mse_map")]) <= half * half);
            CHECK(real(row[column(t, "mse_mmse")]) <= half * half);
        }
    }
}

TEST_CASE("lossy: vanishing lambda describes the mean") {
    const auto cfg = parse_config(R"(
source: {length: 500}
channel: {lambdas: [0.01]}
baselines: {ecsq_steps: [1.0], ba_slopes: [1.0], ba_half_width: 12, ba_bins: 241}
)",
                                  ExperimentKind::LossyCompression);
    const auto t = run_lossy_experiment(cfg).table;
    const auto curve = column(t, "curve"), rate = column(t, "rate"), dist = column(t, "distortion");
    std::map<std::string, int> seen;
    for (const auto& row : t.rows) {
        const auto& name = std::get<std::string>(row[curve]);
        seen[name]++;
        if (name == "mcmc") {
            CHECK(real(row[rate]) <= 0.05);
            // unit Laplace variance is 2
            CHECK(real(row[dist]) >= 1.5);
            CHECK(real(row[dist]) <= 2.5);
        }
    }
    CHECK(seen["mcmc"] == 1);
    CHECK(seen["ecsq"] == 1);
    CHECK(seen["ba"] == 1);
}

TEST_CASE("identical config and seed give identical bytes regardless of threads") {
    const std::string yaml = R"(
runs: 2
source: {length: 48}
channel: {measurement_ratios: [0.5], snr_db: [10]}
estimator: {schedule: {sweeps: 60}, traces: true}
fista: {lambda_count: 4}
)";
    auto cfg = parse_config(yaml, ExperimentKind::CsRecovery);
    const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
    cfg.output_dir = a;
    const auto pa = write_outputs(cfg, run_experiment(cfg));
    cfg.output_dir = b;
    cfg.threads = 3;
    const auto pb = write_outputs(cfg, run_experiment(cfg));
    CHECK(slurp(pa) == slurp(pb));
    CHECK(slurp(pa).size() > 0);
    std::size_t traces = 0;
    for (const auto& e : fs::directory_iterator(a / "traces")) {
        ++traces;
        CHECK(slurp(e.path()) == slurp(b / "traces" / e.path().filename()));
        CHECK(slurp(e.path()).rfind("sweep,s,coding_bits,likelihood_bits,total_bits\n", 0) == 0);
    }
    CHECK(traces == 2);
    const auto meta = nlohmann::json::parse(slurp(fs::path(pa.string() + ".meta.json")));
    CHECK(meta["version"] == library_version());
    CHECK(meta.contains("config"));
    CHECK(meta.contains("seeds"));
    fs::remove_all(a);
    fs::remove_all(b);
}
