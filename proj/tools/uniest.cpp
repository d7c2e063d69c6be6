#include "uniest/errors.hpp"
#include "uniest/harness.hpp"
#include "uniest/oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>

namespace {

using namespace uniest;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "YAML configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "master seed (run r uses seed + r)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(ExperimentKind kind, const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? default_config(kind) : load_config(c.config, kind);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.threads) cfg.threads = *c.threads;
    cfg.validate();
    return cfg;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void summarize_denoise(const ExperimentOutput& out) {
    const auto& cols = out.table.columns;
    const auto idx = [&](const char* name) {
        return static_cast<std::size_t>(std::find_if(cols.begin(), cols.end(), [&](const Column& c) { return c.name == name; }) -
                                        cols.begin());
    };
    const auto snr_i = idx("snr_db"), ratio_i = idx("ratio");
    std::vector<double> snrs;
    for (const auto& row : out.table.rows) {
        const double s = std::get<double>(row[snr_i]);
        if (std::find(snrs.begin(), snrs.end(), s) == snrs.end()) snrs.push_back(s);
    }
    for (double s : snrs) {
        std::vector<double> r;
        for (const auto& row : out.table.rows) {
            if (std::get<double>(row[snr_i]) == s && std::holds_alternative<double>(row[ratio_i])) r.push_back(std::get<double>(row[ratio_i]));
        }
        std::printf("snr %g dB: median MAP/MMSE mse ratio %.4f over %zu runs\n", s, median(r), r.size());
    }
}

int run_oracle(std::size_t trials, std::uint64_t seed, const std::string& out_dir) {
    Table table{{{"check", ColumnType::Text},
                 {"channel", ColumnType::Text},
                 {"seed", ColumnType::Integer},
                 {"value", ColumnType::Real},
                 {"pass", ColumnType::Integer}},
                {}};
    SamplerConfig map_cfg;
    SamplerConfig mmse_cfg;
    mmse_cfg.burn_in = 200;
    mmse_cfg.samples = 2000;

    std::size_t map_ok = 0, mmse_ok = 0;
    double worst_gap = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t s = seed + t;
        const bool linear = t % 2 == 1;
        const std::string channel = linear ? "linear" : "identity";
        map_cfg.seed = derive_seed(s, {10});
        const auto m = oracle::run_map_trial(oracle::map_instance(s, linear), map_cfg);
        map_ok += m.match;
        if (!m.match) worst_gap = std::max(worst_gap, m.energy_gap);
        table.add_row({std::string("map_gap_bits"), channel, static_cast<std::int64_t>(s), m.energy_gap,
                       static_cast<std::int64_t>(m.match)});

        mmse_cfg.seed = derive_seed(s, {11});
        const auto p = oracle::run_mmse_trial(oracle::posterior_instance(s, linear), mmse_cfg);
        mmse_ok += p.within;
        table.add_row({std::string("mmse_max_z"), channel, static_cast<std::int64_t>(s), p.max_z,
                       static_cast<std::int64_t>(p.within)});
    }
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "oracle.csv";
    emit_csv(table, path,
             {{"library", "uniest"}, {"version", library_version()}, {"experiment", "oracle"}, {"seed", seed}, {"trials", trials}});
    std::printf("map: %zu/%zu exhaustive matches, worst gap %.4g bits\n", map_ok, trials, worst_gap);
    std::printf("mmse: %zu/%zu within 3 standard errors\n", mmse_ok, trials);
    std::printf("wrote %s\n", path.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Universal MCMC estimation: compressed sensing, lossy compression and denoising experiments"};
    app.set_version_flag("--version", uniest::library_version());
    app.require_subcommand(1);

    Common cs, lossy, denoise;
    auto* cs_cmd = app.add_subcommand("cs", "compressed sensing recovery: MCMC versus l1 (FISTA)");
    auto* lossy_cmd = app.add_subcommand("lossy", "lossy compression rate-distortion points with ECSQ and BA curves");
    auto* denoise_cmd = app.add_subcommand("denoise", "scalar-channel denoising: MAP versus MMSE");
    add_common(cs_cmd, cs);
    add_common(lossy_cmd, lossy);
    add_common(denoise_cmd, denoise);

    auto* oracle_cmd = app.add_subcommand("oracle", "brute-force MAP and posterior-mean checks on tiny instances");
    std::size_t trials = 100;
    std::uint64_t oracle_seed = 1;
    std::string oracle_out = "results";
    std::size_t oracle_threads = 1;
    oracle_cmd->add_option("--trials", trials, "instances per check")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--seed", oracle_seed, "first instance seed");
    oracle_cmd->add_option("--out", oracle_out, "output directory");
    oracle_cmd->add_option("--threads", oracle_threads, "accepted for symmetry; oracle runs serially");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (oracle_cmd->parsed()) return run_oracle(trials, oracle_seed, oracle_out);
        ExperimentKind kind;
        const Common* c;
        if (cs_cmd->parsed()) {
            kind = ExperimentKind::CsRecovery;
            c = &cs;
        } else if (lossy_cmd->parsed()) {
            kind = ExperimentKind::LossyCompression;
            c = &lossy;
        } else {
            kind = ExperimentKind::DenoiseScalar;
            c = &denoise;
        }
        const auto cfg = resolve(kind, *c);
        const auto out = run_experiment(cfg);
        const auto path = write_outputs(cfg, out);
        std::printf("wrote %zu rows to %s\n", out.table.rows.size(), path.string().c_str());
        if (kind == ExperimentKind::DenoiseScalar) summarize_denoise(out);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
