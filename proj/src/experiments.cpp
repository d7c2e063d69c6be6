#include "uniest/baselines.hpp"
#include "uniest/channel.hpp"
#include "uniest/errors.hpp"
#include "uniest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace uniest {

std::string library_version() { return "0.1.0"; }

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    // splitmix64 finalizer over the running state
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    for (auto t : tags) h = mix(h ^ mix(t));
    return h;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& f) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<Column> cs_columns() {
    return {{"n", ColumnType::Integer},        {"m", ColumnType::Integer},     {"delta", ColumnType::Real},
            {"snr_db", ColumnType::Real},      {"seed", ColumnType::Integer},  {"algorithm", ColumnType::Text},
            {"mse", ColumnType::Real},         {"nmse", ColumnType::Real},     {"sigma2", ColumnType::Real},
            {"lambda", ColumnType::Real},      {"energy_bits", ColumnType::Real}};
}

std::vector<Column> lossy_columns() {
    return {{"curve", ColumnType::Text},  {"param", ColumnType::Real},      {"seed", ColumnType::Integer},
            {"rate", ColumnType::Real},   {"distortion", ColumnType::Real}, {"levels", ColumnType::Integer}};
}

std::vector<Column> denoise_columns() {
    return {{"n", ColumnType::Integer},      {"snr_db", ColumnType::Real},   {"sigma2", ColumnType::Real},
            {"seed", ColumnType::Integer},   {"mse_map", ColumnType::Real},  {"mse_mmse", ColumnType::Real},
            {"ratio", ColumnType::Real}};
}

std::vector<Column> columns_for(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::CsRecovery: return cs_columns();
    case ExperimentKind::LossyCompression: return lossy_columns();
    case ExperimentKind::DenoiseScalar: return denoise_columns();
    }
    return {};
}

namespace {

double mse(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

double energy_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

std::uint64_t bits_of(double v) { return std::bit_cast<std::uint64_t>(v); }

// Grid for one estimation run: the fixed grid for N, or an adaptive grid
// spanning the initial estimate.
QuantGrid grid_for(const ExperimentConfig& cfg, const ChannelModel& ch) {
    if (cfg.grid.kind == GridKind::Fixed) return build_fixed_grid(ch.input_size(), cfg.grid.log_base);
    const auto x0 = initial_estimate(ch);
    const auto [lo, hi] = std::minmax_element(x0.begin(), x0.end());
    return build_uniform_grid(*lo, *hi, cfg.grid.levels);
}

double model_variance(double realized, std::span<const double> w, double relative_floor) {
    double v = realized;
    if (!(v > 0.0)) {
        const double power = energy_of(w) / static_cast<double>(w.size());
        v = relative_floor * (power > 0.0 ? power : 1.0);
    }
    if (!std::isfinite(v) || !(v > 0.0)) throw NumericError("noise variance is not a positive finite number");
    return v;
}

std::string snr_label(double snr) {
    if (std::isinf(snr)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snr);
    return buf;
}

template <class Task, class Run>
ExperimentOutput run_tasks(const ExperimentConfig& cfg, const std::vector<Task>& tasks, Run&& run) {
    std::vector<ExperimentOutput> parts(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t k) { parts[k] = run(tasks[k]); });
    ExperimentOutput out{{columns_for(cfg.kind), {}}, {}};
    for (auto& p : parts) {
        for (auto& row : p.table.rows) out.table.add_row(std::move(row));
        for (auto& t : p.traces) out.traces.push_back(std::move(t));
    }
    return out;
}

} // namespace

ExperimentOutput run_cs_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::CsRecovery) throw ConfigError("experiment", "expected a cs configuration");
    cfg.validate();
    struct Task {
        double ratio;
        double snr;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double ratio : cfg.measurement_ratios) {
        for (double snr : cfg.snr_db) {
            for (std::size_t r = 0; r < cfg.runs; ++r) tasks.push_back({ratio, snr, cfg.seed + r});
        }
    }

    return run_tasks(cfg, tasks, [&](const Task& t) {
        const std::size_t n = cfg.source.length;
        const auto m = static_cast<std::size_t>(std::lround(t.ratio * static_cast<double>(n)));
        SourceSpec spec = cfg.source;
        spec.seed = derive_seed(t.seed, {1});
        const auto x = generate(spec);
        const auto op = SystemOperator::matrix(gaussian_matrix(m, n, derive_seed(t.seed, {2, m})));
        const auto w = op.apply(x);
        const auto noisy = add_awgn(w, t.snr, derive_seed(t.seed, {3, m, bits_of(t.snr)}));
        const double var = model_variance(noisy.variance, w, cfg.noiseless_variance);
        const ChannelModel ch = ChannelModel::awgn(op, noisy.y, var);
        const double norm = std::max(energy_of(x), 1e-300);

        ExperimentOutput part{{cs_columns(), {}}, {}};
        const auto common = [&](const char* algo, double err, Cell lambda, Cell energy) {
            part.table.add_row({static_cast<std::int64_t>(n), static_cast<std::int64_t>(m),
                                static_cast<double>(m) / static_cast<double>(n), t.snr,
                                static_cast<std::int64_t>(t.seed), std::string(algo), err,
                                err * static_cast<double>(n) / norm, var, std::move(lambda), std::move(energy)});
        };

        SamplerConfig sc = cfg.sampler;
        sc.seed = derive_seed(t.seed, {4, m, bits_of(t.snr)});
        const auto map = estimate_map(ch, grid_for(cfg, ch), sc);
        common("mcmc", mse(map.x, x), std::monostate{}, map.energy.total());
        if (cfg.write_traces) {
            part.traces.push_back({"cs_m" + std::to_string(m) + "_snr" + snr_label(t.snr) + "_seed" +
                                       std::to_string(t.seed),
                                   map.trace});
        }

        // l1 baseline with the lambda picked in hindsight (best MSE).
        const auto& J = op.matrix();
        const Eigen::VectorXd back = J.transpose() * Eigen::Map<const Eigen::VectorXd>(noisy.y.data(), static_cast<Eigen::Index>(m));
        const double lambda_max = std::max(back.lpNorm<Eigen::Infinity>(), 1e-12);
        FistaOptions fo{cfg.fista.max_iterations, cfg.fista.tolerance};
        double best_err = std::numeric_limits<double>::infinity(), best_lambda = lambda_max;
        for (std::size_t k = 0; k < cfg.fista.lambda_count; ++k) {
            const double frac = cfg.fista.lambda_count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(cfg.fista.lambda_count - 1);
            const double lambda = lambda_max * std::pow(cfg.fista.lambda_min_ratio, frac);
            const auto res = fista(J, noisy.y, lambda, fo);
            const double err = mse(res.x, x);
            if (err < best_err) {
                best_err = err;
                best_lambda = lambda;
            }
        }
        common("fista", best_err, best_lambda, std::monostate{});
        return part;
    });
}

ExperimentOutput run_lossy_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::LossyCompression) throw ConfigError("experiment", "expected a lossy configuration");
    cfg.validate();
    // Task list: MCMC points, then ECSQ points, then the BA curve.
    struct Task {
        enum { Mcmc, Ecsq, Ba } kind;
        double param;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double lambda : cfg.lambdas) {
        for (std::size_t r = 0; r < cfg.runs; ++r) tasks.push_back({Task::Mcmc, lambda, cfg.seed + r});
    }
    for (double step : cfg.lossy.ecsq_steps) {
        for (std::size_t r = 0; r < cfg.runs; ++r) tasks.push_back({Task::Ecsq, step, cfg.seed + r});
    }
    // One task for the whole curve so that each slope warm-starts from its neighbour.
    if (!cfg.lossy.ba_slopes.empty()) tasks.push_back({Task::Ba, 0.0, 0});

    std::optional<DiscreteSource> src;
    std::optional<Eigen::MatrixXd> dist;
    if (!cfg.lossy.ba_slopes.empty()) {
        src = discretize_laplace(cfg.source.scale, cfg.lossy.ba_half_width, cfg.lossy.ba_bins);
        dist = squared_error_matrix(src->points, src->points);
    }

    return run_tasks(cfg, tasks, [&](const Task& t) {
        ExperimentOutput part{{lossy_columns(), {}}, {}};
        if (t.kind == Task::Ba) {
            const auto& slopes = cfg.lossy.ba_slopes;
            const auto pts = blahut_arimoto(src->pmf, *dist, slopes);
            for (std::size_t k = 0; k < slopes.size(); ++k) {
                part.table.add_row(
                    {std::string("ba"), slopes[k], std::monostate{}, pts[k].rate, pts[k].distortion, std::monostate{}});
            }
            return part;
        }
        SourceSpec spec = cfg.source;
        spec.seed = derive_seed(t.seed, {1});
        const auto x = generate(spec);
        if (t.kind == Task::Ecsq) {
            const auto pt = ecsq_rd_point(x, t.param);
            part.table.add_row({std::string("ecsq"), t.param, static_cast<std::int64_t>(t.seed), pt.rate, pt.distortion,
                                std::monostate{}});
            return part;
        }
        const ChannelModel ch = ChannelModel::lossy(x, t.param);
        SamplerConfig sc = cfg.sampler;
        sc.seed = derive_seed(t.seed, {4, bits_of(t.param)});
        const auto map = estimate_map(ch, grid_for(cfg, ch), sc);
        const double rate = h_q(build_counts(map.symbols, map.grid.size(), map.order));
        const std::set<Symbol> used(map.symbols.begin(), map.symbols.end());
        part.table.add_row({std::string("mcmc"), t.param, static_cast<std::int64_t>(t.seed), rate, mse(map.x, x),
                            static_cast<std::int64_t>(used.size())});
        if (cfg.write_traces) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%g", t.param);
            part.traces.push_back({std::string("lossy_lambda") + buf + "_seed" + std::to_string(t.seed), map.trace});
        }
        return part;
    });
}

ExperimentOutput run_denoise_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::DenoiseScalar) throw ConfigError("experiment", "expected a denoise configuration");
    cfg.validate();
    struct Task {
        double snr;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (double snr : cfg.snr_db) {
        for (std::size_t r = 0; r < cfg.runs; ++r) tasks.push_back({snr, cfg.seed + r});
    }
    return run_tasks(cfg, tasks, [&](const Task& t) {
        const std::size_t n = cfg.source.length;
        SourceSpec spec = cfg.source;
        spec.seed = derive_seed(t.seed, {1});
        const auto x = generate(spec);
        const auto noisy = add_awgn(x, t.snr, derive_seed(t.seed, {3, bits_of(t.snr)}));
        const double var = model_variance(noisy.variance, x, cfg.noiseless_variance);
        const ChannelModel ch = ChannelModel::awgn(SystemOperator::identity(n), noisy.y, var);
        const QuantGrid grid = grid_for(cfg, ch);

        SamplerConfig sc = cfg.sampler;
        sc.seed = derive_seed(t.seed, {4, bits_of(t.snr)});
        const auto map = estimate_map(ch, grid, sc);
        // Posterior sampling runs on the grid the MAP search ended with.
        const auto mmse = estimate_mmse(ch, map.grid, sc);
        const double e_map = mse(map.x, x);
        const double e_mmse = mse(mmse.x, x);
        ExperimentOutput part{{denoise_columns(), {}}, {}};
        part.table.add_row({static_cast<std::int64_t>(n), t.snr, var, static_cast<std::int64_t>(t.seed), e_map, e_mmse,
                            e_mmse > 0.0 ? Cell(e_map / e_mmse) : Cell(std::monostate{})});
        if (cfg.write_traces) {
            part.traces.push_back({"denoise_snr" + snr_label(t.snr) + "_seed" + std::to_string(t.seed), map.trace});
        }
        return part;
    });
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
    case ExperimentKind::CsRecovery: return run_cs_experiment(cfg);
    case ExperimentKind::LossyCompression: return run_lossy_experiment(cfg);
    case ExperimentKind::DenoiseScalar: return run_denoise_experiment(cfg);
    }
    throw ConfigError("experiment", "unknown kind");
}

nlohmann::json experiment_metadata(const ExperimentConfig& cfg) {
    nlohmann::json seeds = nlohmann::json::array();
    for (std::size_t r = 0; r < cfg.runs; ++r) seeds.push_back(cfg.seed + r);
    return {{"library", "uniest"},
            {"version", library_version()},
            {"experiment", to_string(cfg.kind)},
            {"seeds", seeds},
            {"config", to_json(cfg)}};
}

std::filesystem::path write_outputs(const ExperimentConfig& cfg, const ExperimentOutput& out) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create '" + cfg.output_dir.string() + "': " + ec.message());
    const auto path = cfg.output_dir / (to_string(cfg.kind) + ".csv");
    emit_csv(out.table, path, experiment_metadata(cfg));
    if (!out.traces.empty()) {
        const auto dir = cfg.output_dir / "traces";
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
        for (const auto& t : out.traces) {
            std::ofstream f(dir / (t.name + ".csv"), std::ios::binary | std::ios::trunc);
            if (!f) throw IoError("cannot write trace " + t.name);
            write_trace_csv(f, t.trace);
        }
    }
    return path;
}

} // namespace uniest
