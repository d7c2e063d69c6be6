#include "uniest/errors.hpp"
#include "uniest/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace uniest {

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::CsRecovery: return "cs";
    case ExperimentKind::LossyCompression: return "lossy";
    case ExperimentKind::DenoiseScalar: return "denoise";
    }
    return "?";
}

namespace {

std::vector<double> logspace(double lo, double hi, std::size_t count) {
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        v[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    return v;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
    if (!node.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError(join(path, key), "unknown key");
    }
}

double as_double(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw ConfigError(path, "expected a number");
    const auto s = n.Scalar();
    if (s == "inf" || s == "+inf" || s == ".inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-.inf") return -std::numeric_limits<double>::infinity();
    if (s == "e") return 2.718281828459045;
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(path, "expected a number, got '" + s + "'");
    }
    if (used != s.size()) throw ConfigError(path, "expected a number, got '" + s + "'");
    return v;
}

std::uint64_t as_uint(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw ConfigError(path, "expected a nonnegative integer");
    const auto s = n.Scalar();
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError(path, "expected a nonnegative integer, got '" + s + "'");
    }
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw ConfigError(path, "integer out of range");
    }
}

bool as_bool(const YAML::Node& n, const std::string& path) {
    try {
        return n.as<bool>();
    } catch (const YAML::Exception&) {
        throw ConfigError(path, "expected true or false");
    }
}

std::string as_string(const YAML::Node& n, const std::string& path) {
    if (!n.IsScalar()) throw ConfigError(path, "expected a string");
    return n.Scalar();
}

std::vector<double> as_list(const YAML::Node& n, const std::string& path) {
    if (!n.IsSequence()) throw ConfigError(path, "expected a list");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(as_double(n[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::array<double, 2> as_pair(const YAML::Node& n, const std::string& path) {
    const auto v = as_list(n, path);
    if (v.size() != 2) throw ConfigError(path, "expected exactly two values");
    return {v[0], v[1]};
}

void parse_source(const YAML::Node& n, SourceSpec& s) {
    const std::string p = "source";
    check_keys(n, p, {"kind", "length", "p", "amplitude", "scale", "stay", "levels"});
    if (n["kind"]) {
        const auto k = as_string(n["kind"], p + ".kind");
        if (k == "bernoulli") s.kind = SourceKind::BernoulliGaussian;
        else if (k == "laplace") s.kind = SourceKind::Laplace;
        else if (k == "markov") s.kind = SourceKind::TwoStateMarkov;
        else throw ConfigError(p + ".kind", "expected bernoulli, laplace or markov");
    }
    if (n["length"]) s.length = as_uint(n["length"], p + ".length");
    if (n["p"]) s.p = as_double(n["p"], p + ".p");
    if (n["amplitude"]) {
        const auto a = as_string(n["amplitude"], p + ".amplitude");
        if (a == "pm1") s.amplitude = Amplitude::PlusMinusOne;
        else if (a == "gaussian") s.amplitude = Amplitude::Gaussian;
        else throw ConfigError(p + ".amplitude", "expected pm1 or gaussian");
    }
    if (n["scale"]) s.scale = as_double(n["scale"], p + ".scale");
    if (n["stay"]) s.stay = as_pair(n["stay"], p + ".stay");
    if (n["levels"]) s.levels = as_pair(n["levels"], p + ".levels");
}

void parse_estimator(const YAML::Node& n, ExperimentConfig& cfg) {
    const std::string p = "estimator";
    check_keys(n, p, {"grid", "grid_levels", "log_base", "order", "restarts", "adapt_every", "burn_in", "samples",
                      "schedule", "traces"});
    if (n["grid"]) {
        const auto g = as_string(n["grid"], p + ".grid");
        if (g == "fixed") cfg.grid.kind = GridKind::Fixed;
        else if (g == "adaptive") cfg.grid.kind = GridKind::Adaptive;
        else throw ConfigError(p + ".grid", "expected fixed or adaptive");
    }
    if (n["grid_levels"]) cfg.grid.levels = as_uint(n["grid_levels"], p + ".grid_levels");
    if (n["log_base"]) cfg.grid.log_base = as_double(n["log_base"], p + ".log_base");
    if (n["order"]) {
        if (n["order"].IsScalar() && n["order"].Scalar() == "auto") cfg.sampler.order.reset();
        else cfg.sampler.order = as_uint(n["order"], p + ".order");
    }
    if (n["restarts"]) cfg.sampler.restarts = as_uint(n["restarts"], p + ".restarts");
    if (n["adapt_every"]) cfg.sampler.adapt_every = as_uint(n["adapt_every"], p + ".adapt_every");
    if (n["burn_in"]) cfg.sampler.burn_in = as_uint(n["burn_in"], p + ".burn_in");
    if (n["samples"]) cfg.sampler.samples = as_uint(n["samples"], p + ".samples");
    if (n["traces"]) cfg.write_traces = as_bool(n["traces"], p + ".traces");
    if (const auto s = n["schedule"]) {
        const std::string sp = p + ".schedule";
        check_keys(s, sp, {"s0", "rho", "sweeps_per_stage", "sweeps"});
        auto& sch = cfg.sampler.schedule;
        if (s["s0"]) sch.s0 = as_double(s["s0"], sp + ".s0");
        if (s["rho"]) sch.rho = as_double(s["rho"], sp + ".rho");
        if (s["sweeps_per_stage"]) sch.sweeps_per_stage = as_uint(s["sweeps_per_stage"], sp + ".sweeps_per_stage");
        if (s["sweeps"]) sch.total_sweeps = as_uint(s["sweeps"], sp + ".sweeps");
    }
}

} // namespace

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    switch (kind) {
    case ExperimentKind::CsRecovery:
        cfg.source.kind = SourceKind::BernoulliGaussian;
        cfg.source.length = 256;
        cfg.source.p = 0.03;
        cfg.measurement_ratios = {0.3, 0.4, 0.5, 0.7};
        cfg.snr_db = {5.0, 10.0};
        cfg.runs = 10;
        // A 73-level grid at N = 256 overfits with order-1 contexts, and the
        // short sampler schedule freezes before the sparse support is found.
        cfg.sampler.order = 0;
        cfg.sampler.schedule.s0 = 1.0;
        cfg.sampler.schedule.rho = 1.01;
        cfg.sampler.schedule.total_sweeps = 2000;
        break;
    case ExperimentKind::LossyCompression:
        cfg.source.kind = SourceKind::Laplace;
        cfg.source.length = 2000;
        cfg.source.scale = 1.0;
        cfg.lambdas = logspace(0.4, 8.0, 8);
        cfg.sampler.order = 0;
        cfg.lossy.ecsq_steps = logspace(0.05, 6.0, 40);
        cfg.lossy.ba_slopes = logspace(0.05, 30.0, 24);
        cfg.runs = 1;
        break;
    case ExperimentKind::DenoiseScalar:
        cfg.source.kind = SourceKind::TwoStateMarkov;
        cfg.source.length = 256;
        cfg.source.stay = {0.95, 0.95};
        cfg.source.levels = {0.0, 1.0};
        cfg.snr_db = {0.0, 5.0, 10.0};
        cfg.runs = 10;
        cfg.grid.kind = GridKind::Adaptive;
        cfg.grid.levels = 4;
        cfg.sampler.schedule.s0 = 1.0;
        cfg.sampler.schedule.rho = 1.01;
        cfg.sampler.schedule.total_sweeps = 2000;
        cfg.sampler.burn_in = 200;
        cfg.sampler.samples = 1000;
        break;
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& text, ExperimentKind kind) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("<root>", std::string("YAML parse error: ") + e.what());
    }
    ExperimentConfig cfg = default_config(kind);
    if (root.IsNull()) {
        cfg.validate();
        return cfg;
    }
    check_keys(root, "", {"experiment", "seed", "runs", "threads", "output", "source", "channel", "estimator", "fista",
                          "baselines"});
    if (root["experiment"]) {
        const auto e = as_string(root["experiment"], "experiment");
        if (e != to_string(kind)) throw ConfigError("experiment", "config is for '" + e + "', not '" + to_string(kind) + "'");
    }
    if (root["seed"]) cfg.seed = as_uint(root["seed"], "seed");
    if (root["runs"]) cfg.runs = as_uint(root["runs"], "runs");
    if (root["threads"]) cfg.threads = as_uint(root["threads"], "threads");
    if (root["output"]) cfg.output_dir = as_string(root["output"], "output");
    if (root["source"]) parse_source(root["source"], cfg.source);
    if (const auto c = root["channel"]) {
        check_keys(c, "channel", {"measurement_ratios", "snr_db", "lambdas", "noiseless_variance"});
        if (c["measurement_ratios"]) cfg.measurement_ratios = as_list(c["measurement_ratios"], "channel.measurement_ratios");
        if (c["snr_db"]) cfg.snr_db = as_list(c["snr_db"], "channel.snr_db");
        if (c["lambdas"]) cfg.lambdas = as_list(c["lambdas"], "channel.lambdas");
        if (c["noiseless_variance"]) cfg.noiseless_variance = as_double(c["noiseless_variance"], "channel.noiseless_variance");
    }
    if (root["estimator"]) parse_estimator(root["estimator"], cfg);
    if (const auto f = root["fista"]) {
        check_keys(f, "fista", {"lambda_count", "lambda_min_ratio", "max_iterations", "tolerance"});
        if (f["lambda_count"]) cfg.fista.lambda_count = as_uint(f["lambda_count"], "fista.lambda_count");
        if (f["lambda_min_ratio"]) cfg.fista.lambda_min_ratio = as_double(f["lambda_min_ratio"], "fista.lambda_min_ratio");
        if (f["max_iterations"]) cfg.fista.max_iterations = as_uint(f["max_iterations"], "fista.max_iterations");
        if (f["tolerance"]) cfg.fista.tolerance = as_double(f["tolerance"], "fista.tolerance");
    }
    if (const auto b = root["baselines"]) {
        check_keys(b, "baselines", {"ecsq_steps", "ba_slopes", "ba_half_width", "ba_bins"});
        if (b["ecsq_steps"]) cfg.lossy.ecsq_steps = as_list(b["ecsq_steps"], "baselines.ecsq_steps");
        if (b["ba_slopes"]) cfg.lossy.ba_slopes = as_list(b["ba_slopes"], "baselines.ba_slopes");
        if (b["ba_half_width"]) cfg.lossy.ba_half_width = as_double(b["ba_half_width"], "baselines.ba_half_width");
        if (b["ba_bins"]) cfg.lossy.ba_bins = as_uint(b["ba_bins"], "baselines.ba_bins");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind kind) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), kind);
}

void ExperimentConfig::validate() const {
    try {
        source.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("source", e.what());
    }
    if (source.length < 2) throw ConfigError("source.length", "must be at least 2");
    if (runs == 0) throw ConfigError("runs", "must be positive");
    if (threads == 0) throw ConfigError("threads", "must be positive");
    if (!(grid.log_base > 1.0) || !std::isfinite(grid.log_base)) throw ConfigError("estimator.log_base", "must exceed 1");
    if (grid.kind == GridKind::Adaptive && grid.levels == 0) throw ConfigError("estimator.grid_levels", "must be positive");
    if (sampler.order && *sampler.order >= source.length) throw ConfigError("estimator.order", "must be below source.length");
    if (sampler.restarts == 0) throw ConfigError("estimator.restarts", "must be positive");
    if (sampler.samples == 0) throw ConfigError("estimator.samples", "must be positive");
    try {
        sampler.schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("estimator.schedule", e.what());
    }
    if (!(noiseless_variance > 0.0)) throw ConfigError("channel.noiseless_variance", "must be positive");

    auto need = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(field, what);
    };
    switch (kind) {
    case ExperimentKind::CsRecovery:
        need(!measurement_ratios.empty(), "channel.measurement_ratios", "sweep is empty");
        for (double r : measurement_ratios) {
            need(r > 0.0 && std::isfinite(r) && std::lround(r * static_cast<double>(source.length)) >= 1,
                 "channel.measurement_ratios", "each ratio must give at least one measurement");
        }
        need(!snr_db.empty(), "channel.snr_db", "sweep is empty");
        for (double s : snr_db) need(!std::isnan(s) && s > -std::numeric_limits<double>::infinity(), "channel.snr_db", "bad SNR");
        need(fista.lambda_count >= 1, "fista.lambda_count", "must be positive");
        need(fista.lambda_min_ratio > 0.0 && fista.lambda_min_ratio <= 1.0, "fista.lambda_min_ratio", "must lie in (0, 1]");
        break;
    case ExperimentKind::LossyCompression:
        need(!lambdas.empty(), "channel.lambdas", "sweep is empty");
        for (double l : lambdas) need(l > 0.0 && std::isfinite(l), "channel.lambdas", "lambdas must be positive");
        for (double s : lossy.ecsq_steps) need(s > 0.0 && std::isfinite(s), "baselines.ecsq_steps", "steps must be positive");
        for (double b : lossy.ba_slopes) need(b >= 0.0 && std::isfinite(b), "baselines.ba_slopes", "slopes must be nonnegative");
        need(lossy.ba_half_width > 0.0, "baselines.ba_half_width", "must be positive");
        need(lossy.ba_bins >= 2, "baselines.ba_bins", "need at least two bins");
        need(source.kind == SourceKind::Laplace || lossy.ba_slopes.empty(), "baselines.ba_slopes",
             "the rate-distortion reference is only defined for Laplace sources");
        break;
    case ExperimentKind::DenoiseScalar:
        need(!snr_db.empty(), "channel.snr_db", "sweep is empty");
        for (double s : snr_db) need(!std::isnan(s) && s > -std::numeric_limits<double>::infinity(), "channel.snr_db", "bad SNR");
        break;
    }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    using nlohmann::json;
    auto num = [](double v) -> json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    auto list = [&](const std::vector<double>& v) {
        json a = json::array();
        for (double x : v) a.push_back(num(x));
        return a;
    };
    json j;
    j["experiment"] = to_string(cfg.kind);
    j["seed"] = cfg.seed;
    j["runs"] = cfg.runs;
    j["threads"] = cfg.threads;
    j["output"] = cfg.output_dir.string();
    j["source"] = {{"kind", to_string(cfg.source.kind)},
                   {"length", cfg.source.length},
                   {"p", cfg.source.p},
                   {"amplitude", to_string(cfg.source.amplitude)},
                   {"scale", cfg.source.scale},
                   {"stay", {cfg.source.stay[0], cfg.source.stay[1]}},
                   {"levels", {cfg.source.levels[0], cfg.source.levels[1]}}};
    j["channel"] = {{"measurement_ratios", list(cfg.measurement_ratios)},
                    {"snr_db", list(cfg.snr_db)},
                    {"lambdas", list(cfg.lambdas)},
                    {"noiseless_variance", cfg.noiseless_variance}};
    const auto& s = cfg.sampler;
    j["estimator"] = {{"grid", cfg.grid.kind == GridKind::Fixed ? "fixed" : "adaptive"},
                      {"grid_levels", cfg.grid.levels},
                      {"log_base", cfg.grid.log_base},
                      {"order", s.order ? json(*s.order) : json("auto")},
                      {"restarts", s.restarts},
                      {"adapt_every", s.adapt_every},
                      {"burn_in", s.burn_in},
                      {"samples", s.samples},
                      {"traces", cfg.write_traces},
                      {"schedule",
                       {{"s0", s.schedule.s0},
                        {"rho", s.schedule.rho},
                        {"sweeps_per_stage", s.schedule.sweeps_per_stage},
                        {"sweeps", s.schedule.total_sweeps}}}};
    j["fista"] = {{"lambda_count", cfg.fista.lambda_count},
                  {"lambda_min_ratio", cfg.fista.lambda_min_ratio},
                  {"max_iterations", cfg.fista.max_iterations},
                  {"tolerance", cfg.fista.tolerance}};
    j["baselines"] = {{"ecsq_steps", list(cfg.lossy.ecsq_steps)},
                      {"ba_slopes", list(cfg.lossy.ba_slopes)},
                      {"ba_half_width", cfg.lossy.ba_half_width},
                      {"ba_bins", cfg.lossy.ba_bins}};
    return j;
}

} // namespace uniest
