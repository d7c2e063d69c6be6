#include "uniest/baselines.hpp"
#include "uniest/channel.hpp"
#include "uniest/entropy.hpp"
#include "uniest/errors.hpp"
#include "uniest/harness.hpp"
#include "uniest/quantizer.hpp"
#include "uniest/sampler.hpp"
#include "uniest/sources.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace uniest;

namespace {

using Vec = std::vector<double>;
using Syms = std::vector<Symbol>;

SamplerConfig sampler_config(std::optional<std::size_t> order, std::size_t sweeps, std::size_t restarts,
                             std::size_t burn_in, std::size_t samples, std::uint64_t seed, double s0, double rho,
                             std::size_t sweeps_per_stage) {
    SamplerConfig c;
    c.order = order;
    c.schedule = {s0, rho, sweeps_per_stage, sweeps};
    c.restarts = restarts;
    c.burn_in = burn_in;
    c.samples = samples;
    c.seed = seed;
    return c;
}

ChannelModel make_channel(const Vec& y, double variance, const std::optional<Eigen::MatrixXd>& J) {
    auto op = J ? SystemOperator::matrix(*J) : SystemOperator::identity(y.size());
    return ChannelModel::awgn(std::move(op), y, variance);
}

ExperimentKind kind_from(const std::string& name) {
    if (name == "cs") return ExperimentKind::CsRecovery;
    if (name == "lossy") return ExperimentKind::LossyCompression;
    if (name == "denoise") return ExperimentKind::DenoiseScalar;
    throw ConfigError("experiment", "unknown experiment '" + name + "'");
}

} // namespace

PYBIND11_MODULE(_uniest, m) {
    m.doc() = "Universal MCMC signal estimation";
    m.attr("__version__") = library_version();

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<InvalidOperation>(m, "InvalidOperation", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::enum_<GridKind>(m, "GridKind").value("FIXED", GridKind::Fixed).value("ADAPTIVE", GridKind::Adaptive);

    py::class_<QuantGrid>(m, "QuantGrid")
        .def(py::init<std::vector<double>, GridKind>(), py::arg("levels"), py::arg("kind") = GridKind::Adaptive)
        .def_property_readonly("levels", [](const QuantGrid& g) { return Vec(g.levels().begin(), g.levels().end()); })
        .def_property_readonly("kind", &QuantGrid::kind)
        .def("__len__", &QuantGrid::size)
        .def("__eq__", [](const QuantGrid& a, const QuantGrid& b) { return a == b; });

    m.def("fixed_grid_gamma", &fixed_grid_gamma, py::arg("n"), py::arg("log_base") = std::numbers::e);
    m.def("build_fixed_grid", &build_fixed_grid, py::arg("n"), py::arg("log_base") = std::numbers::e);
    m.def("build_uniform_grid", &build_uniform_grid, py::arg("lo"), py::arg("hi"), py::arg("count"));
    m.def("quantize", [](const Vec& x, const QuantGrid& g) { return quantize(x, g); }, py::arg("x"), py::arg("grid"));
    m.def("dequantize", [](const Syms& s, const QuantGrid& g) { return dequantize(s, g); }, py::arg("symbols"),
          py::arg("grid"));

    m.def("h_q", [](const Syms& s, std::size_t alphabet, std::size_t order) { return h_q(build_counts(s, alphabet, order)); },
          py::arg("symbols"), py::arg("alphabet"), py::arg("order"), "conditional empirical entropy in bits/symbol");
    m.def("default_order", &default_order, py::arg("length"), py::arg("alphabet"));

    py::class_<ChannelModel>(m, "Channel")
        .def(py::init(&make_channel), py::arg("y"), py::arg("variance"), py::arg("matrix") = std::nullopt,
             "AWGN channel through the identity or a dense matrix")
        .def_static("lossy", [](const Vec& x, double lambda) { return ChannelModel::lossy(x, lambda); },
                    py::arg("source"), py::arg("lam"))
        .def_property_readonly("input_size", &ChannelModel::input_size)
        .def_property_readonly("output_size", &ChannelModel::output_size)
        .def("log_likelihood", [](const ChannelModel& ch, const Vec& x) { return log_likelihood(ch, x); }, py::arg("x"));

    py::class_<EnergyTerms>(m, "EnergyTerms")
        .def_readonly("coding_bits", &EnergyTerms::coding_bits)
        .def_readonly("likelihood_bits", &EnergyTerms::likelihood_bits)
        .def_property_readonly("total", &EnergyTerms::total);
    m.def("energy", [](const Syms& s, const QuantGrid& g, std::size_t order, const ChannelModel& ch) {
        return energy(s, g, order, ch);
    }, py::arg("symbols"), py::arg("grid"), py::arg("order"), py::arg("channel"));

    const SamplerConfig defaults;
    py::class_<SamplerConfig>(m, "SamplerConfig")
        .def(py::init(&sampler_config), py::arg("order") = std::nullopt, py::arg("sweeps") = defaults.schedule.total_sweeps,
             py::arg("restarts") = defaults.restarts, py::arg("burn_in") = defaults.burn_in,
             py::arg("samples") = defaults.samples, py::arg("seed") = defaults.seed, py::arg("s0") = defaults.schedule.s0,
             py::arg("rho") = defaults.schedule.rho, py::arg("sweeps_per_stage") = defaults.schedule.sweeps_per_stage);

    py::class_<MapEstimate>(m, "MapEstimate")
        .def_readonly("x", &MapEstimate::x)
        .def_readonly("symbols", &MapEstimate::symbols)
        .def_readonly("grid", &MapEstimate::grid)
        .def_readonly("energy", &MapEstimate::energy)
        .def_readonly("order", &MapEstimate::order);
    py::class_<MmseEstimate>(m, "MmseEstimate")
        .def_readonly("x", &MmseEstimate::x)
        .def_readonly("std_error", &MmseEstimate::std_error)
        .def_readonly("samples", &MmseEstimate::samples);

    m.def("estimate_map", [](const ChannelModel& ch, const std::optional<QuantGrid>& g, const SamplerConfig& c) {
        py::gil_scoped_release release;
        return g ? estimate_map(ch, *g, c) : estimate_map(ch, c);
    }, py::arg("channel"), py::arg("grid") = std::nullopt, py::arg("config") = SamplerConfig{});
    m.def("estimate_mmse", [](const ChannelModel& ch, const QuantGrid& g, const SamplerConfig& c) {
        py::gil_scoped_release release;
        return estimate_mmse(ch, g, c);
    }, py::arg("channel"), py::arg("grid"), py::arg("config") = SamplerConfig{});

    py::class_<FistaResult>(m, "FistaResult")
        .def_readonly("x", &FistaResult::x)
        .def_readonly("objective", &FistaResult::objective)
        .def_readonly("iterations", &FistaResult::iterations)
        .def_readonly("converged", &FistaResult::converged);
    m.def("fista", [](const Eigen::MatrixXd& J, const Vec& y, double lambda, std::size_t max_iterations, double tol) {
        return fista(J, y, lambda, {max_iterations, tol});
    }, py::arg("matrix"), py::arg("y"), py::arg("lam"), py::arg("max_iterations") = 20000, py::arg("tolerance") = 1e-8);

    m.def("ecsq_rd_point", [](const Vec& x, double step) {
        const auto p = ecsq_rd_point(x, step);
        return std::pair{p.rate, p.distortion};
    }, py::arg("x"), py::arg("step"), "(rate bits/symbol, distortion)");
    m.def("blahut_arimoto", [](const Vec& pmf, const Eigen::MatrixXd& d, const Vec& slopes) {
        std::vector<std::pair<double, double>> out;
        for (const auto& p : blahut_arimoto(pmf, d, slopes)) out.emplace_back(p.rate, p.distortion);
        return out;
    }, py::arg("pmf"), py::arg("distortion"), py::arg("slopes"), "list of (rate bits, distortion)");
    m.def("discretize_laplace", [](double scale, double half_width, std::size_t bins) {
        auto s = discretize_laplace(scale, half_width, bins);
        return std::pair{s.points, s.pmf};
    }, py::arg("scale"), py::arg("half_width") = 14.0, py::arg("bins") = 1401);

    m.def("bernoulli_source", [](std::size_t n, double p, std::uint64_t seed, bool gaussian) {
        SourceSpec s;
        s.kind = SourceKind::BernoulliGaussian;
        s.length = n;
        s.p = p;
        s.seed = seed;
        s.amplitude = gaussian ? Amplitude::Gaussian : Amplitude::PlusMinusOne;
        return generate(s);
    }, py::arg("n"), py::arg("p"), py::arg("seed"), py::arg("gaussian_amplitude") = false);
    m.def("laplace_source", [](std::size_t n, double scale, std::uint64_t seed) {
        SourceSpec s;
        s.kind = SourceKind::Laplace;
        s.length = n;
        s.scale = scale;
        s.seed = seed;
        return generate(s);
    }, py::arg("n"), py::arg("scale"), py::arg("seed"));
    m.def("markov_source", [](std::size_t n, std::array<double, 2> stay, std::array<double, 2> levels, std::uint64_t seed) {
        SourceSpec s;
        s.kind = SourceKind::TwoStateMarkov;
        s.length = n;
        s.stay = stay;
        s.levels = levels;
        s.seed = seed;
        return generate(s);
    }, py::arg("n"), py::arg("stay"), py::arg("levels"), py::arg("seed"));
    m.def("gaussian_matrix", &gaussian_matrix, py::arg("rows"), py::arg("cols"), py::arg("seed"));
    m.def("add_awgn", [](const Vec& w, double snr_db, std::uint64_t seed) {
        auto r = add_awgn(w, snr_db, seed);
        return std::pair{r.y, r.variance};
    }, py::arg("w"), py::arg("snr_db"), py::arg("seed"), "(y, noise variance)");

    m.def("run_experiment", [](const std::string& kind, const std::string& yaml) {
        const auto cfg = parse_config(yaml, kind_from(kind));
        ExperimentOutput out;
        {
            py::gil_scoped_release release;
            out = run_experiment(cfg);
        }
        return to_csv(out.table);
    }, py::arg("kind"), py::arg("config_yaml") = "", "runs an experiment and returns its CSV text");
}
